#pragma once

// One-step methods: the DRG scheme
//   u1 = phi_c(phi_c^{-1}(u0) + h Omega_bar(u0, u1) grad_bar H(u0, u1)),  c = c(u0, u1),
// the energy-preserving collocation-like scheme, the implicit midpoint rule,
// and adjoint/composition combinators. All implicit relations are solved by
// plain fixed-point iteration.

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "drg/errors.hpp"
#include "drg/geometry.hpp"
#include "drg/gradients.hpp"
#include "drg/problems.hpp"
#include "drg/quadrature.hpp"

namespace drg {

struct StepConfig {
  double h = 0.1;
  double fp_tol = 1e-14;  // ambient sup-norm of the iterate update
  int fp_max_iter = 200;
};

struct StepOutcome {
  Vector point;
  int iterations = 0;
};

namespace detail {

inline void validate(const StepConfig& cfg) {
  if (!std::isfinite(cfg.h)) throw std::invalid_argument("step size must be finite");
  if (!(cfg.fp_tol > 0.0)) throw std::invalid_argument("fp_tol must be positive");
  if (cfg.fp_max_iter < 1) throw std::invalid_argument("fp_max_iter must be at least 1");
}

inline double sup_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

[[noreturn]] inline void fail_to_converge(const char* method, const StepConfig& cfg, double last) {
  std::ostringstream msg;
  msg << method << ": fixed-point iteration did not converge in " << cfg.fp_max_iter
      << " iterations (h = " << cfg.h << ", last update " << last << "); reduce the step size";
  throw NonConvergence(msg.str(), cfg.fp_max_iter, last);
}

}  // namespace detail

/// One DRG step from u. With `adjoint` the roles of (u_k, u_{k+1}) are
/// swapped in grad_bar, Omega_bar and c, which realizes (psi_{-h})^{-1}.
template <Problem P>
StepOutcome drg_step(const P& problem, const DiscreteGradient& drg, const OmegaBar& ob,
                     const StepConfig& cfg, const Vector& u, bool adjoint = false) {
  detail::validate(cfg);
  const auto& m = problem.manifold();
  detail::require_size(u, m.ambient_dim(), "drg_step");
  if (cfg.h == 0.0) return {u, 0};

  Vector v = u;
  double last = 0.0;
  for (int it = 1; it <= cfg.fp_max_iter; ++it) {
    const Vector& a = adjoint ? v : u;
    const Vector& b = adjoint ? u : v;
    const Vector c = center(m, drg.center, a, b);
    const Vector g = evaluate(problem, drg, a, b);
    const Vector w = m.inverse_retract(c, u) + cfg.h * omega_bar(problem, ob, c, a, b, g);
    Vector next = m.retract(c, w);
    last = detail::sup_norm(next - v);
    v = std::move(next);
    if (last <= cfg.fp_tol) return {v, it};
  }
  detail::fail_to_converge(adjoint ? "adjoint DRG step" : "DRG step", cfg, last);
}

/// Collocation-like step with center c = u0.
///
/// Unknowns are the stage slopes f_j = T_{U_j} phi_c^{-1}(Omega(U_j) grad_j H) in
/// T_c M. The tangent polynomial is sigma(tau h) = phi_c^{-1}(u0) + h sum_j
/// (int_0^tau l_j) f_j, U_j = phi_c(sigma(c_j h)), and grad_j H is the nq-point
/// Gauss approximation of
///   int_0^1 l_j / b_j (T_{U_j} phi_c^{-1})^T (T_{sigma} phi_c)^T grad H(phi_c(sigma)) dxi.
template <Problem P>
StepOutcome collocation_step(const P& problem, const CollocationTableau& tab, int nq,
                             const StepConfig& cfg, const Vector& u0) {
  detail::validate(cfg);
  const auto& m = problem.manifold();
  detail::require_size(u0, m.ambient_dim(), "collocation_step");
  if (cfg.h == 0.0) return {u0, 0};

  const int s = tab.stages();
  const Vector& c = u0;
  const Vector x0 = m.inverse_retract(c, u0);
  const QuadratureRule& rule = detail::cached_gauss_legendre(nq);
  const int nodes = static_cast<int>(rule.size());

  // Quadrature-node tables: int_0^{xi_q} l_j and w_q l_j(xi_q) / b_j.
  std::vector<std::vector<double>> path_coeff(nodes);
  Matrix weight(nodes, s);
  for (int q = 0; q < nodes; ++q) {
    path_coeff[q] = tab.integrated_basis(rule.nodes[q]);
    for (int j = 0; j < s; ++j) weight(q, j) = rule.weights[q] * tab.lagrange(j, rule.nodes[q]) / tab.weights()[j];
  }

  std::vector<Vector> slopes(s, Vector::Zero(m.ambient_dim()));
  double last = 0.0;
  for (int it = 1; it <= cfg.fp_max_iter; ++it) {
    // pulled-back gradient along the tangent polynomial
    std::vector<Vector> pulled(nodes);
    for (int q = 0; q < nodes; ++q) {
      Vector sigma = x0;
      for (int j = 0; j < s; ++j) sigma += (cfg.h * path_coeff[q][j]) * slopes[j];
      const Vector point = m.retract(c, sigma);
      pulled[q] = m.tangent_map_transpose(c, sigma, riemannian_gradient(problem, point));
    }
    std::vector<Vector> next(s);
    last = 0.0;
    for (int i = 0; i < s; ++i) {
      Vector sigma = x0;
      for (int j = 0; j < s; ++j) sigma += (cfg.h * tab.coefficient(i, j)) * slopes[j];
      const Vector stage = m.retract(c, sigma);
      Vector avg = Vector::Zero(m.ambient_dim());
      for (int q = 0; q < nodes; ++q) avg += weight(q, i) * pulled[q];
      const Vector grad_i = m.inverse_tangent_map_transpose(c, stage, avg);
      next[i] = m.inverse_tangent_map(c, stage, problem.apply_omega(stage, grad_i));
      last = std::max(last, detail::sup_norm(next[i] - slopes[i]));
    }
    slopes = std::move(next);
    if (last <= cfg.fp_tol) {
      Vector end = x0;
      for (int j = 0; j < s; ++j) end += (cfg.h * tab.weights()[j]) * slopes[j];
      return {m.retract(c, end), it};
    }
  }
  detail::fail_to_converge("collocation step", cfg, last);
}

/// u1 = u0 + h F((u0 + u1) / 2) in ambient coordinates, no projection.
template <Problem P>
StepOutcome implicit_midpoint_step(const P& problem, const StepConfig& cfg, const Vector& u) {
  detail::validate(cfg);
  detail::require_size(u, problem.manifold().ambient_dim(), "implicit_midpoint_step");
  if (cfg.h == 0.0) return {u, 0};
  Vector v = u;
  double last = 0.0;
  for (int it = 1; it <= cfg.fp_max_iter; ++it) {
    Vector next = u + cfg.h * problem.field(0.5 * (u + v));
    last = detail::sup_norm(next - v);
    v = std::move(next);
    if (last <= cfg.fp_tol) return {v, it};
  }
  detail::fail_to_converge("implicit midpoint step", cfg, last);
}

// ---------------------------------------------------------------------------
// Method descriptions

/// A one-step map psi_h, independent of the problem it is applied to.
class OneStepMethod {
 public:
  enum class Kind { drg, collocation, composition, implicit_midpoint };
  struct Stage;

  static OneStepMethod drg(DiscreteGradient gradient, OmegaBar omega = {}, bool adjoint = false) {
    OneStepMethod out(Kind::drg);
    out.gradient_ = gradient;
    out.omega_ = omega;
    out.adjoint_ = adjoint;
    out.name_ = std::string(to_string(gradient.kind)) + (adjoint ? "*" : "");
    return out;
  }

  static OneStepMethod collocation(CollocationTableau tableau, int nq = 16) {
    OneStepMethod out(Kind::collocation);
    out.name_ = "coll" + std::to_string(tableau.stages());
    out.tableau_ = std::make_shared<const CollocationTableau>(std::move(tableau));
    out.gradient_.nq = nq;
    return out;
  }

  static OneStepMethod implicit_midpoint() {
    OneStepMethod out(Kind::implicit_midpoint);
    out.name_ = "imp";
    return out;
  }

  /// Substeps applied in list order with step sizes coefficient * h.
  static OneStepMethod composition(std::vector<Stage> stages, std::string name = "composition");

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  OneStepMethod& rename(std::string name) {
    name_ = std::move(name);
    return *this;
  }

  const DiscreteGradient& gradient() const noexcept { return gradient_; }
  const OmegaBar& omega() const noexcept { return omega_; }
  bool is_adjoint() const noexcept { return adjoint_; }
  const CollocationTableau& tableau() const { return *tableau_; }
  int quadrature_nodes() const noexcept { return gradient_.nq; }
  const std::vector<Stage>& stages() const noexcept { return stages_; }

  template <Problem P>
  StepOutcome step(const P& problem, const Vector& u, const StepConfig& cfg) const;

 private:
  explicit OneStepMethod(Kind kind) : kind_(kind) {}

  Kind kind_;
  std::string name_;
  DiscreteGradient gradient_{};
  OmegaBar omega_{};
  bool adjoint_ = false;
  std::shared_ptr<const CollocationTableau> tableau_;
  std::vector<Stage> stages_;
};

struct OneStepMethod::Stage {
  OneStepMethod method;
  double coefficient;
};

inline OneStepMethod OneStepMethod::composition(std::vector<Stage> stages, std::string name) {
  if (stages.empty()) throw std::invalid_argument("composition needs at least one stage");
  double sum = 0.0;
  for (const auto& st : stages) sum += st.coefficient;
  if (std::abs(sum - 1.0) > 1e-14) {
    throw std::invalid_argument("composition coefficients must sum to 1, got " + std::to_string(sum));
  }
  OneStepMethod out(Kind::composition);
  out.stages_ = std::move(stages);
  out.name_ = std::move(name);
  return out;
}

template <Problem P>
StepOutcome OneStepMethod::step(const P& problem, const Vector& u, const StepConfig& cfg) const {
  switch (kind_) {
    case Kind::drg:
      return drg_step(problem, gradient_, omega_, cfg, u, adjoint_);
    case Kind::collocation:
      return collocation_step(problem, *tableau_, gradient_.nq, cfg, u);
    case Kind::implicit_midpoint:
      return implicit_midpoint_step(problem, cfg, u);
    case Kind::composition: {
      StepOutcome out{u, 0};
      for (const auto& st : stages_) {
        StepConfig sub = cfg;
        sub.h = st.coefficient * cfg.h;
        StepOutcome next = st.method.step(problem, out.point, sub);
        out.point = std::move(next.point);
        out.iterations += next.iterations;
      }
      return out;
    }
  }
  throw std::logic_error("unknown method kind");
}

/// psi*_h = (psi_{-h})^{-1}. DRG steps swap their argument roles; compositions
/// reverse and take adjoints stagewise; the implicit midpoint rule is
/// self-adjoint. Collocation steps with a frozen center are not supported.
inline OneStepMethod adjoint_of(const OneStepMethod& method) {
  switch (method.kind()) {
    case OneStepMethod::Kind::drg: {
      OneStepMethod out = OneStepMethod::drg(method.gradient(), method.omega(), !method.is_adjoint());
      return out;
    }
    case OneStepMethod::Kind::implicit_midpoint:
      return method;
    case OneStepMethod::Kind::composition: {
      std::vector<OneStepMethod::Stage> stages;
      for (auto it = method.stages().rbegin(); it != method.stages().rend(); ++it) {
        stages.push_back({adjoint_of(it->method), it->coefficient});
      }
      return OneStepMethod::composition(std::move(stages), method.name() + "*");
    }
    case OneStepMethod::Kind::collocation:
      break;
  }
  throw std::invalid_argument("adjoint is only available for DRG steps and their compositions");
}

inline OneStepMethod compose(std::vector<OneStepMethod::Stage> stages, std::string name = "composition") {
  return OneStepMethod::composition(std::move(stages), std::move(name));
}

// ---------------------------------------------------------------------------
// Presets

/// Triple-jump coefficients (g, 1 - 2g, g) with g = 1 / (2 - 2^{1/3}).
inline std::pair<double, double> triple_jump_coefficients() {
  const double cbrt2 = std::cbrt(2.0);
  const double outer = 1.0 / (2.0 - cbrt2);
  return {outer, 1.0 - 2.0 * outer};
}

inline OneStepMethod triple_jump(const OneStepMethod& base, std::string name) {
  const auto [outer, inner] = triple_jump_coefficients();
  return compose({{base, outer}, {base, inner}, {base, outer}}, std::move(name));
}

// Composed Itoh-Abe schemes need a frame that does not jump between substeps.
inline OneStepMethod itoh_abe_midpoint_center(int nq = 16, FrameKind frame = FrameKind::continuous) {
  return OneStepMethod::drg({DrgKind::itoh_abe, CenterKind::chordal_midpoint, nq, frame}, {OmegaKind::center});
}

/// psi_{h/2} o psi*_{h/2} for the Itoh-Abe DRG: order 2, symmetric.
inline OneStepMethod preset_ia2(int nq = 16) {
  const OneStepMethod ia = itoh_abe_midpoint_center(nq);
  return compose({{adjoint_of(ia), 0.5}, {ia, 0.5}}, "ia2");
}

/// Three Itoh-Abe substeps psi_a o psi*_b o psi_a with a = 1 - 1/sqrt(2),
/// b = sqrt(2) - 1, so that 2a + b = 1 and the h^2 error terms of psi and
/// psi* cancel (2a^2 - b^2 = 0).
inline OneStepMethod preset_comp2(int nq = 16) {
  const OneStepMethod ia = itoh_abe_midpoint_center(nq);
  const double b = std::sqrt(2.0) - 1.0;
  const double a = 0.5 * (1.0 - b);
  return compose({{ia, a}, {adjoint_of(ia), b}, {ia, a}}, "comp2");
}

/// Triple jump of the symmetrized Itoh-Abe DRG: order 4.
inline OneStepMethod preset_comp_sia(int nq = 16) {
  return triple_jump(OneStepMethod::drg({DrgKind::symmetrized_itoh_abe, CenterKind::chordal_midpoint, nq},
                                        {OmegaKind::center}),
                     "comp-sia");
}

/// Triple jump of ia2 (six Itoh-Abe substeps): order 4.
inline OneStepMethod preset_comp4(int nq = 16) { return triple_jump(preset_ia2(nq), "comp4"); }

// ---------------------------------------------------------------------------
// Trajectories

struct RunRecord {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> energies;
  std::vector<int> iterations;  // per step; iterations[k] produced states[k + 1]
  std::optional<std::string> error;

  std::size_t size() const noexcept { return states.size(); }
  double energy_error(std::size_t k) const { return energies.at(k) - energies.at(0); }
  double max_energy_error() const {
    double worst = 0.0;
    for (std::size_t k = 0; k < energies.size(); ++k) worst = std::max(worst, std::abs(energy_error(k)));
    return worst;
  }
  bool ok() const noexcept { return !error.has_value(); }
};

/// Number of steps N with N h = t_end (relative tolerance 1e-12).
inline long step_count(double h, double t_end) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (t_end < 0.0) throw std::invalid_argument("t_end must be non-negative");
  const double ratio = t_end / h;
  const double n = std::round(ratio);
  if (std::abs(n * h - t_end) > 1e-12 * std::max(1.0, std::abs(t_end))) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "t_end = " << t_end << " is not an integer multiple of h = " << h;
    throw std::invalid_argument(msg.str());
  }
  return static_cast<long>(n);
}

/// Applies the method N = t_end / h times. Solver failures truncate the record
/// and set `error`.
template <Problem P>
RunRecord integrate(const OneStepMethod& method, const P& problem, const StepConfig& cfg,
                    const Vector& u0, double t_end) {
  const long steps = step_count(cfg.h, t_end);
  RunRecord rec;
  rec.times.reserve(steps + 1);
  rec.states.reserve(steps + 1);
  rec.energies.reserve(steps + 1);
  rec.iterations.reserve(steps);
  rec.times.push_back(0.0);
  rec.states.push_back(u0);
  rec.energies.push_back(problem.energy(u0));
  Vector u = u0;
  for (long k = 1; k <= steps; ++k) {
    try {
      StepOutcome out = method.step(problem, u, cfg);
      u = std::move(out.point);
      rec.iterations.push_back(out.iterations);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "step " << k << " (t = " << (k - 1) * cfg.h << "): " << e.what();
      rec.error = msg.str();
      return rec;
    }
    rec.times.push_back(static_cast<double>(k) * cfg.h);
    rec.energies.push_back(problem.energy(u));
    rec.states.push_back(u);
  }
  return rec;
}

/// Final state only, without storing the trajectory.
template <Problem P>
Vector advance(const OneStepMethod& method, const P& problem, const StepConfig& cfg, const Vector& u0,
               double t_end) {
  const long steps = step_count(cfg.h, t_end);
  Vector u = u0;
  for (long k = 0; k < steps; ++k) u = method.step(problem, u, cfg).point;
  return u;
}

}  // namespace drg

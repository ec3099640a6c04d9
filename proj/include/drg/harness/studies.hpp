#pragma once

// Experiments driven by an ExperimentSpec: single runs, order studies, energy
// drift comparisons and level-curve trajectories, each producing CSV tables.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "drg/harness/config.hpp"
#include "drg/harness/csv.hpp"
#include "drg/integrators.hpp"
#include "drg/problems.hpp"

namespace drg::harness {

using AnyProblem = std::variant<SpinningTop, SpinChain, Oscillator>;

struct ProblemSetup {
  AnyProblem problem;
  Vector initial;
  std::optional<ExactChainSolution> chain_solution;  // chain with the travelling-wave start only
};

inline ExactChainSolution chain_solution_for(const ExperimentSpec& spec) {
  ExactChainSolution sol = standard_chain_setup().solution;
  sol.angle = spec.chain_angle;
  sol.wavenumber = std::isnan(spec.chain_wavenumber) ? 2.0 * std::numbers::pi / spec.spins : spec.chain_wavenumber;
  return sol;
}

inline ProblemSetup make_problem(const ExperimentSpec& spec) {
  switch (spec.problem) {
    case ProblemId::top: {
      SpinningTop top(spec.inertia);
      return {top, spec.initial.value_or(standard_top_setup().initial), std::nullopt};
    }
    case ProblemId::chain: {
      SpinChain chain(spec.spins);
      if (spec.initial) return {chain, *spec.initial, std::nullopt};
      const ExactChainSolution sol = chain_solution_for(spec);
      return {chain, exact_solution(sol, chain, 0.0), sol};
    }
    case ProblemId::oscillator: {
      Vector u0(2);
      u0 << 1.0, 0.0;
      return {Oscillator(), spec.initial.value_or(u0), std::nullopt};
    }
  }
  throw std::logic_error("unknown problem id");
}

/// Exact state at time t when one is known for this setup.
inline std::optional<Vector> exact_state(const ProblemSetup& setup, double t) {
  if (const auto* chain = std::get_if<SpinChain>(&setup.problem)) {
    if (setup.chain_solution) return exact_solution(*setup.chain_solution, *chain, t);
    return std::nullopt;
  }
  if (const auto* osc = std::get_if<Oscillator>(&setup.problem)) return osc->exact(setup.initial, t);
  return std::nullopt;
}

/// Builds the one-step method for a method id. Per-id defaults: IA uses the
/// left center and Omega(u); the other DRGs use the chordal midpoint and
/// Omega at the center.
inline OneStepMethod make_method(const std::string& id, const MethodSettings& s) {
  auto drg_method = [&](DrgKind kind, CenterKind c, OmegaKind o) {
    const DiscreteGradient g{kind, s.center.value_or(c), s.nq, s.frame};
    return OneStepMethod::drg(g, OmegaBar{s.omega.value_or(o), s.omega_node});
  };
  OneStepMethod m = [&]() -> OneStepMethod {
    if (id == "avf") return drg_method(DrgKind::avf, CenterKind::chordal_midpoint, OmegaKind::center);
    if (id == "mp") return drg_method(DrgKind::midpoint, CenterKind::chordal_midpoint, OmegaKind::center);
    if (id == "ia") return drg_method(DrgKind::itoh_abe, CenterKind::left, OmegaKind::left);
    if (id == "sia") {
      return drg_method(DrgKind::symmetrized_itoh_abe, CenterKind::chordal_midpoint, OmegaKind::center);
    }
    if (id == "mmp") {
      return drg_method(DrgKind::modified_midpoint, CenterKind::chordal_midpoint, OmegaKind::center);
    }
    if (id == "imp") return OneStepMethod::implicit_midpoint();
    if (id == "coll") return OneStepMethod::collocation(CollocationTableau::gauss(s.collocation_s), s.nq);
    if (id == "ia2") return preset_ia2(s.nq);
    if (id == "comp2") return preset_comp2(s.nq);
    if (id == "comp-sia") return preset_comp_sia(s.nq);
    if (id == "comp4") return preset_comp4(s.nq);
    throw ConfigError("unknown method id '" + id + "'; valid ids: " + joined(method_ids()));
  }();
  if (s.adjoint) {
    try {
      m = adjoint_of(m);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("adjoint: ") + e.what());
    }
  }
  return m.rename(id + (s.adjoint ? "*" : ""));
}

inline double error_norm(const AnyProblem& problem, Norm norm, const Vector& u, const Vector& ref) {
  if (norm == Norm::ambient) return (u - ref).norm();
  return std::visit([&](const auto& p) { return p.manifold().distance(u, ref); }, problem);
}

inline RunRecord integrate_any(const OneStepMethod& method, const AnyProblem& problem, const StepConfig& cfg,
                               const Vector& u0, double t_end) {
  return std::visit([&](const auto& p) { return integrate(method, p, cfg, u0, t_end); }, problem);
}

inline Vector advance_any(const OneStepMethod& method, const AnyProblem& problem, const StepConfig& cfg,
                          const Vector& u0, double t_end) {
  return std::visit([&](const auto& p) { return advance(method, p, cfg, u0, t_end); }, problem);
}

/// Largest deviation of a spin norm from one (zero for the flat problem).
inline double manifold_defect(const AnyProblem& problem, const Vector& u) {
  if (std::holds_alternative<Oscillator>(problem)) return 0.0;
  return SphereProduct(static_cast<int>(u.size() / 3)).manifold_defect(u);
}

// ---------------------------------------------------------------------------
// run

/// Columns t, x0..x{n-1}, H, dH with dH = H(u^k) - H(u^0).
inline CsvTable trajectory_table(const RunRecord& rec) {
  CsvTable t;
  const Eigen::Index n = rec.states.empty() ? 0 : rec.states.front().size();
  t.header.push_back("t");
  for (Eigen::Index i = 0; i < n; ++i) t.header.push_back("x" + std::to_string(i));
  t.header.push_back("H");
  t.header.push_back("dH");
  for (std::size_t k = 0; k < rec.size(); ++k) {
    std::vector<double> row;
    row.reserve(n + 3);
    row.push_back(rec.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(rec.states[k](i));
    row.push_back(rec.energies[k]);
    row.push_back(rec.energy_error(k));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline RunRecord run(const ExperimentSpec& spec) {
  const ProblemSetup setup = make_problem(spec);
  step_count(spec.h, spec.t_end);  // reject non-integral t_end / h before integrating
  return integrate_any(make_method(spec.method, spec.settings), setup.problem, spec.step_config(spec.h),
                       setup.initial, spec.t_end);
}

// ---------------------------------------------------------------------------
// order study

struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  int points = 0;
};

/// Least-squares slope of log(err) against log(h) over the points with
/// floor < err < ceiling; NaN when fewer than two points qualify.
inline SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& err, double floor,
                          double ceiling) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < h.size() && i < err.size(); ++i) {
    if (std::isfinite(err[i]) && err[i] > floor && err[i] < ceiling && h[i] > 0.0) {
      pts.emplace_back(std::log(h[i]), std::log(err[i]));
    }
  }
  SlopeFit fit;
  fit.points = static_cast<int>(pts.size());
  if (pts.size() < 2) return fit;
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  fit.slope = sxy / sxx;
  return fit;
}

struct OrderRow {
  double h = 0.0;
  double err_ambient = std::numeric_limits<double>::quiet_NaN();
  double err_riemannian = std::numeric_limits<double>::quiet_NaN();
  std::optional<std::string> failure;
};

struct OrderStudyResult {
  std::string method;
  std::vector<OrderRow> rows;
  SlopeFit fit;  // in the configured norm
  std::string reference;

  CsvTable table() const {
    CsvTable t;
    t.header = {"h", "err_ambient", "err_riemannian"};
    for (const auto& r : rows) t.rows.push_back({r.h, r.err_ambient, r.err_riemannian});
    t.comments.emplace_back("slope", format_number(fit.slope));
    return t;
  }
};

inline std::vector<double> default_h_list() {
  std::vector<double> hs;
  for (int k = 0; k <= 7; ++k) hs.push_back(std::ldexp(1.0, -k));
  return hs;
}

/// Reference state at t_end: exact when available (or requested), otherwise
/// Gauss collocation with reference_s stages at min(h) / reference_factor.
inline Vector reference_state(const ExperimentSpec& spec, const ProblemSetup& setup, const std::vector<double>& hs,
                              std::string* description = nullptr) {
  const auto exact = exact_state(setup, spec.t_end);
  if (spec.reference == ReferencePolicy::exact ||
      (spec.reference == ReferencePolicy::automatic && exact)) {
    if (!exact) {
      throw ConfigError("reference: no exact solution for this setup (custom initial state?)");
    }
    if (description) *description = "exact";
    return *exact;
  }
  double hmin = hs.front();
  for (double h : hs) hmin = std::min(hmin, h);
  const double href = hmin / spec.reference_factor;
  if (description) *description = "coll" + std::to_string(spec.reference_s) + " h=" + format_number(href);
  try {
    return advance_any(OneStepMethod::collocation(CollocationTableau::gauss(spec.reference_s), spec.settings.nq),
                       setup.problem, spec.step_config(href), setup.initial, spec.t_end);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("reference solution failed: ") + e.what());
  }
}

/// Errors at t_end for every h in the list; failures give NaN rows. Runs are
/// sequential and ordered as listed.
inline OrderStudyResult order_study(const ExperimentSpec& spec) {
  const ProblemSetup setup = make_problem(spec);
  const std::vector<double> hs = spec.h_list.empty() ? default_h_list() : spec.h_list;
  for (double h : hs) step_count(h, spec.t_end);
  OrderStudyResult res;
  res.method = spec.method;
  const Vector ref = reference_state(spec, setup, hs, &res.reference);
  const OneStepMethod method = make_method(spec.method, spec.settings);
  std::vector<double> errs;
  for (double h : hs) {
    OrderRow row;
    row.h = h;
    try {
      const Vector u = advance_any(method, setup.problem, spec.step_config(h), setup.initial, spec.t_end);
      row.err_ambient = error_norm(setup.problem, Norm::ambient, u, ref);
      row.err_riemannian = error_norm(setup.problem, Norm::riemannian, u, ref);
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    errs.push_back(spec.norm == Norm::ambient ? row.err_ambient : row.err_riemannian);
    res.rows.push_back(std::move(row));
  }
  res.fit = fit_slope(hs, errs, spec.fit_floor, spec.fit_ceiling);
  return res;
}

// ---------------------------------------------------------------------------
// drift study

struct DriftStudyResult {
  std::vector<std::string> methods;
  std::vector<RunRecord> records;

  double max_drift(std::size_t i) const { return records.at(i).max_energy_error(); }

  /// Columns t, then H(u^k) - H(u^0) per method; NaN after a failure.
  CsvTable table() const {
    CsvTable t;
    t.header.push_back("t");
    std::size_t longest = 0;
    std::size_t widest = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      t.header.push_back(methods[i]);
      if (records[i].size() > longest) {
        longest = records[i].size();
        widest = i;
      }
    }
    for (std::size_t k = 0; k < longest; ++k) {
      std::vector<double> row{records[widest].times[k]};
      for (const auto& rec : records) {
        row.push_back(k < rec.size() ? rec.energy_error(k) : std::numeric_limits<double>::quiet_NaN());
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  }
};

inline DriftStudyResult drift_study(const ExperimentSpec& spec) {
  const ProblemSetup setup = make_problem(spec);
  step_count(spec.h, spec.t_end);
  DriftStudyResult res;
  for (const auto& id : spec.methods) {
    res.methods.push_back(id);
    res.records.push_back(
        integrate_any(make_method(id, spec.settings), setup.problem, spec.step_config(spec.h), setup.initial, spec.t_end));
  }
  return res;
}

// ---------------------------------------------------------------------------
// level curves

struct LevelTrajectory {
  std::string label;  // e.g. "ic0_ia"
  RunRecord record;
};

inline std::vector<Vector> default_level_initial_conditions() {
  const std::vector<Eigen::Vector3d> raw = {
      {-1.0, -1.0, 1.0}, {1.0, 0.3, 0.2}, {0.2, 1.0, -0.3}, {-0.2, 0.3, -1.0}, {-1.0, 0.4, 0.1}};
  std::vector<Vector> out;
  for (const auto& v : raw) out.emplace_back(v.normalized());
  return out;
}

/// Per initial condition: IA with step coarse_h and SIA with step fine_h.
inline std::vector<LevelTrajectory> level_curve_study(const ExperimentSpec& spec) {
  if (spec.problem != ProblemId::top) throw ConfigError("levels: only the top problem is supported");
  const ProblemSetup setup = make_problem(spec);
  step_count(spec.coarse_h, spec.t_end);
  step_count(spec.fine_h, spec.t_end);
  const auto ics = spec.initial_conditions.empty() ? default_level_initial_conditions() : spec.initial_conditions;
  const OneStepMethod coarse = make_method("ia", spec.settings);
  const OneStepMethod fine = make_method("sia", spec.settings);
  std::vector<LevelTrajectory> out;
  for (std::size_t i = 0; i < ics.size(); ++i) {
    const std::string tag = "ic" + std::to_string(i);
    out.push_back({tag + "_ia", integrate_any(coarse, setup.problem, spec.step_config(spec.coarse_h), ics[i], spec.t_end)});
    out.push_back({tag + "_sia", integrate_any(fine, setup.problem, spec.step_config(spec.fine_h), ics[i], spec.t_end)});
  }
  return out;
}

}  // namespace drg::harness

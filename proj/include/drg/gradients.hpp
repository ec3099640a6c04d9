#pragma once

// Riemannian gradients, skew operators and discrete Riemannian gradients.
//
// A discrete Riemannian gradient (DRG) grad_bar H(u, v) is a tangent vector at
// the center c = c(u, v) satisfying the secant identity
//   H(v) - H(u) = g(grad_bar H(u, v), phi_c^{-1}(v) - phi_c^{-1}(u))
// and grad_bar H(u, u) = grad H(u).

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "drg/geometry.hpp"
#include "drg/problems.hpp"
#include "drg/quadrature.hpp"

namespace drg {

/// Orthogonal projection of the ambient gradient onto T_u M.
template <Problem P>
Vector riemannian_gradient(const P& problem, const Vector& u) {
  return problem.manifold().project(u, problem.ambient_gradient(u));
}

/// Omega y = [g(grad H, y) F - g(F, y) grad H] / g(grad H, grad H).
template <Manifold M>
Vector omega_from_field(const M& m, const Vector& u, const Vector& grad, const Vector& field,
                        const Vector& y) {
  const double gg = m.metric(u, grad, grad);
  if (!(gg > 1e-14)) {
    throw CriticalPointError("grad H vanishes (|grad H|^2 = " + std::to_string(gg) + ")");
  }
  return (m.metric(u, grad, y) * field - m.metric(u, field, y) * grad) / gg;
}

template <Problem P>
Vector omega_from_field(const P& problem, const Vector& u, const Vector& y) {
  const auto& m = problem.manifold();
  return omega_from_field(m, u, riemannian_gradient(problem, u), m.project(u, problem.field(u)), y);
}

// ---------------------------------------------------------------------------
// Discrete skew operator

enum class OmegaKind {
  left,      // Omega(u)
  center,    // Omega(c(u, v))
  pullback,  // Omega at U = phi_c((1 - tau) phi_c^{-1}(u) + tau phi_c^{-1}(v)), pulled back to T_c
};

struct OmegaBar {
  OmegaKind kind = OmegaKind::center;
  double node = 0.5;  // tau, pullback only
};

/// Omega_bar(u, v) y for y in T_c M, with c the step's center.
///
/// left/center act as P_c Omega(p) P_c, which is skew on T_c M and reduces to
/// Omega(u) when u = v = c. pullback acts as N Omega(U) N^T with
/// N = T_U phi_c^{-1}.
template <Problem P>
Vector omega_bar(const P& problem, const OmegaBar& ob, const Vector& c, const Vector& u,
                 const Vector& v, const Vector& y) {
  const auto& m = problem.manifold();
  switch (ob.kind) {
    case OmegaKind::left:
      return m.project(c, problem.apply_omega(u, m.project(c, y)));
    case OmegaKind::center:
      return m.project(c, problem.apply_omega(c, m.project(c, y)));
    case OmegaKind::pullback: {
      const Vector x = (1.0 - ob.node) * m.inverse_retract(c, u) + ob.node * m.inverse_retract(c, v);
      const Vector U = m.retract(c, x);
      const Vector lifted = m.inverse_tangent_map_transpose(c, U, y);
      return m.inverse_tangent_map(c, U, problem.apply_omega(U, lifted));
    }
  }
  throw std::invalid_argument("unknown Omega_bar kind");
}

inline const char* to_string(OmegaKind kind) {
  switch (kind) {
    case OmegaKind::left: return "left";
    case OmegaKind::center: return "center";
    case OmegaKind::pullback: return "pullback";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Discrete Riemannian gradients

enum class DrgKind { avf, midpoint, itoh_abe, symmetrized_itoh_abe, modified_midpoint };

inline const char* to_string(DrgKind kind) {
  switch (kind) {
    case DrgKind::avf: return "avf";
    case DrgKind::midpoint: return "mp";
    case DrgKind::itoh_abe: return "ia";
    case DrgKind::symmetrized_itoh_abe: return "sia";
    case DrgKind::modified_midpoint: return "mmp";
  }
  return "?";
}

// Tangent frame used by the Itoh-Abe variants.
enum class FrameKind { svd, continuous };

inline const char* to_string(FrameKind kind) {
  return kind == FrameKind::svd ? "svd" : "continuous";
}

template <Manifold M>
Matrix tangent_frame(const M& m, FrameKind kind, const Vector& c) {
  return kind == FrameKind::svd ? m.orthonormal_basis(c) : m.continuous_basis(c);
}

struct DiscreteGradient {
  DrgKind kind = DrgKind::midpoint;
  CenterKind center = CenterKind::chordal_midpoint;
  int nq = 16;  // AVF quadrature nodes
  FrameKind frame = FrameKind::svd;
};

/// Itoh-Abe increments with |alpha_j| <= this fraction of |eta| use the
/// integral form of the divided difference (see detail::itoh_abe_at).
inline constexpr double kItohAbeRelativeIncrement = 0.25;
/// Nodes of the Gauss rule for that integral.
inline constexpr int kItohAbeSegmentNodes = 8;
/// Midpoint DRG falls back to grad H(c) when g(eta, eta) is at or below this.
inline constexpr double kMidpointDegenerate = 1e-14;

namespace detail {

// Per-thread cache; rules are immutable once built.
inline const QuadratureRule& cached_gauss_legendre(int n) {
  thread_local std::map<int, QuadratureRule> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

// Coordinate increment a_j along E_j is (H(w_j) - H(w_{j-1})) / alpha_j. When
// alpha_j is small next to the whole increment the quotient cancels badly, so
// it is evaluated as the equal integral
//   int_0^1 g(grad H(phi_c(eta_{j-1} + t alpha_j E_j)), T phi_c E_j) dt
// with a Gauss rule. For alpha_j = 0 this is the directional derivative at
// w_{j-1}. The integrand varies over a segment of length <= |eta| / 4, so
// the rule is exact to round-off and the secant identity still telescopes.
template <Problem P>
Vector itoh_abe_at(const P& problem, const Vector& c, const Matrix& basis, const Vector& u,
                   const Vector& v, double hu, double hv) {
  const auto& m = problem.manifold();
  const Vector xu = m.inverse_retract(c, u);
  const Vector xv = m.inverse_retract(c, v);
  const Vector diff = xv - xu;
  const double scale = std::sqrt(m.metric(c, diff, diff));
  const int n = static_cast<int>(basis.cols());
  const QuadratureRule& rule = cached_gauss_legendre(kItohAbeSegmentNodes);

  Vector result = Vector::Zero(m.ambient_dim());
  Vector eta = xu;
  double h_prev = hu;
  for (int j = 0; j < n; ++j) {
    const Vector e = basis.col(j);
    const double alpha = m.metric(c, diff, e);
    const Vector eta_next = eta + alpha * e;
    const bool last = j == n - 1;
    const double h_next = last ? hv : problem.energy(m.retract(c, eta_next));
    double a = 0.0;
    if (std::abs(alpha) > kItohAbeRelativeIncrement * scale) {
      a = (h_next - h_prev) / alpha;
    } else {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vector x = eta + (rule.nodes[q] * alpha) * e;
        const Vector w = m.retract(c, x);
        a += rule.weights[q] * m.metric(w, riemannian_gradient(problem, w), m.tangent_map(c, x, e));
      }
    }
    result += a * e;
    eta = eta_next;
    h_prev = h_next;
  }
  return result;
}

}  // namespace detail

/// AVF DRG: n-point Gauss-Legendre approximation of
///   int_0^1 (T_{gamma} phi_c)^T grad H(phi_c(gamma)) dxi,
///   gamma = (1 - xi) phi_c^{-1}(u) + xi phi_c^{-1}(v).
template <Problem P>
Vector drg_avf(const P& problem, CenterKind cf, int nq, const Vector& u, const Vector& v) {
  const auto& m = problem.manifold();
  const Vector c = center(m, cf, u, v);
  const Vector xu = m.inverse_retract(c, u);
  const Vector xv = m.inverse_retract(c, v);
  const QuadratureRule& rule = detail::cached_gauss_legendre(nq);
  Vector sum = Vector::Zero(m.ambient_dim());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double xi = rule.nodes[q];
    const Vector gamma = (1.0 - xi) * xu + xi * xv;
    const Vector point = m.retract(c, gamma);
    sum += rule.weights[q] * m.tangent_map_transpose(c, gamma, riemannian_gradient(problem, point));
  }
  return sum;
}

/// Gonzalez-type midpoint DRG at c = cf(u, v).
template <Problem P>
Vector drg_midpoint(const P& problem, CenterKind cf, const Vector& u, const Vector& v) {
  const auto& m = problem.manifold();
  const Vector c = center(m, cf, u, v);
  const Vector eta = m.inverse_retract(c, v) - m.inverse_retract(c, u);
  const Vector grad_c = riemannian_gradient(problem, c);
  const double ee = m.metric(c, eta, eta);
  if (!(ee > kMidpointDegenerate)) return grad_c;
  const double defect = problem.energy(v) - problem.energy(u) - m.metric(c, grad_c, eta);
  return grad_c + (defect / ee) * eta;
}

/// Itoh-Abe DRG built along an orthonormal frame of T_c M.
template <Problem P>
Vector drg_itoh_abe(const P& problem, CenterKind cf, const Vector& u, const Vector& v,
                    FrameKind frame = FrameKind::svd) {
  const auto& m = problem.manifold();
  const Vector c = center(m, cf, u, v);
  return detail::itoh_abe_at(problem, c, tangent_frame(m, frame, c), u, v, problem.energy(u),
                             problem.energy(v));
}

/// 1/2 (IA(u, v) + IA(v, u)) with one shared center c = cf(u, v) and basis.
template <Problem P>
Vector drg_symmetrized_ia(const P& problem, CenterKind cf, const Vector& u, const Vector& v,
                          FrameKind frame = FrameKind::svd) {
  const auto& m = problem.manifold();
  const Vector c = center(m, cf, u, v);
  const Matrix basis = tangent_frame(m, frame, c);
  const double hu = problem.energy(u);
  const double hv = problem.energy(v);
  return 0.5 * (detail::itoh_abe_at(problem, c, basis, u, v, hu, hv) +
                detail::itoh_abe_at(problem, c, basis, v, u, hv, hu));
}

/// Modified midpoint DRG of the spin chain with blockwise chordal centers.
///
/// Block i is P_{c_i}(c_{i-1} + c_{i+1}) + k_i eta_i with
///   k_i = (v_i^T v_{i-1} - u_i^T u_{i-1} - (c_{i-1} + c_{i+1})^T eta_i) / eta_i^T eta_i
/// and eta_i = phi_{c_i}^{-1}(v_i) - phi_{c_i}^{-1}(u_i). The secant terms
/// telescope to H(v) - H(u).
inline Vector drg_mmp_spin_chain(const SpinChain& chain, const Vector& u, const Vector& v) {
  const auto& m = chain.manifold();
  const Vector c = m.midpoint(u, v);
  const Vector eta = m.inverse_retract(c, v) - m.inverse_retract(c, u);
  const Vector neighbours = chain.ambient_gradient(c);
  const Vector tangential = m.project(c, neighbours);
  Vector out(m.ambient_dim());
  for (int i = 0; i < chain.spins(); ++i) {
    const Eigen::Vector3d eta_i = eta.segment<3>(3 * i);
    const double ee = eta_i.squaredNorm();
    Eigen::Vector3d block = tangential.segment<3>(3 * i);
    if (ee > kMidpointDegenerate) {
      // v_i.v_{i-1} - u_i.u_{i-1} in difference form: the error then scales
      // with |eta_i| instead of staying at round-off of O(1) products
      const Eigen::Vector3d ui = chain.spin(u, i), vi = chain.spin(v, i);
      const Eigen::Vector3d up = chain.spin(u, i - 1), vp = chain.spin(v, i - 1);
      const double secant = 0.5 * ((vi - ui).dot(vp + up) + (vi + ui).dot(vp - up));
      const Eigen::Vector3d n_i = neighbours.segment<3>(3 * i);
      block += ((secant - n_i.dot(eta_i)) / ee) * eta_i;
    }
    out.segment<3>(3 * i) = block;
  }
  return out;
}

/// Evaluates the configured DRG at (u, v); the result is based at c(u, v).
template <Problem P>
Vector evaluate(const P& problem, const DiscreteGradient& drg, const Vector& u, const Vector& v) {
  switch (drg.kind) {
    case DrgKind::avf:
      return drg_avf(problem, drg.center, drg.nq, u, v);
    case DrgKind::midpoint:
      return drg_midpoint(problem, drg.center, u, v);
    case DrgKind::itoh_abe:
      return drg_itoh_abe(problem, drg.center, u, v, drg.frame);
    case DrgKind::symmetrized_itoh_abe:
      return drg_symmetrized_ia(problem, drg.center, u, v, drg.frame);
    case DrgKind::modified_midpoint:
      if constexpr (std::is_same_v<P, SpinChain>) {
        if (drg.center != CenterKind::chordal_midpoint) {
          throw std::invalid_argument("modified midpoint DRG requires the chordal midpoint center");
        }
        return drg_mmp_spin_chain(problem, u, v);
      } else {
        throw std::invalid_argument("modified midpoint DRG is only defined for the spin chain");
      }
  }
  throw std::invalid_argument("unknown DRG kind");
}

/// |H(v) - H(u) - g(grad_bar H(u, v), phi_c^{-1}(v) - phi_c^{-1}(u))|.
template <Problem P>
double secant_residual(const P& problem, const DiscreteGradient& drg, const Vector& u, const Vector& v) {
  const auto& m = problem.manifold();
  const Vector c = center(m, drg.center, u, v);
  const Vector g = evaluate(problem, drg, u, v);
  const Vector eta = m.inverse_retract(c, v) - m.inverse_retract(c, u);
  return std::abs(problem.energy(v) - problem.energy(u) - m.metric(c, g, eta));
}

}  // namespace drg

#pragma once

// Benchmark systems with a first integral: the perturbed spinning top on S^2,
// the periodic Heisenberg spin chain on (S^2)^d and a flat harmonic
// oscillator. Each supplies H, its ambient gradient, the right-hand side F
// (valid off the manifold too, which the implicit midpoint rule needs) and the
// action of the skew operator Omega with F = Omega grad H.

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "drg/geometry.hpp"

namespace drg {

template <class P>
concept Problem = requires(const P& pr, const Vector& u, const Vector& y) {
  typename P::manifold_type;
  requires Manifold<typename P::manifold_type>;
  { pr.manifold() } -> std::convertible_to<const typename P::manifold_type&>;
  { pr.energy(u) } -> std::convertible_to<double>;
  { pr.ambient_gradient(u) } -> std::convertible_to<Vector>;
  { pr.field(u) } -> std::convertible_to<Vector>;
  { pr.apply_omega(u, y) } -> std::convertible_to<Vector>;
};

namespace detail {

// hat(s) y = s x y, blockwise.
inline Vector block_hat(const Vector& s, const Vector& y) {
  Vector out(s.size());
  for (Eigen::Index i = 0; i < s.size(); i += 3) {
    out.segment<3>(i) = Eigen::Vector3d(s.segment<3>(i)).cross(Eigen::Vector3d(y.segment<3>(i)));
  }
  return out;
}

}  // namespace detail

/// H(s) = 1/2 (I^{-1} s)^T (s + 2/3 s^2) with s^2 the componentwise square.
class SpinningTop {
 public:
  using manifold_type = SphereProduct;

  explicit SpinningTop(Eigen::Vector3d inertia = Eigen::Vector3d(1.0, 2.0, 4.0))
      : inertia_(inertia), manifold_(1) {
    if (!(inertia.minCoeff() > 0.0)) throw std::invalid_argument("inertia components must be positive");
  }

  const SphereProduct& manifold() const noexcept { return manifold_; }
  const Eigen::Vector3d& inertia() const noexcept { return inertia_; }

  double energy(const Vector& s) const {
    detail::require_size(s, 3, "SpinningTop::energy");
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) sum += (s(i) * s(i) + (2.0 / 3.0) * s(i) * s(i) * s(i)) / inertia_(i);
    return 0.5 * sum;
  }

  // I^{-1}(s + s^2)
  Vector ambient_gradient(const Vector& s) const {
    detail::require_size(s, 3, "SpinningTop::ambient_gradient");
    Vector g(3);
    for (int i = 0; i < 3; ++i) g(i) = (s(i) + s(i) * s(i)) / inertia_(i);
    return g;
  }

  Vector field(const Vector& s) const { return detail::block_hat(s, ambient_gradient(s)); }

  Vector apply_omega(const Vector& p, const Vector& y) const {
    detail::require_size(p, 3, "SpinningTop::apply_omega");
    detail::require_size(y, 3, "SpinningTop::apply_omega");
    return detail::block_hat(p, y);
  }

 private:
  Eigen::Vector3d inertia_;
  SphereProduct manifold_;
};

/// H(s) = sum_i s_i^T s_{i-1} with periodic indexing s_0 = s_d.
class SpinChain {
 public:
  using manifold_type = SphereProduct;

  explicit SpinChain(int spins = 5) : manifold_(spins) {
    if (spins < 2) throw std::invalid_argument("spin chain needs at least two spins");
  }

  const SphereProduct& manifold() const noexcept { return manifold_; }
  int spins() const noexcept { return manifold_.spins(); }

  Eigen::Vector3d spin(const Vector& s, int i) const {
    const int d = spins();
    return s.segment<3>(3 * (((i % d) + d) % d));
  }

  double energy(const Vector& s) const {
    detail::require_size(s, manifold_.ambient_dim(), "SpinChain::energy");
    double sum = 0.0;
    for (int i = 0; i < spins(); ++i) sum += spin(s, i).dot(spin(s, i - 1));
    return sum;
  }

  // dH/ds_i = s_{i-1} + s_{i+1}
  Vector ambient_gradient(const Vector& s) const {
    detail::require_size(s, manifold_.ambient_dim(), "SpinChain::ambient_gradient");
    Vector g(s.size());
    for (int i = 0; i < spins(); ++i) g.segment<3>(3 * i) = spin(s, i - 1) + spin(s, i + 1);
    return g;
  }

  Vector field(const Vector& s) const { return detail::block_hat(s, ambient_gradient(s)); }

  Vector apply_omega(const Vector& p, const Vector& y) const {
    detail::require_size(p, manifold_.ambient_dim(), "SpinChain::apply_omega");
    detail::require_size(y, manifold_.ambient_dim(), "SpinChain::apply_omega");
    return detail::block_hat(p, y);
  }

 private:
  SphereProduct manifold_;
};

/// H(u) = |u|^2 / 2 on R^2 with F(u) = (-u_2, u_1).
class Oscillator {
 public:
  using manifold_type = Euclidean;

  Oscillator() : manifold_(2) {}

  const Euclidean& manifold() const noexcept { return manifold_; }

  double energy(const Vector& u) const {
    detail::require_size(u, 2, "Oscillator::energy");
    return 0.5 * u.squaredNorm();
  }
  Vector ambient_gradient(const Vector& u) const {
    detail::require_size(u, 2, "Oscillator::ambient_gradient");
    return u;
  }
  Vector field(const Vector& u) const { return apply_omega(u, u); }
  Vector apply_omega(const Vector&, const Vector& y) const {
    detail::require_size(y, 2, "Oscillator::apply_omega");
    Vector out(2);
    out << -y(1), y(0);
    return out;
  }

  /// Rotation of u0 by angle t.
  Vector exact(const Vector& u0, double t) const {
    detail::require_size(u0, 2, "Oscillator::exact");
    Vector out(2);
    out << std::cos(t) * u0(0) - std::sin(t) * u0(1), std::sin(t) * u0(0) + std::cos(t) * u0(1);
    return out;
  }

 private:
  Euclidean manifold_;
};

static_assert(Problem<SpinningTop>);
static_assert(Problem<SpinChain>);
static_assert(Problem<Oscillator>);

/// Travelling-wave solution of the spin chain,
///   s_j(t) = (a cos th_j + a~ sin th_j) cos phi + a_bar sin phi,
///   th_j(t) = j p - 2 (1 - cos p) sin(phi) t.
struct ExactChainSolution {
  double angle = std::numbers::pi / 3.0;
  double wavenumber = 2.0 * std::numbers::pi / 5.0;
  Eigen::Vector3d a = Eigen::Vector3d(1.0, 2.0, -1.0) / std::sqrt(6.0);
  Eigen::Vector3d a_tilde = Eigen::Vector3d(2.0, 1.0, 4.0) / std::sqrt(21.0);

  Eigen::Vector3d a_bar() const { return a.cross(a_tilde); }

  double phase(int j, double t) const {
    return j * wavenumber - 2.0 * (1.0 - std::cos(wavenumber)) * std::sin(angle) * t;
  }

  // Orthonormality defect of the frame.
  double frame_defect() const {
    const Eigen::Vector3d b = a_bar();
    double worst = std::max({std::abs(a.dot(a_tilde)), std::abs(a.dot(b)), std::abs(a_tilde.dot(b))});
    for (const auto& v : {a, a_tilde, b}) worst = std::max(worst, std::abs(v.norm() - 1.0));
    return worst;
  }
};

/// Spins are numbered j = 1..d and stored in blocks 0..d-1.
inline Vector exact_solution(const ExactChainSolution& sol, const SpinChain& chain, double t) {
  Vector s(3 * chain.spins());
  const Eigen::Vector3d b = sol.a_bar();
  const double cphi = std::cos(sol.angle);
  const double sphi = std::sin(sol.angle);
  for (int j = 1; j <= chain.spins(); ++j) {
    const double th = sol.phase(j, t);
    s.segment<3>(3 * (j - 1)) = (sol.a * std::cos(th) + sol.a_tilde * std::sin(th)) * cphi + b * sphi;
  }
  return s;
}

struct TopSetup {
  SpinningTop problem;
  Vector initial;
};

struct ChainSetup {
  SpinChain problem;
  ExactChainSolution solution;
  Vector initial;
};

/// s0 = (-1, -1, 1)/sqrt(3), I = diag(1, 2, 4).
inline TopSetup standard_top_setup() {
  Vector s0(3);
  s0 << -1.0, -1.0, 1.0;
  s0 /= std::sqrt(3.0);
  return {SpinningTop(Eigen::Vector3d(1.0, 2.0, 4.0)), s0};
}

/// d = 5, phi = pi/3, p = 2 pi / d, a = (1,2,-1)/sqrt 6, a~ = (2,1,4)/sqrt 21.
inline ChainSetup standard_chain_setup() {
  SpinChain chain(5);
  ExactChainSolution sol;
  sol.angle = std::numbers::pi / 3.0;
  sol.wavenumber = 2.0 * std::numbers::pi / 5.0;
  sol.a = Eigen::Vector3d(1.0, 2.0, -1.0) / std::sqrt(6.0);
  sol.a_tilde = Eigen::Vector3d(2.0, 1.0, 4.0) / std::sqrt(21.0);
  return {chain, sol, exact_solution(sol, chain, 0.0)};
}

}  // namespace drg

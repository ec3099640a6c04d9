#pragma once

// Manifolds in ambient coordinates: the product of unit spheres (S^2)^d and
// flat Euclidean space. Points and tangent vectors are both plain ambient
// vectors; a tangent vector is always interpreted at the base point passed
// next to it.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drg/errors.hpp"

namespace drg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ManifoldPoint = Vector;
using TangentVector = Vector;

template <class M>
concept Manifold = requires(const M& m, const Vector& p, const Vector& x) {
  { m.dim() } -> std::convertible_to<int>;
  { m.ambient_dim() } -> std::convertible_to<int>;
  { m.metric(p, x, x) } -> std::convertible_to<double>;
  { m.retract(p, x) } -> std::convertible_to<Vector>;
  { m.inverse_retract(p, x) } -> std::convertible_to<Vector>;
  { m.tangent_map(p, x, x) } -> std::convertible_to<Vector>;
  { m.tangent_map_transpose(p, x, x) } -> std::convertible_to<Vector>;
  { m.inverse_tangent_map(p, x, x) } -> std::convertible_to<Vector>;
  { m.inverse_tangent_map_transpose(p, x, x) } -> std::convertible_to<Vector>;
  { m.project(p, x) } -> std::convertible_to<Vector>;
  { m.orthonormal_basis(p) } -> std::convertible_to<Matrix>;
  { m.continuous_basis(p) } -> std::convertible_to<Matrix>;
  { m.distance(p, x) } -> std::convertible_to<double>;
  { m.midpoint(p, x) } -> std::convertible_to<Vector>;
};

namespace detail {

inline void require_size(const Vector& v, int n, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string("dimension mismatch in ") + what + ": expected " +
                                std::to_string(n) + ", got " + std::to_string(v.size()));
  }
}

}  // namespace detail

/// The d-fold product of unit 2-spheres embedded in R^{3d}.
///
/// Retraction is the projective map (p + x) / |p + x| applied blockwise, with
/// inverse u / (p^T u) - p on the open hemisphere p^T u > 0. The metric is the
/// ambient dot product restricted to the tangent planes.
class SphereProduct {
 public:
  explicit SphereProduct(int spins = 1) : spins_(spins) {
    if (spins < 1) throw std::invalid_argument("SphereProduct needs at least one sphere");
  }

  int spins() const noexcept { return spins_; }
  int dim() const noexcept { return 2 * spins_; }
  int ambient_dim() const noexcept { return 3 * spins_; }

  double metric(const Vector& p, const Vector& x, const Vector& y) const {
    detail::require_size(p, ambient_dim(), "metric");
    detail::require_size(x, ambient_dim(), "metric");
    detail::require_size(y, ambient_dim(), "metric");
    return x.dot(y);
  }

  Vector retract(const Vector& p, const Vector& x) const {
    check_pair(p, x, "retract");
    Vector out(ambient_dim());
    for (int i = 0; i < spins_; ++i) {
      const Eigen::Vector3d q = block(p, i) + block(x, i);
      out.segment<3>(3 * i) = q / q.norm();
    }
    return out;
  }

  Vector inverse_retract(const Vector& p, const Vector& u) const {
    check_pair(p, u, "inverse_retract");
    Vector out(ambient_dim());
    for (int i = 0; i < spins_; ++i) {
      const double pu = block(p, i).dot(block(u, i));
      if (!(pu > 0.0)) {
        throw DomainError("inverse retraction undefined: p^T u = " + std::to_string(pu) +
                          " <= 0 in block " + std::to_string(i));
      }
      out.segment<3>(3 * i) = block(u, i) / pu - block(p, i);
    }
    return out;
  }

  // T_x phi_p v, a tangent vector at retract(p, x).
  Vector tangent_map(const Vector& p, const Vector& x, const Vector& v) const {
    check_pair(p, x, "tangent_map");
    detail::require_size(v, ambient_dim(), "tangent_map");
    Vector out(ambient_dim());
    for (int i = 0; i < spins_; ++i) {
      const Eigen::Vector3d q = block(p, i) + block(x, i);
      const double n2 = q.squaredNorm();
      const Eigen::Vector3d vi = block(v, i);
      out.segment<3>(3 * i) = (vi - q * (q.dot(vi) / n2)) / std::sqrt(n2);
    }
    return out;
  }

  // (T_x phi_p)^T a for a tangent at retract(p, x); lands in T_p.
  Vector tangent_map_transpose(const Vector& p, const Vector& x, const Vector& a) const {
    check_pair(p, x, "tangent_map_transpose");
    detail::require_size(a, ambient_dim(), "tangent_map_transpose");
    Vector out(ambient_dim());
    for (int i = 0; i < spins_; ++i) {
      const Eigen::Vector3d q = block(p, i) + block(x, i);
      const double n2 = q.squaredNorm();
      const Eigen::Vector3d ai = block(a, i);
      const Eigen::Vector3d r = (ai - q * (q.dot(ai) / n2)) / std::sqrt(n2);
      const Eigen::Vector3d pi = block(p, i);
      out.segment<3>(3 * i) = r - pi * pi.dot(r);
    }
    return out;
  }

  // T_u phi_p^{-1} w for a tangent w at u; lands in T_p.
  Vector inverse_tangent_map(const Vector& p, const Vector& u, const Vector& w) const {
    check_pair(p, u, "inverse_tangent_map");
    detail::require_size(w, ambient_dim(), "inverse_tangent_map");
    Vector out(ambient_dim());
    for (int i = 0; i < spins_; ++i) {
      const Eigen::Vector3d pi = block(p, i);
      const Eigen::Vector3d ui = block(u, i);
      const Eigen::Vector3d wi = block(w, i);
      const double pu = checked_pu(pi, ui, i);
      out.segment<3>(3 * i) = (wi - ui * (pi.dot(wi) / pu)) / pu;
    }
    return out;
  }

  // (T_u phi_p^{-1})^T v for a tangent v at p; lands in T_u.
  Vector inverse_tangent_map_transpose(const Vector& p, const Vector& u, const Vector& v) const {
    check_pair(p, u, "inverse_tangent_map_transpose");
    detail::require_size(v, ambient_dim(), "inverse_tangent_map_transpose");
    Vector out(ambient_dim());
    for (int i = 0; i < spins_; ++i) {
      const Eigen::Vector3d pi = block(p, i);
      const Eigen::Vector3d ui = block(u, i);
      const Eigen::Vector3d vi = block(v, i);
      const double pu = checked_pu(pi, ui, i);
      const Eigen::Vector3d r = (vi - pi * (ui.dot(vi) / pu)) / pu;
      out.segment<3>(3 * i) = r - ui * ui.dot(r);
    }
    return out;
  }

  Vector project(const Vector& p, const Vector& v) const {
    check_pair(p, v, "project");
    Vector out(ambient_dim());
    for (int i = 0; i < spins_; ++i) {
      const Eigen::Vector3d pi = block(p, i);
      const Eigen::Vector3d vi = block(v, i);
      out.segment<3>(3 * i) = vi - pi * pi.dot(vi);
    }
    return out;
  }

  /// Orthonormal basis of T_p as the columns of a (3d x 2d) matrix.
  ///
  /// Each block comes from the SVD of the tangent projector I - p p^T. The two
  /// unit singular vectors are sign-normalized (first component above 1e-12 in
  /// magnitude is positive) and then ordered by descending singular value with
  /// ties broken lexicographically, so the result is a deterministic function
  /// of p.
  Matrix orthonormal_basis(const Vector& p) const {
    detail::require_size(p, ambient_dim(), "orthonormal_basis");
    Matrix basis = Matrix::Zero(ambient_dim(), dim());
    for (int i = 0; i < spins_; ++i) {
      const Eigen::Vector3d pi = block(p, i);
      const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - pi * pi.transpose();
      const Eigen::JacobiSVD<Eigen::Matrix3d> svd(proj, Eigen::ComputeFullU);
      std::array<std::pair<double, Eigen::Vector3d>, 3> cols;
      for (int k = 0; k < 3; ++k) {
        cols[k] = {svd.singularValues()(k), fix_sign(svd.matrixU().col(k))};
      }
      std::sort(cols.begin(), cols.end(), [](const auto& a, const auto& b) {
        if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
        return std::lexicographical_compare(a.second.data(), a.second.data() + 3,
                                            b.second.data(), b.second.data() + 3);
      });
      basis.block<3, 1>(3 * i, 2 * i) = cols[0].second;
      basis.block<3, 1>(3 * i, 2 * i + 1) = cols[1].second;
    }
    return basis;
  }

  /// A frame that varies smoothly with p away from the poles +-e3: E1 is the
  /// normalized tangent projection of e3 (of e1 when |p_3| > 0.9), E2 = p x E1.
  /// The SVD frame above is deterministic but its tie-break can swap E1 and E2
  /// along a trajectory, which breaks the symmetry that composed Itoh-Abe
  /// schemes rely on.
  Matrix continuous_basis(const Vector& p) const {
    detail::require_size(p, ambient_dim(), "continuous_basis");
    Matrix basis = Matrix::Zero(ambient_dim(), dim());
    for (int i = 0; i < spins_; ++i) {
      const Eigen::Vector3d pi = block(p, i);
      const Eigen::Vector3d axis = std::abs(pi(2)) > 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitZ();
      const Eigen::Vector3d e1 = (axis - pi * pi.dot(axis)).normalized();
      basis.block<3, 1>(3 * i, 2 * i) = e1;
      basis.block<3, 1>(3 * i, 2 * i + 1) = pi.cross(e1);
    }
    return basis;
  }

  /// Product Riemannian distance: l2 combination of great-circle distances.
  double distance(const Vector& u, const Vector& v) const {
    check_pair(u, v, "distance");
    double sum = 0.0;
    for (int i = 0; i < spins_; ++i) {
      // atan2 keeps full relative accuracy for tiny angles, acos does not
      const Eigen::Vector3d a = block(u, i);
      const Eigen::Vector3d b = block(v, i);
      const double angle = std::atan2(a.cross(b).norm(), a.dot(b));
      sum += angle * angle;
    }
    return std::sqrt(sum);
  }

  /// Blockwise normalized chordal midpoint (u + v) / |u + v|.
  Vector midpoint(const Vector& u, const Vector& v) const {
    check_pair(u, v, "midpoint");
    Vector out(ambient_dim());
    for (int i = 0; i < spins_; ++i) {
      const Eigen::Vector3d q = block(u, i) + block(v, i);
      const double n = q.norm();
      if (!(n > 1e-12)) {
        throw AntipodalError("chordal midpoint of antipodal points in block " + std::to_string(i));
      }
      out.segment<3>(3 * i) = q / n;
    }
    return out;
  }

  /// Largest deviation of a block norm from 1.
  double manifold_defect(const Vector& p) const {
    detail::require_size(p, ambient_dim(), "manifold_defect");
    double worst = 0.0;
    for (int i = 0; i < spins_; ++i) worst = std::max(worst, std::abs(block(p, i).norm() - 1.0));
    return worst;
  }

  Vector normalize(const Vector& p) const {
    detail::require_size(p, ambient_dim(), "normalize");
    Vector out(ambient_dim());
    for (int i = 0; i < spins_; ++i) out.segment<3>(3 * i) = block(p, i).normalized();
    return out;
  }

 private:
  static Eigen::Vector3d block(const Vector& v, int i) { return v.segment<3>(3 * i); }

  static Eigen::Vector3d fix_sign(Eigen::Vector3d v) {
    for (int k = 0; k < 3; ++k) {
      if (std::abs(v(k)) > 1e-12) {
        if (v(k) < 0.0) v = -v;
        break;
      }
    }
    return v;
  }

  static double checked_pu(const Eigen::Vector3d& p, const Eigen::Vector3d& u, int i) {
    const double pu = p.dot(u);
    if (!(pu > 0.0)) {
      throw DomainError("inverse retraction undefined: p^T u <= 0 in block " + std::to_string(i));
    }
    return pu;
  }

  void check_pair(const Vector& a, const Vector& b, const char* what) const {
    detail::require_size(a, ambient_dim(), what);
    detail::require_size(b, ambient_dim(), what);
  }

  int spins_;
};

/// Flat R^n with phi_p(x) = p + x.
class Euclidean {
 public:
  explicit Euclidean(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("Euclidean dimension must be positive");
  }

  int dim() const noexcept { return n_; }
  int ambient_dim() const noexcept { return n_; }

  double metric(const Vector& p, const Vector& x, const Vector& y) const {
    check(p, "metric");
    check(x, "metric");
    check(y, "metric");
    return x.dot(y);
  }
  Vector retract(const Vector& p, const Vector& x) const {
    check2(p, x, "retract");
    return p + x;
  }
  Vector inverse_retract(const Vector& p, const Vector& u) const {
    check2(p, u, "inverse_retract");
    return u - p;
  }
  Vector tangent_map(const Vector& p, const Vector& x, const Vector& v) const {
    check2(p, x, "tangent_map");
    check(v, "tangent_map");
    return v;
  }
  Vector tangent_map_transpose(const Vector& p, const Vector& x, const Vector& a) const {
    check2(p, x, "tangent_map_transpose");
    check(a, "tangent_map_transpose");
    return a;
  }
  Vector inverse_tangent_map(const Vector& p, const Vector& u, const Vector& w) const {
    check2(p, u, "inverse_tangent_map");
    check(w, "inverse_tangent_map");
    return w;
  }
  Vector inverse_tangent_map_transpose(const Vector& p, const Vector& u, const Vector& v) const {
    check2(p, u, "inverse_tangent_map_transpose");
    check(v, "inverse_tangent_map_transpose");
    return v;
  }
  Vector project(const Vector& p, const Vector& v) const {
    check2(p, v, "project");
    return v;
  }
  Matrix orthonormal_basis(const Vector& p) const {
    check(p, "orthonormal_basis");
    return Matrix::Identity(n_, n_);
  }
  Matrix continuous_basis(const Vector& p) const { return orthonormal_basis(p); }
  double distance(const Vector& u, const Vector& v) const {
    check2(u, v, "distance");
    return (u - v).norm();
  }
  Vector midpoint(const Vector& u, const Vector& v) const {
    check2(u, v, "midpoint");
    return 0.5 * (u + v);
  }
  double manifold_defect(const Vector&) const { return 0.0; }
  Vector normalize(const Vector& p) const { return p; }

 private:
  void check(const Vector& v, const char* what) const { detail::require_size(v, n_, what); }
  void check2(const Vector& a, const Vector& b, const char* what) const {
    check(a, what);
    check(b, what);
  }

  int n_;
};

static_assert(Manifold<SphereProduct>);
static_assert(Manifold<Euclidean>);

enum class CenterKind { left, chordal_midpoint };

/// c(u, v): `left` returns u, `chordal_midpoint` the manifold's midpoint.
template <Manifold M>
Vector center(const M& m, CenterKind kind, const Vector& u, const Vector& v) {
  switch (kind) {
    case CenterKind::left:
      detail::require_size(u, m.ambient_dim(), "center");
      detail::require_size(v, m.ambient_dim(), "center");
      return u;
    case CenterKind::chordal_midpoint:
      return m.midpoint(u, v);
  }
  throw std::invalid_argument("unknown center kind");
}

inline const char* to_string(CenterKind kind) {
  return kind == CenterKind::left ? "left" : "midpoint";
}

}  // namespace drg

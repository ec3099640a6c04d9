#pragma once

// Seeded random samples shared by the test suites.

#include <random>

#include "drg/geometry.hpp"

namespace drg::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240917);
  return engine;
}

inline Vector gaussian(Eigen::Index n) {
  std::normal_distribution<double> dist;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng());
  return v;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline Vector random_point(int spins) {
  Vector p = gaussian(3 * spins);
  for (int i = 0; i < spins; ++i) p.segment<3>(3 * i).normalize();
  return p;
}

// Tangent at p with per-block norm `scale`.
inline Vector random_tangent(const Vector& p, double scale) {
  Vector x = gaussian(p.size());
  for (Eigen::Index i = 0; i < p.size(); i += 3) {
    Eigen::Vector3d b = x.segment<3>(i);
    const Eigen::Vector3d pi = p.segment<3>(i);
    b -= pi * pi.dot(b);
    x.segment<3>(i) = scale * b.normalized();
  }
  return x;
}

// A point at distance about `dist` (per block, radians) from u.
inline Vector nearby_point(const Vector& u, double dist) {
  Vector v(u.size());
  const Vector dir = random_tangent(u, 1.0);
  for (Eigen::Index i = 0; i < u.size(); i += 3) {
    v.segment<3>(i) = std::cos(dist) * u.segment<3>(i) + std::sin(dist) * dir.segment<3>(i);
  }
  return v;
}

}  // namespace drg::testing

#pragma once

// Gauss-Legendre rules on [0, 1] and the Lagrange-basis integrals used by the
// collocation-like methods.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace drg {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [0, 1], nodes ascending.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("quadrature order must be positive, got " + std::to_string(n));
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton on P_n from Chebyshev-like initial guesses; roots are symmetric
  // about 0 so only half are computed.
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged root for the weight
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // x is the i-th largest root; map [-1, 1] -> [0, 1].
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.weights[n - 1 - i] = 0.5 * w;
    rule.weights[i] = 0.5 * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
  return rule;
}

/// Roots of the shifted Legendre polynomial of degree s on [0, 1], 1 <= s <= 8.
inline std::vector<double> gauss_nodes(int s) {
  if (s < 1 || s > 8) {
    throw std::invalid_argument("Gauss collocation supports 1..8 stages, got " + std::to_string(s));
  }
  return gauss_legendre(s).nodes;
}

/// Collocation data for distinct nodes c_1..c_s: the Lagrange basis l_j,
/// weights b_j = int_0^1 l_j and integrated coefficients A_ij = int_0^{c_i} l_j.
class CollocationTableau {
 public:
  explicit CollocationTableau(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("collocation needs at least one node");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (std::abs(nodes_[i] - nodes_[j]) < 1e-14) {
          throw std::invalid_argument("coincident collocation nodes at indices " + std::to_string(j) +
                                      " and " + std::to_string(i));
        }
      }
    }
    // Gauss with s points integrates the degree s-1 basis exactly.
    exact_rule_ = gauss_legendre(static_cast<int>(nodes_.size()));
    weights_ = integrated_basis(1.0);
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      if (std::abs(weights_[j]) < 1e-14) {
        throw std::invalid_argument("collocation weight b_" + std::to_string(j + 1) + " vanishes");
      }
    }
    coefficients_.reserve(nodes_.size());
    for (double c : nodes_) coefficients_.push_back(integrated_basis(c));
  }

  static CollocationTableau gauss(int s) { return CollocationTableau(gauss_nodes(s)); }

  int stages() const noexcept { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  // A_ij = int_0^{c_i} l_j.
  double coefficient(int i, int j) const { return coefficients_.at(i).at(j); }

  double lagrange(int j, double xi) const {
    double value = 1.0;
    for (int k = 0; k < stages(); ++k) {
      if (k == j) continue;
      value *= (xi - nodes_[k]) / (nodes_[j] - nodes_[k]);
    }
    return value;
  }

  /// tau -> (int_0^tau l_1, ..., int_0^tau l_s).
  std::vector<double> integrated_basis(double tau) const {
    std::vector<double> out(nodes_.size(), 0.0);
    for (std::size_t q = 0; q < exact_rule_.size(); ++q) {
      const double xi = tau * exact_rule_.nodes[q];
      const double w = tau * exact_rule_.weights[q];
      for (int j = 0; j < stages(); ++j) out[j] += w * lagrange(j, xi);
    }
    return out;
  }

 private:
  std::vector<double> nodes_;
  QuadratureRule exact_rule_;
  std::vector<double> weights_;
  std::vector<std::vector<double>> coefficients_;
};

}  // namespace drg

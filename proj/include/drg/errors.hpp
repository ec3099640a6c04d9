#pragma once

#include <stdexcept>
#include <string>

namespace drg {

// A point left the domain of a chart, e.g. p^T u <= 0 for the sphere's
// inverse retraction. Usually means the step size is too large.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Chordal midpoint of (numerically) antipodal points.
class AntipodalError : public std::domain_error {
 public:
  explicit AntipodalError(const std::string& what) : std::domain_error(what) {}
};

// grad H vanishes, so the skew operator built from the vector field is undefined.
class CriticalPointError : public std::domain_error {
 public:
  explicit CriticalPointError(const std::string& what) : std::domain_error(what) {}
};

// Fixed-point iteration hit its iteration cap.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, int iterations, double last_update)
      : std::runtime_error(what), iterations_(iterations), last_update_(last_update) {}

  int iterations() const noexcept { return iterations_; }
  double last_update() const noexcept { return last_update_; }

 private:
  int iterations_;
  double last_update_;
};

}  // namespace drg

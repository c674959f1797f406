#pragma once

#include <stdexcept>
#include <string>

namespace hinfsearch {

/// Shape mismatch or malformed numeric input.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Policy (or probe point) outside the stabilizing set.
class InstabilityError : public std::domain_error {
 public:
  InstabilityError(const std::string& what, double rho)
      : std::domain_error(what), rho_(rho) {}
  double rho() const { return rho_; }

 private:
  double rho_;
};

/// Cost is not differentiable (to the configured gap tolerance) at a point.
class NondifferentiableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A point sampled from a ball around the center left the stabilizing set.
class InfeasibleBallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An oracle failed repeatedly (e.g. too many redraws).
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem/config file could not be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hinfsearch

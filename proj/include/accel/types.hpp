#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace accel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A point left the domain of a distance generating function.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// An operation asked for derivatives the oracle does not provide.
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct LinearSolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The inner solver for a regularized Taylor step missed its residual target.
struct SubproblemError : std::runtime_error {
  double best_residual;
  SubproblemError(const std::string& what, double residual)
      : std::runtime_error(what), best_residual(residual) {}
};

}  // namespace accel

#pragma once

#include "accel/divergence.hpp"
#include "accel/oracle.hpp"

namespace accel {

// Regularized Taylor step: minimize f_{p-1}(x+v; x) + reg_weight * (1/p)||v||^p
// over v, where x is the center. tol bounds the stationarity residual.
struct SubproblemSpec {
  int p = 2;
  double reg_weight = 1.0;
  Vector center;
  double tol = 1e-10;

  void validate() const {
    if (p < 2) throw ConfigError("subproblem order must satisfy p >= 2");
    if (!(reg_weight > 0)) throw ConfigError("subproblem regularization weight must be positive");
  }
};

// Value and gradient (in v) of the regularized surrogate.
double surrogate_value(const ObjectiveOracle& f, const SubproblemSpec& spec, const Vector& v);
Vector surrogate_gradient(const ObjectiveOracle& f, const SubproblemSpec& spec, const Vector& v);
double surrogate_residual(const ObjectiveOracle& f, const SubproblemSpec& spec, const Vector& v);

// Returns the minimizing displacement v. p=2 is closed form, p=3 goes through
// an eigendecomposition plus a scalar secular equation, p>=4 runs an inner
// first-order descent with a verified residual.
Vector solve_surrogate(const ObjectiveOracle& f, const SubproblemSpec& spec);

struct ProgressCheck {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

// Progress inequality of the 2/eps-regularized Taylor step:
// <grad f(y), x - y> >= (1/4) eps^(1/(p-1)) ||grad f(y)||^(p/(p-1)).
ProgressCheck verify_progress(const ObjectiveOracle& f, const Vector& x, const Vector& y,
                              double eps, int p);

}  // namespace accel

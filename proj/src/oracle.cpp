#include "accel/oracle.hpp"

namespace accel {

Matrix ObjectiveOracle::dense_hessian(const Vector& x) const {
  Matrix H(dim, dim);
  Vector e = Vector::Zero(dim);
  for (int j = 0; j < dim; ++j) {
    e(j) = 1.0;
    H.col(j) = hessian_vec(x, e);
    e(j) = 0.0;
  }
  return 0.5 * (H + H.transpose());
}

void MethodConfig::validate() const {
  if (p < 2) throw ConfigError("method order must satisfy p >= 2, got p = " + std::to_string(p));
  if (!(eps > 0)) throw ConfigError("step size eps must be positive");
  if (max_iters < 0) throw ConfigError("max_iters must be nonnegative");
  if (!(subproblem_tol > 0)) throw ConfigError("subproblem_tol must be positive");
}

}  // namespace accel

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "accel/types.hpp"

namespace accel {

// grad^order f is Lipschitz with the given constant.
struct Smoothness {
  int order = 1;
  double constant = 0.0;
};

// D_f(y,x) >= (constant/order) * ||y-x||^order.
struct UniformConvexity {
  int order = 2;
  double constant = 0.0;
};

// A convex test function with analytic derivatives up to third order.
// third_directional(x, v) returns grad^3 f(x)[v,v] as a vector; leave it
// empty when the problem has no usable third derivative.
struct ObjectiveOracle {
  int dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Vector(const Vector&, const Vector&)> hessian_vec;
  std::function<Vector(const Vector&, const Vector&)> third_directional;

  std::vector<Smoothness> smoothness;
  std::optional<Vector> minimizer;
  std::optional<double> min_value;
  std::optional<UniformConvexity> uniform_convexity;
  std::string fstar_provenance;  // "analytic" or a pre-solve description
  std::string label;

  bool has_third() const { return static_cast<bool>(third_directional); }

  // Lipschitz constant of grad^order f, if recorded.
  std::optional<double> smoothness_constant(int order) const {
    for (const auto& s : smoothness)
      if (s.order == order) return s.constant;
    return std::nullopt;
  }

  double gap(const Vector& x) const {
    if (!min_value) throw CapabilityError("oracle has no recorded optimal value");
    return value(x) - *min_value;
  }

  // Dense Hessian assembled column-by-column from hessian_vec, symmetrized.
  Matrix dense_hessian(const Vector& x) const;
};

// Strictly convex distance generating function h with its mirror map.
// hess_h_solve(x, w) solves grad^2 h(x) v = w; grad_h_inverse is grad h*.
struct DistanceGenerator {
  int dim = 0;
  std::function<double(const Vector&)> h;
  std::function<Vector(const Vector&)> grad_h;
  std::function<Vector(const Vector&, const Vector&)> hess_h_vec;
  std::function<Vector(const Vector&, const Vector&)> hess_h_solve;
  std::function<Vector(const Vector&)> grad_h_inverse;
  std::function<Vector(const Vector&, const Vector&)> third_h_directional;
  std::function<Matrix(const Vector&)> mirror_jacobian;  // d(grad_h_inverse)/dz
  std::function<bool(const Vector&)> contains;           // empty: whole space

  int uc_order = 2;
  double uc_constant = 1.0;
  std::string label;

  bool in_domain(const Vector& x) const { return !contains || contains(x); }
  bool has_third() const { return static_cast<bool>(third_h_directional); }
};

// Parameters shared by the discrete-time methods.
struct MethodConfig {
  int p = 2;
  double eps = 0.1;
  double C = -1.0;  // < 0 means the default (4p)^-p
  long max_iters = 1000;
  double subproblem_tol = 1e-10;  // scaled by max(1, ||grad f(center)||)
  bool monomial_weights = false;  // z-weight k^(p-1) instead of rising factorial
  double sigma_f = -1.0;          // uniform convexity of f; < 0: take from oracle
  double stop_gap = 0.0;          // stop early once f - f* falls below (0: never)

  double resolved_C() const {
    return C > 0 ? C : std::pow(4.0 * p, -static_cast<double>(p));
  }
  void validate() const;
};

}  // namespace accel

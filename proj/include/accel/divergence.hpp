#pragma once

#include "accel/oracle.hpp"
#include "accel/types.hpp"

namespace accel {

// h(y) - h(x) - <grad h(x), y - x>; nonnegative for convex h.
double bregman_divergence(const DistanceGenerator& h, const Vector& y, const Vector& x);

// Taylor approximation of f(x+v) centered at x, truncated after the
// `order`-th derivative term. Supported orders: 1, 2, 3.
double taylor_value(const ObjectiveOracle& f, const Vector& x, const Vector& v, int order);

// Gradient in v of taylor_value(f, x, v, order).
Vector taylor_grad(const ObjectiveOracle& f, const Vector& x, const Vector& v, int order);

}  // namespace accel

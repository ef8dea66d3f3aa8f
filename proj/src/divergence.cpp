#include "accel/divergence.hpp"

namespace accel {

double bregman_divergence(const DistanceGenerator& h, const Vector& y, const Vector& x) {
  if (!h.in_domain(x) || !h.in_domain(y))
    throw DomainError("bregman_divergence: point outside the domain of h");
  return h.h(y) - h.h(x) - h.grad_h(x).dot(y - x);
}

static void check_order(const ObjectiveOracle& f, int order) {
  if (order < 1 || order > 3)
    throw CapabilityError("Taylor order must be 1, 2 or 3, got " + std::to_string(order));
  if (order == 3 && !f.has_third())
    throw CapabilityError("oracle provides no third derivative");
}

double taylor_value(const ObjectiveOracle& f, const Vector& x, const Vector& v, int order) {
  check_order(f, order);
  double out = f.value(x) + f.gradient(x).dot(v);
  if (order >= 2) out += 0.5 * v.dot(f.hessian_vec(x, v));
  if (order >= 3) out += v.dot(f.third_directional(x, v)) / 6.0;
  return out;
}

Vector taylor_grad(const ObjectiveOracle& f, const Vector& x, const Vector& v, int order) {
  check_order(f, order);
  Vector g = f.gradient(x);
  if (order >= 2) g += f.hessian_vec(x, v);
  if (order >= 3) g += 0.5 * f.third_directional(x, v);
  return g;
}

}  // namespace accel

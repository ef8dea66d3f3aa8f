#pragma once

#include <functional>
#include <string>
#include <utility>

#include "json.hpp"

#include "accel/types.hpp"

namespace accel {

// Time functions (alpha, beta, gamma) with their derivatives. alpha sets the
// scale of the velocity mixing, beta the weight on f, gamma the damping.
struct ScalingTriple {
  std::function<double(double)> alpha, beta, gamma;
  std::function<double(double)> d_alpha, d_beta, d_gamma;
  std::string label;
  nlohmann::json descriptor;  // tagged form for serialization, when known

  // Convergence-rate exponent rho_t = beta_t - 2 alpha_t.
  double rho(double t) const { return beta(t) - 2.0 * alpha(t); }
};

// Smooth, strictly increasing time reparameterization with derivatives.
// Kinds: identity, polynomial(p) t^p, linear(c) ct, exponential(c) e^(ct),
// custom (must supply tau, d_tau and d2_tau).
struct TimeDilation {
  std::function<double(double)> tau, d_tau, d2_tau;
  std::string kind = "custom";
  double param = 0.0;
};

TimeDilation identity_dilation();
TimeDilation polynomial_dilation(double p);
TimeDilation linear_dilation(double c);
TimeDilation exponential_dilation(double c);

// alpha = -log t + log p, beta = (p-2) log t + 2 log p + log C,
// gamma = (p+1) log t - log p.
ScalingTriple nesterov_scaling(double p, double C);

// alpha = log c, beta = ct + 2 log c, gamma = ct - log c.
ScalingTriple exp_scaling(double c);

// (r_beta, r_gamma) = (beta' - 2 alpha' - e^alpha, gamma' + alpha' - e^alpha).
std::pair<double, double> ideal_scaling_residual(const ScalingTriple& s, double t);

// Transported triple: alpha' = alpha(tau) + log tau', beta' = beta(tau) +
// 2 log tau', gamma' = gamma(tau) - log tau', with chain-rule derivatives.
ScalingTriple dilate(const ScalingTriple& s, const TimeDilation& tau);

// tau after theta: t -> tau(theta(t)).
TimeDilation dilation_compose(const TimeDilation& tau, const TimeDilation& theta);

// Tagged JSON forms, e.g. {"kind":"nesterov","p":3,"C":0.00463}.
nlohmann::json scaling_to_json(const ScalingTriple& s);
ScalingTriple scaling_from_json(const nlohmann::json& j);
nlohmann::json dilation_to_json(const TimeDilation& d);
TimeDilation dilation_from_json(const nlohmann::json& j);

}  // namespace accel

#include "accel/scaling.hpp"

#include <cmath>

namespace accel {

using nlohmann::json;

TimeDilation identity_dilation() {
  TimeDilation d;
  d.kind = "identity";
  d.tau = [](double t) { return t; };
  d.d_tau = [](double) { return 1.0; };
  d.d2_tau = [](double) { return 0.0; };
  return d;
}

TimeDilation polynomial_dilation(double p) {
  if (!(p > 0)) throw ConfigError("polynomial time dilation needs p > 0");
  TimeDilation d;
  d.kind = "polynomial";
  d.param = p;
  d.tau = [p](double t) { return std::pow(t, p); };
  d.d_tau = [p](double t) { return p * std::pow(t, p - 1.0); };
  d.d2_tau = [p](double t) { return p * (p - 1.0) * std::pow(t, p - 2.0); };
  return d;
}

TimeDilation linear_dilation(double c) {
  if (!(c > 0)) throw ConfigError("linear time dilation needs c > 0");
  TimeDilation d;
  d.kind = "linear";
  d.param = c;
  d.tau = [c](double t) { return c * t; };
  d.d_tau = [c](double) { return c; };
  d.d2_tau = [](double) { return 0.0; };
  return d;
}

TimeDilation exponential_dilation(double c) {
  if (!(c > 0)) throw ConfigError("exponential time dilation needs c > 0");
  TimeDilation d;
  d.kind = "exponential";
  d.param = c;
  d.tau = [c](double t) { return std::exp(c * t); };
  d.d_tau = [c](double t) { return c * std::exp(c * t); };
  d.d2_tau = [c](double t) { return c * c * std::exp(c * t); };
  return d;
}

ScalingTriple nesterov_scaling(double p, double C) {
  if (!(p > 0) || !(C > 0)) throw ConfigError("nesterov scaling needs p > 0 and C > 0");
  ScalingTriple s;
  s.label = "nesterov(p=" + std::to_string(p) + ",C=" + std::to_string(C) + ")";
  s.descriptor = json{{"kind", "nesterov"}, {"p", p}, {"C", C}};
  s.alpha = [p](double t) { return -std::log(t) + std::log(p); };
  s.d_alpha = [](double t) { return -1.0 / t; };
  s.beta = [p, C](double t) { return (p - 2.0) * std::log(t) + 2.0 * std::log(p) + std::log(C); };
  s.d_beta = [p](double t) { return (p - 2.0) / t; };
  s.gamma = [p](double t) { return (p + 1.0) * std::log(t) - std::log(p); };
  s.d_gamma = [p](double t) { return (p + 1.0) / t; };
  return s;
}

ScalingTriple exp_scaling(double c) {
  if (!(c > 0)) throw ConfigError("exp scaling needs c > 0");
  ScalingTriple s;
  s.label = "exp(c=" + std::to_string(c) + ")";
  s.descriptor = json{{"kind", "exp"}, {"c", c}};
  s.alpha = [c](double) { return std::log(c); };
  s.d_alpha = [](double) { return 0.0; };
  s.beta = [c](double t) { return c * t + 2.0 * std::log(c); };
  s.d_beta = [c](double) { return c; };
  s.gamma = [c](double t) { return c * t - std::log(c); };
  s.d_gamma = [c](double) { return c; };
  return s;
}

std::pair<double, double> ideal_scaling_residual(const ScalingTriple& s, double t) {
  double ea = std::exp(s.alpha(t));
  double r_beta = s.d_beta(t) - 2.0 * s.d_alpha(t) - ea;
  double r_gamma = s.d_gamma(t) + s.d_alpha(t) - ea;
  return {r_beta, r_gamma};
}

ScalingTriple dilate(const ScalingTriple& s, const TimeDilation& tau) {
  if (!tau.d2_tau)
    throw ConfigError("time dilation needs a second derivative to transport a scaling triple");
  auto checked_dtau = [tau](double t) {
    double dt = tau.d_tau(t);
    if (!(dt > 0)) throw DomainError("time dilation derivative must stay positive");
    return dt;
  };
  ScalingTriple out;
  out.label = s.label + " o " + tau.kind;
  if (!s.descriptor.is_null())
    out.descriptor = json{{"kind", "dilated"}, {"base", s.descriptor}, {"tau", dilation_to_json(tau)}};
  out.alpha = [s, tau, checked_dtau](double t) {
    return s.alpha(tau.tau(t)) + std::log(checked_dtau(t));
  };
  out.d_alpha = [s, tau, checked_dtau](double t) {
    return s.d_alpha(tau.tau(t)) * tau.d_tau(t) + tau.d2_tau(t) / checked_dtau(t);
  };
  out.beta = [s, tau, checked_dtau](double t) {
    return s.beta(tau.tau(t)) + 2.0 * std::log(checked_dtau(t));
  };
  out.d_beta = [s, tau, checked_dtau](double t) {
    return s.d_beta(tau.tau(t)) * tau.d_tau(t) + 2.0 * tau.d2_tau(t) / checked_dtau(t);
  };
  out.gamma = [s, tau, checked_dtau](double t) {
    return s.gamma(tau.tau(t)) - std::log(checked_dtau(t));
  };
  out.d_gamma = [s, tau, checked_dtau](double t) {
    return s.d_gamma(tau.tau(t)) * tau.d_tau(t) - tau.d2_tau(t) / checked_dtau(t);
  };
  return out;
}

TimeDilation dilation_compose(const TimeDilation& tau, const TimeDilation& theta) {
  TimeDilation out;
  out.kind = tau.kind + " o " + theta.kind;
  out.tau = [tau, theta](double t) { return tau.tau(theta.tau(t)); };
  out.d_tau = [tau, theta](double t) { return tau.d_tau(theta.tau(t)) * theta.d_tau(t); };
  out.d2_tau = [tau, theta](double t) {
    double th = theta.tau(t), dth = theta.d_tau(t);
    return tau.d2_tau(th) * dth * dth + tau.d_tau(th) * theta.d2_tau(t);
  };
  return out;
}

json scaling_to_json(const ScalingTriple& s) {
  if (s.descriptor.is_null())
    throw ConfigError("scaling triple carries no serializable descriptor");
  return s.descriptor;
}

ScalingTriple scaling_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "nesterov") return nesterov_scaling(j.at("p").get<double>(), j.value("C", 1.0));
  if (kind == "exp") return exp_scaling(j.at("c").get<double>());
  if (kind == "dilated")
    return dilate(scaling_from_json(j.at("base")), dilation_from_json(j.at("tau")));
  throw ConfigError("unknown scaling kind: " + kind);
}

json dilation_to_json(const TimeDilation& d) {
  return json{{"kind", d.kind}, {"param", d.param}};
}

TimeDilation dilation_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return identity_dilation();
  double param = j.value("param", 1.0);
  if (kind == "polynomial") return polynomial_dilation(param);
  if (kind == "linear") return linear_dilation(param);
  if (kind == "exponential") return exponential_dilation(param);
  throw ConfigError("unknown time dilation kind: " + kind);
}

}  // namespace accel

#include "accel/flows.hpp"

#include <algorithm>
#include <cmath>

#include "accel/discrete.hpp"
#include "accel/divergence.hpp"

namespace accel {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

}  // namespace

Vector FlowTrajectory::at(double t) const {
  if (samples.empty()) throw IntegrationError("empty trajectory");
  if (t <= samples.front().t) return samples.front().y;
  if (t >= samples.back().t) return samples.back().y;
  auto it = std::upper_bound(samples.begin(), samples.end(), t,
                             [](double v, const FlowSample& s) { return v < s.t; });
  const FlowSample& s1 = *it;
  const FlowSample& s0 = *(it - 1);
  double hstep = s1.t - s0.t;
  double s = (t - s0.t) / hstep;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  double h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s);
  double h11 = s * s * (s - 1);
  return h00 * s0.y + h10 * hstep * s0.ydot + h01 * s1.y + h11 * hstep * s1.ydot;
}

Vector FlowTrajectory::deriv_at(double t) const {
  if (samples.empty()) throw IntegrationError("empty trajectory");
  if (t <= samples.front().t) return samples.front().ydot;
  if (t >= samples.back().t) return samples.back().ydot;
  auto it = std::upper_bound(samples.begin(), samples.end(), t,
                             [](double v, const FlowSample& s) { return v < s.t; });
  const FlowSample& s1 = *it;
  const FlowSample& s0 = *(it - 1);
  double hstep = s1.t - s0.t;
  double s = (t - s0.t) / hstep;
  double d00 = 6 * s * (s - 1) / hstep;
  double d10 = (1 - s) * (1 - 3 * s);
  double d01 = -d00;
  double d11 = s * (3 * s - 2);
  return d00 * s0.y + d10 * s0.ydot + d01 * s1.y + d11 * s1.ydot;
}

IntegrateResult integrate(const Rhs& rhs, const Vector& y0, const IntegratorConfig& cfg,
                          const FlowProbe& probe) {
  cfg.validate();
  IntegrateResult out;
  out.trace.meta.id = "flow";

  double t = cfg.t0;
  Vector y = y0;
  Vector k1 = rhs(t, y);
  if (!k1.allFinite()) throw IntegrationError("right-hand side not finite at the start state");

  double span = cfg.t_end - cfg.t0;
  double h = std::min(span / 100.0, 1e-2 * (1.0 + y.norm()) / (1.0 + k1.norm()));
  h = std::max(h, 1e-12 * span);

  std::size_t next_sample = 0;
  auto pending_sample = [&]() -> double {
    while (next_sample < cfg.sample_times.size() && cfg.sample_times[next_sample] <= t + 1e-14)
      ++next_sample;
    return next_sample < cfg.sample_times.size() ? cfg.sample_times[next_sample]
                                                 : std::numeric_limits<double>::infinity();
  };

  double last_energy = std::numeric_limits<double>::quiet_NaN();
  auto record = [&](double tt, const Vector& yy) {
    TraceRecord r;
    r.index = tt;
    if (probe.f_gap) r.f_gap = probe.f_gap(tt, yy);
    if (probe.grad_norm) r.grad_norm = probe.grad_norm(tt, yy);
    if (probe.energy) {
      r.energy = probe.energy(tt, yy);
      if (probe.energy_direction != 0 && std::isfinite(last_energy) && std::isfinite(r.energy)) {
        double slack = 10.0 * (cfg.rel_tol * std::max(1.0, std::abs(last_energy)) + cfg.abs_tol);
        bool ok = probe.energy_direction < 0 ? r.energy <= last_energy + slack
                                             : r.energy >= last_energy - slack;
        r.flags["energy"] = ok;
      }
      last_energy = r.energy;
    }
    out.trace.records.push_back(std::move(r));
    out.trace.points.push_back(yy);
  };

  auto keep = [&](double tt, const Vector& yy, const Vector& dy) {
    if (cfg.keep_trajectory) out.trajectory.samples.push_back({tt, yy, dy});
  };

  record(t, y);
  keep(t, y, k1);

  long accepted_since_record = 0;
  Vector k2, k3, k4, k5, k6, k7;
  while (t < cfg.t_end - 1e-14 * std::max(1.0, std::abs(cfg.t_end))) {
    if (out.steps + out.rejected > cfg.max_steps)
      throw IntegrationError("integrator exceeded max_steps");
    bool forced_sample = false;
    double target = pending_sample();
    double h_try = h;
    if (t + h_try >= target) {
      h_try = target - t;
      forced_sample = true;
    }
    if (t + h_try > cfg.t_end) {
      h_try = cfg.t_end - t;
      forced_sample = false;
    }
    if (h_try < 1e-14 * std::max(1.0, std::abs(t)))
      throw IntegrationError("integrator step size underflow at t = " + std::to_string(t));

    k2 = rhs(t + c2 * h_try, y + h_try * (a21 * k1));
    k3 = rhs(t + c3 * h_try, y + h_try * (a31 * k1 + a32 * k2));
    k4 = rhs(t + c4 * h_try, y + h_try * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = rhs(t + c5 * h_try, y + h_try * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = rhs(t + h_try, y + h_try * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vector y_new = y + h_try * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = rhs(t + h_try, y_new);

    Vector err = h_try * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err_norm = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y(i)), std::abs(y_new(i)));
      double q = err(i) / sc;
      err_norm += q * q;
    }
    err_norm = std::sqrt(err_norm / y.size());

    if (err_norm <= 1.0 || !std::isfinite(err_norm)) {
      if (!y_new.allFinite() || !std::isfinite(err_norm))
        throw IntegrationError("integration state left the finite range");
      t += h_try;
      y = y_new;
      k1 = k7;  // first-same-as-last
      ++out.steps;
      ++accepted_since_record;
      bool at_end = t >= cfg.t_end - 1e-14 * std::max(1.0, std::abs(cfg.t_end));
      if (forced_sample || at_end ||
          (cfg.sample_times.empty() && accepted_since_record >= cfg.record_every)) {
        record(t, y);
        accepted_since_record = 0;
      }
      keep(t, y, k1);
      double fac = err_norm > 0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
      h = h_try * std::clamp(fac, 0.2, 5.0);
    } else {
      ++out.rejected;
      h = h_try * std::max(0.1, 0.9 * std::pow(err_norm, -0.2));
    }
  }

  out.t_final = t;
  out.y_final = y;
  return out;
}

Rhs rescaled_gradient_rhs(const ObjectiveOracle& f, double p) {
  if (!(p >= 2)) throw ConfigError("rescaled gradient flow needs p >= 2");
  return [&f, p](double, const Vector& X) {
    Vector g = f.gradient(X);
    double n = g.norm();
    if (n <= 1e-14) return Vector(Vector::Zero(X.size()));
    return Vector(-g / std::pow(n, (p - 2.0) / (p - 1.0)));
  };
}

Rhs natural_gradient_rhs(const ObjectiveOracle& f, const DistanceGenerator& h) {
  return [&f, &h](double, const Vector& X) { return Vector(-h.hess_h_solve(X, f.gradient(X))); };
}

Rhs mirror_flow_rhs(const ObjectiveOracle& f, const DistanceGenerator& h) {
  return [&f, &h](double, const Vector& W) {
    Vector X = h.grad_h_inverse(W);
    if (!h.in_domain(X)) throw DomainError("mirror flow left the domain of h");
    return Vector(-f.gradient(X));
  };
}

Rhs bregman_flow_rhs(const ObjectiveOracle& f, const DistanceGenerator& h, const ScalingTriple& s,
                     double t0) {
  auto [rb, rg] = ideal_scaling_residual(s, t0);
  double tol = 1e-6 * (1.0 + std::exp(s.alpha(t0)));
  if (std::abs(rb) > tol || std::abs(rg) > tol)
    throw ConfigError("scaling triple violates the ideal scaling at t0");
  const int d = f.dim;
  return [&f, &h, s, d](double t, const Vector& y) {
    Vector X = y.head(d);
    Vector W = y.tail(d);
    Vector Z = h.grad_h_inverse(W);
    if (!h.in_domain(Z)) throw DomainError("phase variable left the domain of h");
    double ea = std::exp(s.alpha(t));
    Vector dX = ea * (Z - X);
    Vector dW = -std::exp(s.beta(t) - s.alpha(t)) * f.gradient(X);
    Vector out(2 * d);
    out << dX, dW;
    return out;
  };
}

Rhs sbc_flow_rhs(const ObjectiveOracle& f, double r) {
  const int d = f.dim;
  return [&f, r, d](double t, const Vector& y) {
    if (t <= 0.0) throw DomainError("this flow is defined for t > 0");
    Vector X = y.head(d);
    Vector V = y.tail(d);
    Vector out(2 * d);
    out << V, Vector(-(r / t) * V - f.gradient(X));
    return out;
  };
}

Rhs hessian_flow_rhs(const ObjectiveOracle& f, const DistanceGenerator& h, const ScalingTriple& s) {
  if (!h.has_third())
    throw CapabilityError("the Hessian-metric flow needs grad^3 h directional products");
  const int d = f.dim;
  return [&f, &h, s, d](double t, const Vector& y) {
    Vector X = y.head(d);
    Vector V = y.tail(d);
    Vector rhs_vec = 0.5 * h.third_h_directional(X, V) + std::exp(s.beta(t)) * f.gradient(X);
    Vector A = -h.hess_h_solve(X, rhs_vec) - s.d_gamma(t) * V;
    Vector out(2 * d);
    out << V, A;
    return out;
  };
}

Rhs p_power_flow_rhs(const ObjectiveOracle& f, double p, double mass) {
  if (!(mass > 0)) throw ConfigError("p-power flow needs a positive mass");
  if (!(p >= 2)) throw ConfigError("p-power flow needs p >= 2");
  const int d = f.dim;
  return [&f, p, mass, d](double, const Vector& y) {
    Vector X = y.head(d);
    Vector V = y.tail(d);
    Vector g = f.gradient(X);
    double n = V.norm();
    Vector A(d);
    if (p == 2.0) {
      A = -(g + V) / mass;
    } else if (n <= 1e-14) {
      if (g.norm() <= 1e-14)
        A.setZero();  // stationary point of the massless limit
      else
        throw IntegrationError("p-power acceleration undefined at zero velocity away from optimum");
    } else {
      double a = mass * std::pow(n, p - 2.0);
      double b = mass * (p - 2.0) * std::pow(n, p - 4.0);
      Vector r = -(g + std::pow(n, p - 2.0) * V);
      A = (r - (b * V.dot(r) / (a + b * n * n)) * V) / a;
    }
    Vector out(2 * d);
    out << V, A;
    return out;
  };
}

Rhs nesterov_second_order_rhs(const ObjectiveOracle& f, const DistanceGenerator& h, double p,
                              double C) {
  const int d = f.dim;
  return [&f, &h, p, C, d](double t, const Vector& y) {
    if (t <= 0.0) throw DomainError("this flow is defined for t > 0");
    Vector X = y.head(d);
    Vector V = y.tail(d);
    Vector Zt = X + (t / p) * V;
    Vector A = -((p + 1.0) / t) * V -
               C * p * p * std::pow(t, p - 2.0) * h.hess_h_solve(Zt, f.gradient(X));
    Vector out(2 * d);
    out << V, A;
    return out;
  };
}

Vector bregman_flow_acceleration(const ObjectiveOracle& f, const DistanceGenerator& h,
                                 const ScalingTriple& s, double t, const Vector& X,
                                 const Vector& Z) {
  Vector xdot = std::exp(s.alpha(t)) * (Z - X);
  return -s.d_gamma(t) * xdot - std::exp(s.beta(t)) * h.hess_h_solve(Z, f.gradient(X));
}

double energy_value(const std::string& kind, const ObjectiveOracle& f, const DistanceGenerator* h,
                    const ScalingTriple* s, const FlowState& state, const EnergyParams& prm) {
  if (!f.minimizer || !f.min_value)
    throw CapabilityError("energy evaluation needs the recorded optimum");
  const Vector& xstar = *f.minimizer;
  double gap = f.value(state.X) - *f.min_value;

  if (kind == "rescaled") {
    if (gap <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(gap, -1.0 / (prm.p - 1.0));
  }
  if (kind == "natural") {
    if (!h) throw ConfigError("natural energy needs a distance generator");
    return state.t * gap + bregman_divergence(*h, xstar, state.X);
  }
  if (kind == "nesterov") {
    if (!h) throw ConfigError("this energy needs a distance generator");
    Vector Z = state.Z ? *state.Z
                       : (state.V ? Vector(state.X + (state.t / prm.p) * *state.V)
                                  : throw CapabilityError("energy needs Z or the velocity"));
    return prm.C * std::pow(state.t, prm.p) * gap + bregman_divergence(*h, xstar, Z);
  }
  if (kind == "bregman") {
    if (!h || !s) throw ConfigError("this energy needs a generator and a scaling triple");
    Vector Z = state.Z ? *state.Z
                       : (state.V ? Vector(state.X + std::exp(-s->alpha(state.t)) * *state.V)
                                  : throw CapabilityError("energy needs Z or the velocity"));
    return std::exp(s->beta(state.t) - 2.0 * s->alpha(state.t)) * gap +
           bregman_divergence(*h, xstar, Z);
  }
  throw ConfigError("unknown energy kind: " + kind);
}

Trace euler_discretize_nesterov(const ObjectiveOracle& f, const DistanceGenerator& h, int p,
                                double C, double delta, long k_max, const Vector& X0,
                                bool with_y_sequence) {
  if (!(delta > 0)) throw ConfigError("discretization needs delta > 0");
  if (with_y_sequence) {
    MethodConfig cfg;
    cfg.p = p;
    cfg.eps = std::pow(delta, p);
    cfg.C = C;
    cfg.max_iters = k_max;
    cfg.monomial_weights = true;
    Trace tr = agp_run(f, h, cfg, X0);
    tr.meta.id = "euler-nesterov+y";
    tr.meta.delta = delta;
    return tr;
  }

  Trace tr;
  tr.meta.id = "euler-nesterov";
  tr.meta.delta = delta;
  tr.meta.scalars = {{"p", double(p)}, {"C", C}, {"delta", delta}};
  if (f.min_value) tr.meta.scalars["f_star"] = *f.min_value;

  const double reg = 1.0 / std::pow(delta, p);
  Vector x = X0, dual = h.grad_h(X0);
  // the coupling divides by k, so start above the order
  const long k0 = p + 1;
  auto push = [&](long k) {
    TraceRecord r;
    r.index = double(k);
    r.f_gap = f.min_value ? f.value(x) - *f.min_value : std::numeric_limits<double>::quiet_NaN();
    r.grad_norm = f.gradient(x).norm();
    tr.records.push_back(std::move(r));
    tr.points.push_back(x);
  };
  push(k0);
  for (long k = k0; k < k_max; ++k) {
    Vector z = h.grad_h_inverse(dual);
    if (!h.in_domain(z)) throw DomainError("mirror iterate left the domain of h");
    Vector g = f.gradient(x);
    Vector x_next = (double(p) / k) * z + (double(k - p) / k) * x;
    dual -= (C * p * std::pow(double(k), p - 1.0) / reg) * g;
    x = x_next;
    push(k + 1);
  }
  return tr;
}

Trace exp_euler_discretize(const ObjectiveOracle& f, const DistanceGenerator& h, double c,
                           double delta, long k_max, const Vector& X0) {
  if (!(delta > 0)) throw ConfigError("discretization needs delta > 0");
  if (!(c * delta < 1.0))
    throw ConfigError("exp discretization needs c * delta < 1 for a convex coupling");
  Trace tr;
  tr.meta.id = "euler-exp";
  tr.meta.delta = delta;
  tr.meta.scalars = {{"c", c}, {"delta", delta}};
  if (f.min_value) tr.meta.scalars["f_star"] = *f.min_value;

  Vector x = X0, dual = h.grad_h(X0);
  auto push = [&](long k) {
    TraceRecord r;
    r.index = double(k);
    r.f_gap = f.min_value ? f.value(x) - *f.min_value : std::numeric_limits<double>::quiet_NaN();
    r.grad_norm = f.gradient(x).norm();
    tr.records.push_back(std::move(r));
    tr.points.push_back(x);
  };
  push(0);
  for (long k = 0; k < k_max; ++k) {
    dual -= delta * c * std::exp(c * delta * k) * f.gradient(x);
    Vector z = h.grad_h_inverse(dual);
    if (!h.in_domain(z)) throw DomainError("mirror iterate left the domain of h");
    x = c * delta * z + (1.0 - c * delta) * x;
    push(k + 1);
  }
  return tr;
}

}  // namespace accel

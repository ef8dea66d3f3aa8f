#include "accel/lagrangian.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "accel/divergence.hpp"

namespace accel {

double bregman_lagrangian(const ObjectiveOracle& f, const DistanceGenerator& h,
                          const ScalingTriple& s, const Vector& x, const Vector& v, double t) {
  double ea = std::exp(s.alpha(t));
  Vector shifted = x + v / ea;
  if (!h.in_domain(x) || !h.in_domain(shifted))
    throw DomainError("Lagrangian evaluation left the domain of h");
  return std::exp(s.gamma(t)) *
         (ea * ea * bregman_divergence(h, shifted, x) - std::exp(s.beta(t)) * f.value(x));
}

double hessian_lagrangian(const ObjectiveOracle& f, const DistanceGenerator& h,
                          const ScalingTriple& s, const Vector& x, const Vector& v, double t) {
  return std::exp(s.gamma(t)) *
         (0.5 * v.dot(h.hess_h_vec(x, v)) - std::exp(s.beta(t)) * f.value(x));
}

double p_power_lagrangian(const ObjectiveOracle& f, double p, double mass, const Vector& x,
                          const Vector& v, double t) {
  if (!(mass > 0) || !(p > 0)) throw ConfigError("p-power Lagrangian needs p > 0 and mass > 0");
  return std::exp(t / mass) * ((mass / p) * std::pow(v.norm(), p) - f.value(x));
}

namespace {

// Full stationarity equation of the divergence-based Lagrangian; the last
// term vanishes under the ideal scaling.
Vector bregman_el(const ObjectiveOracle& f, const DistanceGenerator& h, const ScalingTriple& s,
                  const CurvePoint& c, double t) {
  double ea = std::exp(s.alpha(t));
  double da = s.d_alpha(t);
  Vector zt = c.x + c.v / ea;
  Vector r = c.a + (ea - da) * c.v +
             std::exp(s.beta(t)) * h.hess_h_solve(zt, f.gradient(c.x));
  double coeff = ea * (s.d_gamma(t) + da - ea);
  if (coeff != 0.0) r += coeff * h.hess_h_solve(zt, h.grad_h(zt) - h.grad_h(c.x));
  return r;
}

Vector hessian_el(const ObjectiveOracle& f, const DistanceGenerator& h, const ScalingTriple& s,
                  const CurvePoint& c, double t) {
  return 0.5 * h.third_h_directional(c.x, c.v) +
         h.hess_h_vec(c.x, c.a + s.d_gamma(t) * c.v) + std::exp(s.beta(t)) * f.gradient(c.x);
}

Vector ppower_el(const ObjectiveOracle& f, const ElParams& prm, const CurvePoint& c) {
  double n = c.v.norm();
  double p = prm.p, m = prm.mass;
  Vector r = std::pow(n, p - 2.0) * (m * c.a + c.v) + f.gradient(c.x);
  if (p != 2.0 && n > 0.0) r += m * (p - 2.0) * std::pow(n, p - 4.0) * c.a.dot(c.v) * c.v;
  return r;
}

using LagFn = std::function<double(const Vector&, const Vector&, double)>;

Vector fd_el_residual(const LagFn& L, const Curve& curve, double t) {
  CurvePoint c = curve(t);
  const int d = static_cast<int>(c.x.size());
  const double hfd = 1e-5 * (1.0 + std::sqrt(c.x.squaredNorm() + c.v.squaredNorm()));

  // d/dt of dL/dv along the curve, including the explicit t dependence
  auto dLdv_at = [&](double tt) {
    CurvePoint ct = curve(tt);
    Vector g(d);
    Vector vv = ct.v;
    for (int i = 0; i < d; ++i) {
      double save = vv(i);
      vv(i) = save + hfd;
      double up = L(ct.x, vv, tt);
      vv(i) = save - hfd;
      double dn = L(ct.x, vv, tt);
      vv(i) = save;
      g(i) = (up - dn) / (2.0 * hfd);
    }
    return g;
  };
  Vector ddt = (dLdv_at(t + hfd) - dLdv_at(t - hfd)) / (2.0 * hfd);

  Vector dLdx(d);
  Vector xx = c.x;
  for (int i = 0; i < d; ++i) {
    double save = xx(i);
    xx(i) = save + hfd;
    double up = L(xx, c.v, t);
    xx(i) = save - hfd;
    double dn = L(xx, c.v, t);
    xx(i) = save;
    dLdx(i) = (up - dn) / (2.0 * hfd);
  }
  return ddt - dLdx;
}

}  // namespace

Vector el_residual(const std::string& kind, const ObjectiveOracle& f, const DistanceGenerator& h,
                   const ScalingTriple& s, const Curve& curve, double t, ElMode mode,
                   const ElParams& prm) {
  if (mode == ElMode::finite_difference) {
    LagFn L;
    if (kind == "bregman" || kind == "exp")
      L = [&](const Vector& x, const Vector& v, double tt) {
        return bregman_lagrangian(f, h, s, x, v, tt);
      };
    else if (kind == "hessian")
      L = [&](const Vector& x, const Vector& v, double tt) {
        return hessian_lagrangian(f, h, s, x, v, tt);
      };
    else if (kind == "ppower")
      L = [&](const Vector& x, const Vector& v, double tt) {
        return p_power_lagrangian(f, prm.p, prm.mass, x, v, tt);
      };
    else
      throw ConfigError("unknown Lagrangian kind: " + kind);
    return fd_el_residual(L, curve, t);
  }

  CurvePoint c = curve(t);
  if (kind == "bregman" || kind == "exp") return bregman_el(f, h, s, c, t);
  if (kind == "hessian") return hessian_el(f, h, s, c, t);
  if (kind == "ppower") return ppower_el(f, prm, c);
  throw ConfigError("unknown Lagrangian kind: " + kind);
}

Curve phase_curve(const FlowTrajectory& traj, const ObjectiveOracle& f, const DistanceGenerator& h,
                  const ScalingTriple& s) {
  const int d = f.dim;
  return [&traj, &f, &h, s, d](double t) {
    Vector y = traj.at(t);
    Vector X = y.head(d);
    Vector Z = h.grad_h_inverse(y.tail(d));
    CurvePoint c;
    c.x = X;
    c.v = std::exp(s.alpha(t)) * (Z - X);
    c.a = bregman_flow_acceleration(f, h, s, t, X, Z);
    return c;
  };
}

Curve second_order_curve(const FlowTrajectory& traj, const Rhs& rhs, int dim) {
  return [&traj, rhs, dim](double t) {
    Vector y = traj.at(t);
    Vector dy = rhs(t, y);
    CurvePoint c;
    c.x = y.head(dim);
    c.v = y.tail(dim);
    c.a = dy.tail(dim);
    return c;
  };
}

namespace {

// Numerical inverse of a strictly increasing dilation by bisection.
double invert_dilation(const TimeDilation& tau, double target, double lo, double hi) {
  for (int it = 0; it < 200 && tau.tau(hi) < target; ++it) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (tau.tau(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

DilatedCurveReport dilated_curve_check(const ObjectiveOracle& f, const DistanceGenerator& h,
                                       const ScalingTriple& s, const TimeDilation& tau,
                                       const IntegratorConfig& cfg, const Vector& x0,
                                       int n_samples) {
  cfg.validate();
  Vector y0(2 * f.dim);
  y0 << x0, h.grad_h(x0);
  IntegrateResult res = integrate(bregman_flow_rhs(f, h, s, cfg.t0), y0, cfg);

  Curve base = phase_curve(res.trajectory, f, h, s);
  ScalingTriple dil = dilate(s, tau);

  // sample window in dilated time, kept inside the integrated span
  double margin = 0.02 * (cfg.t_end - cfg.t0);
  double lo = invert_dilation(tau, cfg.t0 + margin, 1e-9, std::max(1.0, cfg.t_end));
  double hi = invert_dilation(tau, cfg.t_end - margin, lo, std::max(1.0, cfg.t_end));
  if (!(hi > lo)) throw ConfigError("dilation image does not overlap the integration window");

  DilatedCurveReport rep;
  rep.samples = n_samples;
  rep.rho_end = dil.rho(hi);
  Curve dilated = [&](double t) {
    double ts = tau.tau(t);
    double dt = tau.d_tau(t), ddt = tau.d2_tau(t);
    CurvePoint b = base(ts);
    CurvePoint c;
    c.x = b.x;
    c.v = dt * b.v;
    c.a = ddt * b.v + dt * dt * b.a;
    return c;
  };
  for (int i = 0; i < n_samples; ++i) {
    double t = lo + (hi - lo) * (i + 0.5) / n_samples;
    Vector r = el_residual("bregman", f, h, dil, dilated, t);
    double rn = r.norm();
    double gn = f.gradient(dilated(t).x).norm();
    rep.max_residual = std::max(rep.max_residual, rn);
    rep.max_normalized_residual = std::max(rep.max_normalized_residual, rn / (1.0 + gn));
  }
  return rep;
}

Vector legendre_pushforward_residual(const DistanceGenerator& h, const ObjectiveOracle& f,
                                     const Vector& z) {
  const int d = static_cast<int>(z.size());
  Matrix J(d, d);
  if (h.mirror_jacobian) {
    J = h.mirror_jacobian(z);
  } else {
    double step = 1e-6 * (1.0 + z.norm());
    Vector zz = z;
    for (int i = 0; i < d; ++i) {
      double save = zz(i);
      zz(i) = save + step;
      Vector up = h.grad_h_inverse(zz);
      zz(i) = save - step;
      Vector dn = h.grad_h_inverse(zz);
      zz(i) = save;
      J.col(i) = (up - dn) / (2.0 * step);
    }
  }
  Vector x = h.grad_h_inverse(z);
  if (!h.in_domain(x)) throw DomainError("dual point maps outside the domain of h");
  Matrix G(d, d);
  Vector e = Vector::Zero(d);
  for (int i = 0; i < d; ++i) {
    e(i) = 1.0;
    G.col(i) = h.hess_h_vec(x, e);
    e(i) = 0.0;
  }
  Matrix pullback = J.transpose() * G * J;
  Vector g = f.gradient(x);
  Eigen::LDLT<Matrix> solver(pullback);
  if (solver.info() != Eigen::Success)
    throw LinearSolveError("pulled-back metric is not invertible");
  Vector zdot = -solver.solve(J * g);
  return zdot + g;  // zero when the mirror-map cancellation holds
}

}  // namespace accel

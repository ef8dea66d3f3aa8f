#include "accel/subproblem.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace accel {

double surrogate_value(const ObjectiveOracle& f, const SubproblemSpec& spec, const Vector& v) {
  return taylor_value(f, spec.center, v, spec.p - 1) +
         spec.reg_weight * std::pow(v.norm(), spec.p) / spec.p;
}

Vector surrogate_gradient(const ObjectiveOracle& f, const SubproblemSpec& spec, const Vector& v) {
  Vector g = taylor_grad(f, spec.center, v, spec.p - 1);
  double n = v.norm();
  if (n > 0.0) g += spec.reg_weight * std::pow(n, spec.p - 2) * v;
  return g;
}

double surrogate_residual(const ObjectiveOracle& f, const SubproblemSpec& spec, const Vector& v) {
  return surrogate_gradient(f, spec, v).norm();
}

namespace {

// p=3: v = -(H + theta r I)^-1 g with r = ||v|| fixed by the scalar equation
// ||(H + theta r I)^-1 g|| = r. H is PSD here, so the root is unique.
Vector solve_cubic(const ObjectiveOracle& f, const SubproblemSpec& spec, const Vector& g) {
  const double theta = spec.reg_weight;
  Matrix H = f.dense_hessian(spec.center);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  Vector lam = eig.eigenvalues();
  Vector ghat = eig.eigenvectors().transpose() * g;

  auto step_norm = [&](double r) {
    double s = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
      double d = lam(i) + theta * r;
      s += (ghat(i) / d) * (ghat(i) / d);
    }
    return std::sqrt(s);
  };
  auto step_norm_deriv = [&](double r) {
    double s = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
      double d = lam(i) + theta * r;
      s += ghat(i) * ghat(i) / (d * d * d);
    }
    double n = step_norm(r);
    return n > 0.0 ? -theta * s / n : 0.0;
  };

  // phi(r) = r - step_norm(r) is increasing, negative at 0+, positive at hi.
  double hi = std::sqrt(g.norm() / theta) * (1.0 + 1e-12) + 1e-300;
  double lo = 0.0;
  double r = 0.5 * hi;
  for (int it = 0; it < 120; ++it) {
    double phi = r - step_norm(r);
    if (phi >= 0.0)
      hi = r;
    else
      lo = r;
    double dphi = 1.0 - step_norm_deriv(r);
    double rn = r - phi / dphi;  // Newton, bisection fallback outside the bracket
    if (!(rn > lo && rn < hi)) rn = 0.5 * (lo + hi);
    if (std::abs(rn - r) <= 1e-16 * r) {
      r = rn;
      break;
    }
    r = rn;
  }
  Vector vhat(lam.size());
  for (int i = 0; i < lam.size(); ++i) vhat(i) = -ghat(i) / (lam(i) + theta * r);
  return eig.eigenvectors() * vhat;
}

// p>=4: backtracking gradient descent on the convex regularized surrogate,
// then a Newton polish on the stationarity system once value-based line
// search hits the double-precision plateau.
Vector solve_inner_descent(const ObjectiveOracle& f, const SubproblemSpec& spec, double tol) {
  const int d = static_cast<int>(spec.center.size());
  Vector v = Vector::Zero(d);
  double fv = surrogate_value(f, spec, v);
  double step = 1.0;
  double best_res = surrogate_residual(f, spec, v);
  const long cap = 100000;
  const double coarse_tol = std::max(tol, 1e-6 * std::max(1.0, best_res));

  long it = 0;
  for (; it < cap; ++it) {
    Vector g = surrogate_gradient(f, spec, v);
    double gn = g.norm();
    best_res = std::min(best_res, gn);
    if (gn <= coarse_tol) break;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Vector vt = v - step * g;
      double ft = surrogate_value(f, spec, vt);
      if (ft <= fv - 1e-4 * step * gn * gn) {
        v = vt;
        fv = ft;
        step *= 1.5;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // value plateau; hand over to the polish
  }
  if (it >= cap)
    throw SubproblemError("inner surrogate descent hit its iteration cap", best_res);

  // Newton on grad = 0 with a finite-difference Jacobian; works below the
  // accuracy floor of value comparisons.
  for (int polish = 0; polish < 30; ++polish) {
    Vector g = surrogate_gradient(f, spec, v);
    double gn = g.norm();
    best_res = std::min(best_res, gn);
    if (gn <= tol) return v;
    Matrix J(d, d);
    double hstep = 1e-6 * (1.0 + v.norm());
    Vector vv = v;
    for (int i = 0; i < d; ++i) {
      double save = vv(i);
      vv(i) = save + hstep;
      Vector up = surrogate_gradient(f, spec, vv);
      vv(i) = save - hstep;
      Vector dn = surrogate_gradient(f, spec, vv);
      vv(i) = save;
      J.col(i) = (up - dn) / (2.0 * hstep);
    }
    Vector dlt = (0.5 * (J + J.transpose())).ldlt().solve(-g);
    if (!dlt.allFinite()) break;
    Vector vt = v + dlt;
    if (surrogate_residual(f, spec, vt) < gn)
      v = vt;
    else
      break;
  }
  double res = surrogate_residual(f, spec, v);
  if (res <= tol) return v;
  throw SubproblemError("inner surrogate solve left residual " + std::to_string(res), res);
}

}  // namespace

Vector solve_surrogate(const ObjectiveOracle& f, const SubproblemSpec& spec) {
  spec.validate();
  Vector g = f.gradient(spec.center);
  const double tol = spec.tol * std::max(1.0, g.norm());
  if (g.norm() == 0.0) return Vector::Zero(spec.center.size());  // stationary center

  Vector v;
  if (spec.p == 2) {
    v = -g / spec.reg_weight;
  } else if (spec.p == 3) {
    v = solve_cubic(f, spec, g);
  } else {
    if (spec.p - 1 > 3 || (spec.p - 1 == 3 && !f.has_third()))
      throw CapabilityError("surrogate of order " + std::to_string(spec.p) +
                            " needs derivatives the oracle lacks");
    v = solve_inner_descent(f, spec, tol);
  }

  double res = surrogate_residual(f, spec, v);
  if (res > tol)
    throw SubproblemError("surrogate step residual " + std::to_string(res) +
                              " above tolerance " + std::to_string(tol),
                          res);
  return v;
}

ProgressCheck verify_progress(const ObjectiveOracle& f, const Vector& x, const Vector& y,
                              double eps, int p) {
  Vector gy = f.gradient(y);
  ProgressCheck out;
  out.lhs = gy.dot(x - y);
  out.rhs = 0.25 * std::pow(eps, 1.0 / (p - 1)) * std::pow(gy.norm(), p / (p - 1.0));
  double slack = 1e-12 * std::max({1.0, std::abs(out.lhs), std::abs(out.rhs)});
  out.holds = out.lhs >= out.rhs - slack;
  return out;
}

}  // namespace accel

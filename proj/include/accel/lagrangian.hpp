#pragma once

#include "accel/flows.hpp"
#include "accel/oracle.hpp"
#include "accel/scaling.hpp"

namespace accel {

// e^gamma ( e^(2 alpha) D_h(x + e^-alpha v, x) - e^beta f(x) ).
double bregman_lagrangian(const ObjectiveOracle& f, const DistanceGenerator& h,
                          const ScalingTriple& s, const Vector& x, const Vector& v, double t);

// e^gamma ( 1/2 <v, grad^2 h(x) v> - e^beta f(x) ).
double hessian_lagrangian(const ObjectiveOracle& f, const DistanceGenerator& h,
                          const ScalingTriple& s, const Vector& x, const Vector& v, double t);

// e^(t/m) ( (m/p) ||v||^p - f(x) ).
double p_power_lagrangian(const ObjectiveOracle& f, double p, double mass, const Vector& x,
                          const Vector& v, double t);

struct CurvePoint {
  Vector x;
  Vector v;
  Vector a;
};
using Curve = std::function<CurvePoint(double)>;

enum class ElMode { closed_form, finite_difference };

// Euler-Lagrange residual of the named Lagrangian along a curve. The closed
// form evaluates the stationarity equation directly; the finite-difference
// mode computes d/dt (dL/dv) - dL/dx from the Lagrangian values alone and is
// meant as a cross-check of the closed forms. kinds: "bregman" (alias "exp"),
// "hessian", "ppower" (uses prm p, mass).
struct ElParams {
  double p = 2.0;
  double mass = 1.0;
};
Vector el_residual(const std::string& kind, const ObjectiveOracle& f, const DistanceGenerator& h,
                   const ScalingTriple& s, const Curve& curve, double t,
                   ElMode mode = ElMode::closed_form, const ElParams& prm = {});

// Curve accessor for a [X; W] two-phase trajectory, with the acceleration
// reconstructed from the flow's own equation.
Curve phase_curve(const FlowTrajectory& traj, const ObjectiveOracle& f, const DistanceGenerator& h,
                  const ScalingTriple& s);

// Curve accessor for a [X; V] trajectory, acceleration from the given rhs.
Curve second_order_curve(const FlowTrajectory& traj, const Rhs& rhs, int dim);

struct DilatedCurveReport {
  double max_residual = 0.0;
  double max_normalized_residual = 0.0;  // residual / (1 + ||grad f||)
  double rho_end = 0.0;                  // transported rate at the window end
  long samples = 0;
};

// Integrates the flow of s from x0, resamples Y_t = X_tau(t), and evaluates
// the closed-form Euler-Lagrange residual of dilate(s, tau) along Y.
DilatedCurveReport dilated_curve_check(const ObjectiveOracle& f, const DistanceGenerator& h,
                                       const ScalingTriple& s, const TimeDilation& tau,
                                       const IntegratorConfig& cfg, const Vector& x0,
                                       int n_samples = 40);

// Difference between the gradient flow pushed forward through the mirror map
// and -grad f at the pulled-back point; zero by the Legendre cancellation.
Vector legendre_pushforward_residual(const DistanceGenerator& h, const ObjectiveOracle& f,
                                     const Vector& z);

}  // namespace accel

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "accel/oracle.hpp"
#include "accel/scaling.hpp"
#include "accel/trace.hpp"

namespace accel {

// Trajectory point of a continuous-time flow. X is the position; Z is the
// second phase variable (when the flow carries one), V the velocity.
struct FlowState {
  double t = 0.0;
  Vector X;
  std::optional<Vector> Z;
  std::optional<Vector> V;
};

struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double t0 = 0.0;
  double t_end = 1.0;
  long max_steps = 2'000'000;
  int record_every = 1;              // record each n-th accepted step
  std::vector<double> sample_times;  // when set, step exactly onto these
  bool keep_trajectory = true;

  void validate() const {
    if (!(t0 < t_end)) throw ConfigError("integration needs t0 < t_end");
    if (!(rel_tol > 0) || !(abs_tol > 0)) throw ConfigError("integration tolerances must be positive");
  }
};

using Rhs = std::function<Vector(double, const Vector&)>;

struct FlowSample {
  double t;
  Vector y;
  Vector ydot;
};

// Dense trajectory with cubic Hermite interpolation between accepted steps.
struct FlowTrajectory {
  std::vector<FlowSample> samples;
  Vector at(double t) const;
  Vector deriv_at(double t) const;
  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }
};

// Per-row probes evaluated on the integration state. energy_direction -1
// flags rows where the energy increased beyond 10x the local tolerance,
// +1 flags decreases, 0 records without checking.
struct FlowProbe {
  std::function<double(double, const Vector&)> f_gap;
  std::function<double(double, const Vector&)> grad_norm;
  std::function<double(double, const Vector&)> energy;
  int energy_direction = -1;
};

struct IntegrateResult {
  Trace trace;
  FlowTrajectory trajectory;
  double t_final = 0.0;
  Vector y_final;
  long steps = 0;
  long rejected = 0;
};

// Embedded Dormand-Prince 5(4) with PI step control.
IntegrateResult integrate(const Rhs& rhs, const Vector& y0, const IntegratorConfig& cfg,
                          const FlowProbe& probe = {});

// --- right-hand sides (state layouts noted per flow) ---

// state X: dX/dt = -grad f / ||grad f||^((p-2)/(p-1)); zero below the gradient floor.
Rhs rescaled_gradient_rhs(const ObjectiveOracle& f, double p);

// state X: dX/dt = -(grad^2 h)^-1 grad f.
Rhs natural_gradient_rhs(const ObjectiveOracle& f, const DistanceGenerator& h);

// state W (dual coordinates, X = grad_h_inverse(W)): dW/dt = -grad f(X).
Rhs mirror_flow_rhs(const ObjectiveOracle& f, const DistanceGenerator& h);

// state [X; W] with W = grad h(Z): dX/dt = e^alpha (Z - X),
// dW/dt = -e^(beta-alpha) grad f(X). Requires the ideal scaling (checked at t0).
Rhs bregman_flow_rhs(const ObjectiveOracle& f, const DistanceGenerator& h, const ScalingTriple& s,
                     double t0);

// state [X; V]: dX/dt = V, dV/dt = -(r/t) V - grad f(X).
Rhs sbc_flow_rhs(const ObjectiveOracle& f, double r);

// state [X; V]: solves grad^2 h(X) A = -(1/2 grad^3 h(X)[V,V] + e^beta grad f(X))
//               - grad^2 h(X) gamma' V for the acceleration.
Rhs hessian_flow_rhs(const ObjectiveOracle& f, const DistanceGenerator& h, const ScalingTriple& s);

// state [X; V]: ||V||^(p-2)(m A + V) + m(p-2)||V||^(p-4)<A,V>V + grad f(X) = 0.
Rhs p_power_flow_rhs(const ObjectiveOracle& f, double p, double mass);

// state [X; V]: the second-order phase form of the accelerated flow,
// dV/dt = -((p+1)/t) V - C p^2 t^(p-2) (grad^2 h at Z)^-1 grad f(X).
Rhs nesterov_second_order_rhs(const ObjectiveOracle& f, const DistanceGenerator& h, double p,
                              double C);

// Acceleration of the two-phase flow at (t, X, Z), from its own equation.
Vector bregman_flow_acceleration(const ObjectiveOracle& f, const DistanceGenerator& h,
                                 const ScalingTriple& s, double t, const Vector& X, const Vector& Z);

struct EnergyParams {
  double p = 2.0;
  double C = 0.25;
};

// kind: "rescaled" (f-gap)^(-1/(p-1)); "nesterov" C t^p gap + D_h(x*, X + (t/p)V);
// "bregman" e^(beta-2alpha) gap + D_h(x*, X + e^-alpha V); "natural" t gap + D_h(x*, X).
double energy_value(const std::string& kind, const ObjectiveOracle& f, const DistanceGenerator* h,
                    const ScalingTriple* s, const FlowState& state, const EnergyParams& prm);

// Raw two-sequence discretization of the accelerated flow (no extra inner
// step): x_{k+1} = (p/k) z_k + ((k-p)/k) x_k plus a weighted mirror step.
// Starts at k = ceil(p)+1 with both sequences seeded at X0. When
// with_y_sequence is set this delegates to the accelerated method with
// monomial weights.
Trace euler_discretize_nesterov(const ObjectiveOracle& f, const DistanceGenerator& h, int p,
                                double C, double delta, long k_max, const Vector& X0,
                                bool with_y_sequence = false);

// Mirror-step discretization of the exponential flow; requires c*delta < 1.
Trace exp_euler_discretize(const ObjectiveOracle& f, const DistanceGenerator& h, double c,
                           double delta, long k_max, const Vector& X0);

}  // namespace accel

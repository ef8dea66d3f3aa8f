#pragma once

#include "accel/oracle.hpp"
#include "accel/subproblem.hpp"
#include "accel/trace.hpp"

namespace accel {

// i (i+1) ... (i+m-1), m factors. Throws std::overflow_error past 2^63.
long long rising_factorial(long long i, int m);
double rising_factorial_d(double i, int m);

// One tau step of the momentum-weight recursion tau_k^2/(1-tau_k) = tau_prev^2.
double agd_tau_next(double tau_prev);

// Aggregated estimate function: sum of weighted linearizations of f plus a
// Bregman regularizer anchored at x0. Linear pieces are folded into running
// sums, which is enough to evaluate psi anywhere and to minimize it exactly.
class EstimateFunction {
 public:
  EstimateFunction(const DistanceGenerator& h, Vector anchor, double eps_sigma);

  void add(double weight, const Vector& y, double f_y, const Vector& grad_y);
  double value_at(const Vector& x) const;
  Vector minimizer() const;
  double min_value() const { return value_at(minimizer()); }
  double total_weight() const { return weight_sum_; }
  const Vector& gradient_sum() const { return grad_sum_; }

 private:
  const DistanceGenerator* h_;
  Vector anchor_;
  Vector dual_anchor_;
  Vector grad_sum_;
  double const_sum_ = 0.0;
  double weight_sum_ = 0.0;
  double eps_sigma_;
};

// Higher-order gradient descent: repeated Taylor steps with weight 1/eps.
// Rows carry the per-step residual-decrease flag ("lemma1", checked against
// the level-set radius estimated from the trace) and a descent flag.
Trace gp_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0);

// Accelerated higher-order method: Taylor step with weight 2/eps, a weighted
// mirror-descent dual update, and a convex coupling. Rows carry the progress
// flag ("lemma2"), the estimate-function sandwich flags ("prop1", "estfunc"),
// and the dual-vs-recursive z agreement flag ("dualforms"). points holds x_k,
// the f_gap column evaluates y_k.
Trace agp_run(const ObjectiveOracle& f, const DistanceGenerator& h, const MethodConfig& cfg,
              const Vector& x0);

// Classical accelerated gradient descent with the recursive tau coupling.
Trace agd_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0);

// Accelerated mirror descent with weights (k+1)/2 and coupling 2/(k+3).
Trace amd_run(const ObjectiveOracle& f, const DistanceGenerator& h, const MethodConfig& cfg,
              const Vector& x0);

// Accelerated cubic-regularized Newton with weights k(k+1)/2, coupling
// 3/(k+3), and the exact cubic dual step anchored at x0.
Trace acn_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0);

Vector mirror_descent_step(const ObjectiveOracle& f, const DistanceGenerator& h, const Vector& x,
                           double eps);
Vector natural_gradient_step(const ObjectiveOracle& f, const DistanceGenerator& h, const Vector& x,
                             double eps);

// Taylor steps with weight 2/eps under uniform convexity; rows carry the
// per-step geometric contraction flag and the closed-form rate flag.
Trace gp_uniformly_convex_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0);

// Periodically restarted accelerated method: every m = ceil(24p/kappa^(1/p))
// iterations the accelerated run is restarted from its own output with the
// p-th power generator recentered there. Cycle-end rows carry the distance
// contraction flag; a final Taylor polish step maps distance to function gap.
Trace restart_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0);

// sigma of f used by the uniformly convex runs: cfg.sigma_f if set, else the
// oracle certificate, else a sampled lower bound over random pairs.
double resolve_sigma_f(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0,
                       std::string* provenance = nullptr);

}  // namespace accel

#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "accel/flows.hpp"
#include "accel/problems.hpp"
#include "accel/trace.hpp"

namespace accel {

struct RateFit {
  double window = 0.5;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  long n = 0;
};

// Least-squares slope of ln(f_gap) against ln(index) over the tail window
// (fraction of the index range on log axes; default last half).
RateFit fit_rate(const Trace& trace, double window = 0.5);

// Same fit against the raw index; used for linear-rate traces.
RateFit fit_linear_rate(const Trace& trace, double window = 0.5);

struct BoundReport {
  std::string bound;
  double max_ratio = 0.0;  // worst f_gap / bound over the trace
  double at_index = 0.0;
  long checked = 0;
  double min_ratio = 0.0;  // tightness profile
};

// Evaluates a named closed-form bound at every row. Ids: gp, agp, agd, amd,
// acn, cubnewt, gp-uc, restart, rescflow, nestflow, exprate, sbc, inf.
BoundReport compare_bound(const Trace& trace, const std::string& bound_id);

// CSV header: index,f_gap,energy,grad_norm,flags. Flags are name:ok or
// name:fail tokens joined by semicolons.
void emit_csv(const Trace& trace, std::ostream& os);
Trace parse_csv(std::istream& is);

nlohmann::json trace_to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& j);

// Writes CSV or JSON ("csv" / "json") to the given path.
void emit(const Trace& trace, const std::string& format, const std::string& path);

struct ExperimentConfig {
  ProblemSpec problem;
  GeneratorSpec generator;     // used by the mirror-descent style methods
  bool has_generator = false;  // default generator follows the method
  std::string method;          // gp|agp|agd|amd|acn|restart|gp-uc
  std::string flow;            // rescaled|natural|mirror|nesterov|bregman|exp|sbc|hessian|ppower
  int p = 2;
  double eps = 0.1;
  double C = -1.0;
  double c = 1.0;     // exponential-rate constant
  double r = 3.0;     // damping coefficient of the (r/t) flow
  double mass = 1.0;  // p-power flow mass
  long max_iters = 1000;
  double sigma_f = -1.0;
  IntegratorConfig integrator;
  std::uint64_t seed = 0;
  std::vector<double> x0;  // overrides the catalogue start point
  std::string out;         // output path ("" = stdout)
  std::string format = "csv";
  std::vector<std::string> checks;  // energy kinds to attach to flows

  void validate() const;
};

void from_json(const nlohmann::json& j, ExperimentConfig& cfg);
nlohmann::json to_json_config(const ExperimentConfig& cfg);

struct RunResult {
  Trace trace;
  int exit_code = 0;  // 0 clean, 2 invariant flags raised
};

// Dispatches to the discrete methods or the flow integrator and attaches
// trace metadata (time-scaling map, seed, config snapshot).
RunResult run(const ExperimentConfig& cfg);

// Largest distance between matched discrete iterates and the flow trajectory
// under the identification t = delta * k.
double overlay_sup_distance(const Trace& discrete, const FlowTrajectory& flow, double delta,
                            int dim);

}  // namespace accel

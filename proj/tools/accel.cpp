// Command-line front end: run discrete methods and flows from JSON configs,
// transport scaling triples under time dilation, and fit rates on traces.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "accel/harness.hpp"
#include "accel/lagrangian.hpp"

using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  json j;
  is >> j;
  return j;
}

accel::ExperimentConfig load_config(const std::string& path) {
  return load_json(path).get<accel::ExperimentConfig>();
}

int emit_result(const accel::RunResult& res, const accel::ExperimentConfig& cfg) {
  if (!cfg.out.empty()) {
    accel::emit(res.trace, cfg.format, cfg.out);
    std::cerr << "wrote " << res.trace.records.size() << " rows to " << cfg.out << "\n";
  } else {
    if (cfg.format == "json")
      std::cout << accel::trace_to_json(res.trace).dump(2) << "\n";
    else
      accel::emit_csv(res.trace, std::cout);
  }
  if (res.exit_code != 0) {
    std::cerr << "invariant flags raised:";
    for (const auto& name : res.trace.failed_flags()) std::cerr << ' ' << name;
    std::cerr << "\n";
  }
  return res.exit_code;
}

accel::TimeDilation parse_tau(const std::string& s) {
  auto pos = s.find(':');
  std::string kind = s.substr(0, pos);
  double param = pos == std::string::npos ? 1.0 : std::stod(s.substr(pos + 1));
  if (kind == "identity") return accel::identity_dilation();
  if (kind == "poly" || kind == "polynomial") return accel::polynomial_dilation(param);
  if (kind == "linear") return accel::linear_dilation(param);
  if (kind == "exp" || kind == "exponential") return accel::exponential_dilation(param);
  throw accel::ConfigError("unknown dilation: " + s + " (use kind:param)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for accelerated methods and their flows"};
  app.require_subcommand(1);

  std::string config_path, out_path, format, method, flow;
  int p = 0;
  double eps = 0.0, t_end = 0.0;

  auto* solve = app.add_subcommand("solve", "run a discrete-time method");
  solve->add_option("--config", config_path, "experiment config (JSON)")->required();
  solve->add_option("--method", method, "gp|agp|agd|amd|acn|restart|gp-uc");
  solve->add_option("--p", p, "method order");
  solve->add_option("--eps", eps, "step size");
  solve->add_option("--out", out_path, "output trace path");
  solve->add_option("--format", format, "csv|json");

  auto* flowcmd = app.add_subcommand("flow", "integrate a continuous-time flow");
  flowcmd->add_option("--config", config_path, "experiment config (JSON)")->required();
  flowcmd->add_option("--flow", flow,
                      "rescaled|natural|mirror|nesterov|bregman|exp|sbc|hessian|ppower");
  flowcmd->add_option("--p", p, "flow order");
  flowcmd->add_option("--t-end", t_end, "integration horizon");
  flowcmd->add_option("--out", out_path, "output trace path");
  flowcmd->add_option("--format", format, "csv|json");

  std::string from_path, tau_spec;
  bool check_el = false;
  auto* dilate_cmd = app.add_subcommand("dilate", "transport a scaling triple through a dilation");
  dilate_cmd->add_option("--from", from_path, "scaling triple (JSON)")->required();
  dilate_cmd->add_option("--tau", tau_spec, "dilation kind:param")->required();
  dilate_cmd->add_flag("--check-el", check_el, "verify the dilated stationarity residual");

  std::string trace_path, bound_id;
  double window = 0.5;
  auto* rates = app.add_subcommand("rates", "fit convergence rates on a trace");
  rates->add_option("--trace", trace_path, "trace file (CSV or JSON)")->required();
  rates->add_option("--window", window, "tail fraction used for the fit");
  rates->add_option("--bound", bound_id, "closed-form bound id to compare");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve || *flowcmd) {
      accel::ExperimentConfig cfg = load_config(config_path);
      if (!method.empty()) {
        cfg.method = method;
        cfg.flow.clear();
      }
      if (!flow.empty()) {
        cfg.flow = flow;
        cfg.method.clear();
      }
      if (p > 0) cfg.p = p;
      if (eps > 0) cfg.eps = eps;
      if (t_end > 0) cfg.integrator.t_end = t_end;
      if (!out_path.empty()) cfg.out = out_path;
      if (!format.empty()) cfg.format = format;
      return emit_result(accel::run(cfg), cfg);
    }

    if (*dilate_cmd) {
      accel::ScalingTriple base = accel::scaling_from_json(load_json(from_path));
      accel::TimeDilation tau = parse_tau(tau_spec);
      accel::ScalingTriple dilated = accel::dilate(base, tau);

      json out;
      out["triple"] = accel::scaling_to_json(dilated);
      out["samples"] = json::array();
      for (double t : {0.5, 1.0, 2.0, 5.0, 10.0}) {
        auto [rb, rg] = accel::ideal_scaling_residual(dilated, t);
        out["samples"].push_back({{"t", t},
                                  {"alpha", dilated.alpha(t)},
                                  {"beta", dilated.beta(t)},
                                  {"gamma", dilated.gamma(t)},
                                  {"rho", dilated.rho(t)},
                                  {"ideal_residual_beta", rb},
                                  {"ideal_residual_gamma", rg}});
      }
      int code = 0;
      if (check_el) {
        accel::ProblemSpec ps;
        ps.kind = "quadratic";
        ps.dim = 2;
        ps.seed = 7;
        auto [f, x0] = accel::make_problem(ps);
        accel::DistanceGenerator h = accel::euclidean_generator(2);
        accel::IntegratorConfig ic;
        ic.t0 = 1e-3;
        ic.t_end = 40.0;
        ic.rel_tol = 1e-10;
        ic.abs_tol = 1e-12;
        auto rep = accel::dilated_curve_check(f, h, base, tau, ic, x0);
        out["el_check"] = {{"max_residual", rep.max_residual},
                           {"max_normalized_residual", rep.max_normalized_residual},
                           {"rho_end", rep.rho_end},
                           {"samples", rep.samples}};
        if (rep.max_normalized_residual > 1e-4) code = 2;
      }
      std::cout << out.dump(2) << "\n";
      return code;
    }

    if (*rates) {
      accel::Trace tr;
      if (trace_path.size() > 5 && trace_path.substr(trace_path.size() - 5) == ".json") {
        tr = accel::trace_from_json(load_json(trace_path));
      } else {
        std::ifstream is(trace_path);
        if (!is) throw std::runtime_error("cannot open " + trace_path);
        tr = accel::parse_csv(is);
      }
      accel::RateFit fit = accel::fit_rate(tr, window);
      json out = {{"slope", fit.slope},
                  {"intercept", fit.intercept},
                  {"r_squared", fit.r_squared},
                  {"window", fit.window},
                  {"points", fit.n}};
      int code = 0;
      if (!bound_id.empty()) {
        accel::BoundReport rep = accel::compare_bound(tr, bound_id);
        out["bound"] = {{"id", rep.bound},
                        {"max_violation_ratio", rep.max_ratio},
                        {"at_index", rep.at_index},
                        {"min_ratio", rep.min_ratio},
                        {"rows_checked", rep.checked}};
        if (rep.max_ratio > 1.02) code = 2;
      }
      std::cout << out.dump(2) << "\n";
      return code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

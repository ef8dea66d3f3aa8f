#include "accel/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "accel/discrete.hpp"
#include "accel/divergence.hpp"
#include "accel/lagrangian.hpp"

namespace accel {

using nlohmann::json;

namespace {

struct Series {
  std::vector<double> x, y;
};

Series tail_series(const Trace& tr, double window, bool log_index) {
  Series s;
  double imin = std::numeric_limits<double>::infinity(), imax = -imin;
  for (const auto& r : tr.records) {
    if (!(r.f_gap > 0) || !std::isfinite(r.f_gap)) continue;
    if (log_index && !(r.index > 0)) continue;
    imin = std::min(imin, r.index);
    imax = std::max(imax, r.index);
  }
  if (!(imax > imin)) throw ConfigError("trace has no usable rows for a rate fit");
  double cut = log_index
                   ? std::exp(std::log(imax) - window * (std::log(imax) - std::log(imin)))
                   : imax - window * (imax - imin);
  for (const auto& r : tr.records) {
    if (!(r.f_gap > 0) || !std::isfinite(r.f_gap)) continue;
    if (log_index && !(r.index > 0)) continue;
    if (r.index < cut) continue;
    s.x.push_back(log_index ? std::log(r.index) : r.index);
    s.y.push_back(std::log(r.f_gap));
  }
  return s;
}

RateFit least_squares(const Series& s, double window) {
  if (s.x.size() < 10) throw ConfigError("rate fit needs at least 10 points in the window");
  const long n = static_cast<long>(s.x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (long i = 0; i < n; ++i) {
    sx += s.x[i];
    sy += s.y[i];
    sxx += s.x[i] * s.x[i];
    sxy += s.x[i] * s.y[i];
    syy += s.y[i] * s.y[i];
  }
  double denom = n * sxx - sx * sx;
  RateFit fit;
  fit.window = window;
  fit.n = n;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (long i = 0; i < n; ++i) {
    double e = s.y[i] - (fit.intercept + fit.slope * s.x[i]);
    ss_res += e * e;
  }
  fit.r_squared = ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

}  // namespace

RateFit fit_rate(const Trace& trace, double window) {
  return least_squares(tail_series(trace, window, true), window);
}

RateFit fit_linear_rate(const Trace& trace, double window) {
  return least_squares(tail_series(trace, window, false), window);
}

BoundReport compare_bound(const Trace& tr, const std::string& id) {
  BoundReport rep;
  rep.bound = id;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  auto need = [&](const std::string& k) { return tr.scalar(k); };

  std::function<double(const TraceRecord&)> bound;
  if (id == "inf") {
    bound = [](const TraceRecord&) { return std::numeric_limits<double>::infinity(); };
  } else if (id == "gp") {
    double p = need("p"), eps = need("eps"), R = need("R");
    bound = [=](const TraceRecord& r) {
      if (r.index < 1) return std::numeric_limits<double>::infinity();
      return std::pow(p - 1.0, p - 1.0) * std::pow(R, p) / (eps * std::pow(r.index, p - 1.0));
    };
  } else if (id == "agp") {
    double p = need("p"), eps = need("eps"), C = need("C"), sigma = need("sigma"),
           Dh = need("Dh");
    bound = [=](const TraceRecord& r) {
      if (r.index < 1) return std::numeric_limits<double>::infinity();
      return Dh / (C * eps * sigma * rising_factorial_d(r.index, static_cast<int>(p)));
    };
  } else if (id == "agd") {
    double eps = need("eps"), R0 = need("R0");
    bound = [=](const TraceRecord& r) {
      return 4.0 * R0 * R0 / (eps * (r.index + 2.0) * (r.index + 2.0));
    };
  } else if (id == "amd") {
    double eps = need("eps"), sigma = need("sigma"), Dh = need("Dh");
    bound = [=](const TraceRecord& r) {
      return 4.0 * Dh / (eps * sigma * (r.index + 1.0) * (r.index + 2.0));
    };
  } else if (id == "acn") {
    double eps = need("eps"), R0 = need("R0");
    bound = [=](const TraceRecord& r) {
      if (r.index < 1) return std::numeric_limits<double>::infinity();
      return 14.0 * std::pow(R0, 3) / (eps * r.index * (r.index + 1.0) * (r.index + 2.0));
    };
  } else if (id == "cubnewt") {
    double eps = need("eps"), R0 = need("R0");
    bound = [=](const TraceRecord& r) {
      return 27.0 * R0 * R0 / (eps * (r.index + 3.0) * (r.index + 3.0));
    };
  } else if (id == "gp-uc") {
    double eps = need("eps"), p = need("p"), kappa = need("kappa"), R0 = need("R0");
    double contraction = 1.0 + 0.25 * std::pow(kappa, 1.0 / (p - 1.0));
    bound = [=](const TraceRecord& r) {
      if (r.index < 1) return std::numeric_limits<double>::infinity();
      return 3.0 * std::pow(R0, p) / (eps * p * std::pow(contraction, r.index - 1.0));
    };
  } else if (id == "restart") {
    double eps = need("eps"), p = need("p"), m = need("m"), R0 = need("R0");
    bound = [=](const TraceRecord& r) {
      // the envelope applies to the polished cycle boundaries
      if (!r.flags.count("cycle") && !r.flags.count("polish"))
        return std::numeric_limits<double>::infinity();
      return 3.0 * std::pow(R0, p) / (eps * p * std::exp(r.index / m));
    };
  } else if (id == "rescflow") {
    double p = need("p"), R = need("R");
    bound = [=](const TraceRecord& r) {
      if (!(r.index > 0)) return std::numeric_limits<double>::infinity();
      return std::pow(p - 1.0, p - 1.0) * std::pow(R, p) / std::pow(r.index, p - 1.0);
    };
  } else if (id == "nestflow") {
    double p = need("p"), C = need("C"), Dh = need("Dh");
    bound = [=](const TraceRecord& r) {
      if (!(r.index > 0)) return std::numeric_limits<double>::infinity();
      return Dh / (C * std::pow(r.index, p));
    };
  } else if (id == "exprate") {
    double c = need("c"), E0 = need("E0");
    bound = [=](const TraceRecord& r) { return E0 * std::exp(-c * r.index); };
  } else if (id == "sbc") {
    double rr = need("r"), E0 = need("E0");
    bound = [=](const TraceRecord& rec) {
      if (!(rec.index > 0)) return std::numeric_limits<double>::infinity();
      return (rr - 1.0) * (rr - 1.0) * E0 / (rec.index * rec.index);
    };
  } else {
    throw ConfigError("unknown bound id: " + id);
  }

  for (const auto& r : tr.records) {
    double b = bound(r);
    if (!std::isfinite(b) || !std::isfinite(r.f_gap)) continue;
    double ratio = r.f_gap <= 0 ? 0.0 : r.f_gap / b;
    ++rep.checked;
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.at_index = r.index;
    }
  }
  if (rep.checked == 0) rep.min_ratio = 0.0;
  return rep;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string flags_token(const std::map<std::string, bool>& flags) {
  std::string out;
  for (const auto& [name, ok] : flags) {
    if (!out.empty()) out += ";";
    out += name + (ok ? ":ok" : ":fail");
  }
  return out;
}

}  // namespace

void emit_csv(const Trace& tr, std::ostream& os) {
  os << "index,f_gap,energy,grad_norm,flags\n";
  for (const auto& r : tr.records) {
    os << fmt_double(r.index) << ',' << fmt_double(r.f_gap) << ',' << fmt_double(r.energy) << ','
       << fmt_double(r.grad_norm) << ',' << flags_token(r.flags) << '\n';
  }
}

Trace parse_csv(std::istream& is) {
  Trace tr;
  std::string line;
  if (!std::getline(is, line) || line.rfind("index,", 0) != 0)
    throw ConfigError("not a trace CSV: missing header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    TraceRecord r;
    std::getline(ss, cell, ',');
    r.index = std::stod(cell);
    std::getline(ss, cell, ',');
    r.f_gap = std::stod(cell);
    std::getline(ss, cell, ',');
    r.energy = std::stod(cell);
    std::getline(ss, cell, ',');
    r.grad_norm = std::stod(cell);
    std::getline(ss, cell);
    std::stringstream fs(cell);
    std::string tok;
    while (std::getline(fs, tok, ';')) {
      auto pos = tok.rfind(':');
      if (pos == std::string::npos) continue;
      r.flags[tok.substr(0, pos)] = tok.substr(pos + 1) == "ok";
    }
    tr.records.push_back(std::move(r));
  }
  return tr;
}

json trace_to_json(const Trace& tr) {
  json j;
  j["meta"] = {{"id", tr.meta.id},         {"config", tr.meta.config},
               {"delta", tr.meta.delta},   {"seed", tr.meta.seed},
               {"scalars", tr.meta.scalars}, {"notes", tr.meta.notes}};
  j["records"] = json::array();
  for (const auto& r : tr.records) {
    j["records"].push_back({{"index", r.index},
                            {"f_gap", r.f_gap},
                            {"energy", r.energy},
                            {"grad_norm", r.grad_norm},
                            {"flags", r.flags}});
  }
  j["points"] = json::array();
  for (const auto& p : tr.points) {
    json row = json::array();
    for (int i = 0; i < p.size(); ++i) row.push_back(p(i));
    j["points"].push_back(std::move(row));
  }
  return j;
}

Trace trace_from_json(const json& j) {
  Trace tr;
  const auto& m = j.at("meta");
  tr.meta.id = m.at("id").get<std::string>();
  tr.meta.config = m.at("config");
  tr.meta.delta = m.at("delta").get<double>();
  tr.meta.seed = m.at("seed").get<std::uint64_t>();
  tr.meta.scalars = m.at("scalars").get<std::map<std::string, double>>();
  tr.meta.notes = m.at("notes").get<std::map<std::string, std::string>>();
  for (const auto& rj : j.at("records")) {
    TraceRecord r;
    r.index = rj.at("index").get<double>();
    r.f_gap = rj.at("f_gap").get<double>();
    r.energy = rj.at("energy").get<double>();
    r.grad_norm = rj.at("grad_norm").get<double>();
    r.flags = rj.at("flags").get<std::map<std::string, bool>>();
    tr.records.push_back(std::move(r));
  }
  for (const auto& pj : j.at("points")) {
    Vector v(static_cast<int>(pj.size()));
    for (int i = 0; i < v.size(); ++i) v(i) = pj.at(i).get<double>();
    tr.points.push_back(std::move(v));
  }
  return tr;
}

void emit(const Trace& tr, const std::string& format, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  if (format == "csv")
    emit_csv(tr, os);
  else if (format == "json")
    os << trace_to_json(tr).dump(2) << '\n';
  else
    throw ConfigError("unknown trace format: " + format);
  if (!os) throw std::runtime_error("write failed: " + path);
}

void ExperimentConfig::validate() const {
  if (method.empty() == flow.empty())
    throw ConfigError("config needs exactly one of method or flow");
  if (!method.empty()) {
    MethodConfig mc;
    mc.p = p;
    mc.eps = eps;
    mc.max_iters = max_iters;
    mc.validate();
  }
  if (!flow.empty() && !(integrator.t0 < integrator.t_end))
    throw ConfigError("flow configs need integrator.t0 < integrator.t_end");
}

void from_json(const json& j, ExperimentConfig& cfg) {
  cfg.problem = j.at("problem").get<ProblemSpec>();
  if (j.contains("generator")) {
    cfg.generator = j.at("generator").get<GeneratorSpec>();
    cfg.has_generator = true;
  }
  cfg.method = j.value("method", "");
  cfg.flow = j.value("flow", "");
  cfg.p = j.value("p", 2);
  cfg.eps = j.value("eps", 0.1);
  cfg.C = j.value("C", -1.0);
  cfg.c = j.value("c", 1.0);
  cfg.r = j.value("r", 3.0);
  cfg.mass = j.value("mass", 1.0);
  cfg.max_iters = j.value("max_iters", 1000L);
  cfg.sigma_f = j.value("sigma_f", -1.0);
  cfg.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("x0")) cfg.x0 = j.at("x0").get<std::vector<double>>();
  cfg.out = j.value("out", "");
  cfg.format = j.value("format", "csv");
  if (j.contains("checks")) cfg.checks = j.at("checks").get<std::vector<std::string>>();
  if (j.contains("integrator")) {
    const auto& ji = j.at("integrator");
    cfg.integrator.rel_tol = ji.value("rel_tol", 1e-8);
    cfg.integrator.abs_tol = ji.value("abs_tol", 1e-10);
    cfg.integrator.t0 = ji.value("t0", 0.0);
    cfg.integrator.t_end = ji.value("t_end", 10.0);
    cfg.integrator.max_steps = ji.value("max_steps", 2'000'000L);
    cfg.integrator.record_every = ji.value("record_every", 1);
  }
}

json to_json_config(const ExperimentConfig& cfg) {
  json j;
  j["problem"] = cfg.problem;
  if (cfg.has_generator) j["generator"] = cfg.generator;
  if (!cfg.method.empty()) j["method"] = cfg.method;
  if (!cfg.flow.empty()) j["flow"] = cfg.flow;
  j["p"] = cfg.p;
  j["eps"] = cfg.eps;
  j["C"] = cfg.C;
  j["c"] = cfg.c;
  j["r"] = cfg.r;
  j["mass"] = cfg.mass;
  j["max_iters"] = cfg.max_iters;
  j["seed"] = cfg.seed;
  j["integrator"] = {{"rel_tol", cfg.integrator.rel_tol}, {"abs_tol", cfg.integrator.abs_tol},
                     {"t0", cfg.integrator.t0},           {"t_end", cfg.integrator.t_end},
                     {"max_steps", cfg.integrator.max_steps},
                     {"record_every", cfg.integrator.record_every}};
  return j;
}

namespace {

bool wants_check(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& c : cfg.checks)
    if (c == name) return true;
  return false;
}

Trace run_discrete(const ExperimentConfig& cfg, const ObjectiveOracle& f, const Vector& x0) {
  MethodConfig mc;
  mc.p = cfg.p;
  mc.eps = cfg.eps;
  mc.C = cfg.C;
  mc.max_iters = cfg.max_iters;
  mc.sigma_f = cfg.sigma_f;

  if (cfg.method == "gp") return gp_run(f, mc, x0);
  if (cfg.method == "agd") return agd_run(f, mc, x0);
  if (cfg.method == "acn") {
    mc.p = 3;
    return acn_run(f, mc, x0);
  }
  if (cfg.method == "gp-uc") return gp_uniformly_convex_run(f, mc, x0);
  if (cfg.method == "restart") return restart_run(f, mc, x0);
  if (cfg.method == "agp") {
    DistanceGenerator h = cfg.has_generator ? make_generator(cfg.generator)
                                            : ppower_generator(cfg.p, x0);
    return agp_run(f, h, mc, x0);
  }
  if (cfg.method == "amd") {
    DistanceGenerator h = cfg.has_generator ? make_generator(cfg.generator)
                                            : euclidean_generator(f.dim);
    return amd_run(f, h, mc, x0);
  }
  throw ConfigError("unknown method: " + cfg.method);
}

Trace run_flow(const ExperimentConfig& cfg, const ObjectiveOracle& f, const Vector& x0) {
  IntegratorConfig ic = cfg.integrator;
  const int d = f.dim;
  DistanceGenerator h = cfg.has_generator ? make_generator(cfg.generator)
                                          : euclidean_generator(d);

  const bool singular_at_zero =
      cfg.flow == "nesterov" || cfg.flow == "sbc" || cfg.flow == "bregman" || cfg.flow == "hessian";
  if (singular_at_zero && ic.t0 <= 0.0) ic.t0 = 1e-3;

  FlowProbe probe;
  auto gap_on_x = [&f](double, const Vector& y) { return f.gap(y.head(f.dim)); };
  auto grad_on_x = [&f](double, const Vector& y) { return f.gradient(y.head(f.dim)).norm(); };

  Rhs rhs;
  Vector y0;
  ScalingTriple scaling;
  bool has_scaling = false;
  EnergyParams prm{double(cfg.p), cfg.C > 0 ? cfg.C : 0.25};

  if (cfg.flow == "rescaled") {
    rhs = rescaled_gradient_rhs(f, cfg.p);
    y0 = x0;
    if (wants_check(cfg, "energy")) {
      probe.energy = [&f, prm](double t, const Vector& y) {
        return energy_value("rescaled", f, nullptr, nullptr, {t, y, {}, {}}, prm);
      };
      probe.energy_direction = +1;
    }
  } else if (cfg.flow == "natural") {
    rhs = natural_gradient_rhs(f, h);
    y0 = x0;
    if (wants_check(cfg, "energy")) {
      probe.energy = [&f, h, prm](double t, const Vector& y) {
        return energy_value("natural", f, &h, nullptr, {t, y, {}, {}}, prm);
      };
    }
  } else if (cfg.flow == "mirror") {
    rhs = mirror_flow_rhs(f, h);
    y0 = h.grad_h(x0);
    probe.f_gap = [&f, h](double, const Vector& w) { return f.gap(h.grad_h_inverse(w)); };
    probe.grad_norm = [&f, h](double, const Vector& w) {
      return f.gradient(h.grad_h_inverse(w)).norm();
    };
    if (wants_check(cfg, "energy")) {
      probe.energy = [&f, h, prm](double t, const Vector& w) {
        return energy_value("natural", f, &h, nullptr, {t, h.grad_h_inverse(w), {}, {}}, prm);
      };
    }
  } else if (cfg.flow == "nesterov" || cfg.flow == "exp" || cfg.flow == "bregman") {
    if (cfg.flow == "nesterov")
      scaling = nesterov_scaling(cfg.p, prm.C);
    else if (cfg.flow == "exp")
      scaling = exp_scaling(cfg.c);
    else
      scaling = nesterov_scaling(cfg.p, prm.C);
    has_scaling = true;
    rhs = bregman_flow_rhs(f, h, scaling, ic.t0);
    y0.resize(2 * d);
    y0 << x0, h.grad_h(x0);  // start at rest: Z = X
    if (wants_check(cfg, "energy")) {
      auto s = scaling;
      probe.energy = [&f, h, s, d](double t, const Vector& y) {
        FlowState st{t, y.head(d), Vector(h.grad_h_inverse(y.tail(d))), {}};
        return energy_value("bregman", f, &h, &s, st, {});
      };
    }
  } else if (cfg.flow == "sbc") {
    rhs = sbc_flow_rhs(f, cfg.r);
    y0.resize(2 * d);
    y0 << x0, Vector::Zero(d);
    if (wants_check(cfg, "energy")) {
      double r = cfg.r;
      probe.energy = [&f, r, d](double t, const Vector& y) {
        Vector X = y.head(d), V = y.tail(d);
        Vector w = X + (t / (r - 1.0)) * V - *f.minimizer;
        return t * t / ((r - 1.0) * (r - 1.0)) * f.gap(X) + 0.5 * w.squaredNorm();
      };
    }
  } else if (cfg.flow == "hessian") {
    scaling = nesterov_scaling(cfg.p, prm.C);
    has_scaling = true;
    rhs = hessian_flow_rhs(f, h, scaling);
    y0.resize(2 * d);
    y0 << x0, Vector::Zero(d);
  } else if (cfg.flow == "ppower") {
    rhs = p_power_flow_rhs(f, cfg.p, cfg.mass);
    y0.resize(2 * d);
    Vector v0 = Vector::Zero(d);
    if (cfg.p > 2) v0 = rescaled_gradient_rhs(f, cfg.p)(0.0, x0);  // slaved start
    y0 << x0, v0;
  } else {
    throw ConfigError("unknown flow: " + cfg.flow);
  }

  if (!probe.f_gap) probe.f_gap = gap_on_x;
  if (!probe.grad_norm) probe.grad_norm = grad_on_x;

  IntegrateResult res = integrate(rhs, y0, ic, probe);
  Trace tr = std::move(res.trace);
  tr.meta.id = "flow-" + cfg.flow;
  tr.meta.scalars["p"] = cfg.p;
  tr.meta.scalars["C"] = prm.C;
  tr.meta.scalars["c"] = cfg.c;
  tr.meta.scalars["r"] = cfg.r;
  if (f.min_value) tr.meta.scalars["f_star"] = *f.min_value;

  if (f.minimizer) {
    double R = 0.0;
    for (const auto& pt : tr.points) R = std::max(R, (pt.head(d) - *f.minimizer).norm());
    tr.meta.scalars["R"] = R;
    tr.meta.scalars["Dh"] = bregman_divergence(h, *f.minimizer, x0);
    double gap0 = f.gap(x0);
    if (cfg.flow == "exp") tr.meta.scalars["E0"] = gap0 + bregman_divergence(h, *f.minimizer, x0);
    if (cfg.flow == "sbc")
      tr.meta.scalars["E0"] = ic.t0 * ic.t0 / ((cfg.r - 1.0) * (cfg.r - 1.0)) * gap0 +
                              0.5 * (x0 - *f.minimizer).squaredNorm();
  }
  (void)has_scaling;
  return tr;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  cfg.validate();
  auto [f, x0_cat] = make_problem(cfg.problem);
  Vector x0 = x0_cat;
  if (!cfg.x0.empty()) {
    if (static_cast<int>(cfg.x0.size()) != f.dim)
      throw ConfigError("x0 override has the wrong dimension");
    x0 = Eigen::Map<const Vector>(cfg.x0.data(), f.dim);
  }

  Trace tr = cfg.method.empty() ? run_flow(cfg, f, x0) : run_discrete(cfg, f, x0);
  tr.meta.seed = cfg.seed ? cfg.seed : cfg.problem.seed;
  tr.meta.config = to_json_config(cfg);

  RunResult out;
  out.exit_code = tr.clean() ? 0 : 2;
  out.trace = std::move(tr);
  return out;
}

double overlay_sup_distance(const Trace& discrete, const FlowTrajectory& flow, double delta,
                            int dim) {
  if (discrete.points.empty()) throw ConfigError("discrete trace carries no iterate points");
  double sup = 0.0;
  for (std::size_t i = 0; i < discrete.records.size() && i < discrete.points.size(); ++i) {
    double t = delta * discrete.records[i].index;
    if (t < flow.t_begin() || t > flow.t_end()) continue;
    Vector X = flow.at(t).head(dim);
    sup = std::max(sup, (discrete.points[i].head(dim) - X).norm());
  }
  return sup;
}

}  // namespace accel

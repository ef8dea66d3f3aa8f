#include "accel/discrete.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "accel/problems.hpp"

namespace accel {

long long rising_factorial(long long i, int m) {
  if (i < 0 || m < 1) throw ConfigError("rising factorial needs i >= 0 and m >= 1");
  __int128 acc = 1;
  for (int j = 0; j < m; ++j) {
    acc *= (i + j);
    if (acc > std::numeric_limits<long long>::max())
      throw std::overflow_error("rising factorial exceeds 64-bit range");
  }
  return static_cast<long long>(acc);
}

double rising_factorial_d(double i, int m) {
  double acc = 1.0;
  for (int j = 0; j < m; ++j) acc *= (i + j);
  return acc;
}

double agd_tau_next(double tau_prev) {
  // positive root of tau^2 + a^2 tau - a^2 = 0, a = tau_prev
  double a2 = tau_prev * tau_prev;
  return 0.5 * (-a2 + std::sqrt(a2 * a2 + 4.0 * a2));
}

EstimateFunction::EstimateFunction(const DistanceGenerator& h, Vector anchor, double eps_sigma)
    : h_(&h),
      anchor_(std::move(anchor)),
      dual_anchor_(h.grad_h(anchor_)),
      grad_sum_(Vector::Zero(anchor_.size())),
      eps_sigma_(eps_sigma) {}

void EstimateFunction::add(double weight, const Vector& y, double f_y, const Vector& grad_y) {
  grad_sum_ += weight * grad_y;
  const_sum_ += weight * (f_y - grad_y.dot(y));
  weight_sum_ += weight;
}

double EstimateFunction::value_at(const Vector& x) const {
  return const_sum_ + grad_sum_.dot(x) + bregman_divergence(*h_, x, anchor_) / eps_sigma_;
}

Vector EstimateFunction::minimizer() const {
  return h_->grad_h_inverse(dual_anchor_ - eps_sigma_ * grad_sum_);
}

namespace {

double record_gap(const ObjectiveOracle& f, const Vector& x) {
  return f.min_value ? f.value(x) - *f.min_value : std::numeric_limits<double>::quiet_NaN();
}

void note_provenance(Trace& tr, const ObjectiveOracle& f) {
  if (!f.fstar_provenance.empty()) tr.meta.notes["fstar_provenance"] = f.fstar_provenance;
  if (f.min_value) tr.meta.scalars["f_star"] = *f.min_value;
}

double weight_k(const MethodConfig& cfg, long k) {
  return cfg.monomial_weights ? std::pow(static_cast<double>(k), cfg.p - 1)
                              : rising_factorial_d(static_cast<double>(k), cfg.p - 1);
}

}  // namespace

Trace gp_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0) {
  cfg.validate();
  Trace tr;
  tr.meta.id = "gp";
  tr.meta.delta = std::pow(cfg.eps, 1.0 / (cfg.p - 1));
  tr.meta.scalars = {{"p", double(cfg.p)}, {"eps", cfg.eps}};
  note_provenance(tr, f);

  const double expo = double(cfg.p) / (cfg.p - 1);
  Vector x = x0;
  auto push = [&](long k) {
    TraceRecord r;
    r.index = double(k);
    r.f_gap = record_gap(f, x);
    r.grad_norm = f.gradient(x).norm();
    r.energy = r.f_gap > 0 ? std::pow(r.f_gap, -1.0 / (cfg.p - 1))
                           : std::numeric_limits<double>::infinity();
    tr.records.push_back(std::move(r));
    tr.points.push_back(x);
  };
  push(0);
  for (long k = 0; k < cfg.max_iters; ++k) {
    Vector v = solve_surrogate(f, {cfg.p, 1.0 / cfg.eps, x, cfg.subproblem_tol});
    x += v;
    push(k + 1);
    if (cfg.stop_gap > 0 && tr.records.back().f_gap <= cfg.stop_gap) break;
  }

  if (f.minimizer) {
    double R = 0.0;
    for (const auto& pt : tr.points) R = std::max(R, (pt - *f.minimizer).norm());
    tr.meta.scalars["R"] = R;
    tr.meta.scalars["R0"] = (x0 - *f.minimizer).norm();
    const double rate = std::pow(cfg.eps, 1.0 / (cfg.p - 1)) / std::pow(R, expo);
    const double floor = 1e-13 * std::max(1.0, std::abs(f.min_value.value_or(0.0)));
    for (std::size_t k = 1; k < tr.records.size(); ++k) {
      double prev = tr.records[k - 1].f_gap;
      double cur = tr.records[k].f_gap;
      double slack = 1e-12 * std::max(1.0, prev);
      if (prev > floor)  // below it the gap sits at evaluation noise
        tr.records[k].flags["lemma1"] = cur <= prev - rate * std::pow(prev, expo) + slack;
      tr.records[k].flags["descent"] = cur <= prev + slack;
    }
  }
  return tr;
}

namespace {

Trace agp_run_impl(const ObjectiveOracle& f, const DistanceGenerator& h, const MethodConfig& cfg,
                   const Vector& x0, Vector* final_y) {
  cfg.validate();
  const double C = cfg.resolved_C();
  const double sigma = h.uc_constant;
  if (h.uc_order != cfg.p)
    throw ConfigError("generator uniform convexity order must equal the method order p");

  Trace tr;
  tr.meta.id = "agp";
  tr.meta.delta = std::pow(cfg.eps, 1.0 / cfg.p);
  tr.meta.scalars = {{"p", double(cfg.p)}, {"eps", cfg.eps}, {"C", C}, {"sigma", sigma}};
  note_provenance(tr, f);
  if (f.minimizer) {
    tr.meta.scalars["Dh"] = bregman_divergence(h, *f.minimizer, x0);
    tr.meta.scalars["R0"] = (x0 - *f.minimizer).norm();
  }

  EstimateFunction psi(h, x0, cfg.eps * sigma);
  Vector x = x0;
  Vector z = x0;
  Vector dual = h.grad_h(x0);
  const double fstar = f.min_value ? *f.min_value : 0.0;
  const bool have_star = f.min_value.has_value();

  for (long k = 0; k < cfg.max_iters; ++k) {
    Vector y = x + solve_surrogate(f, {cfg.p, 2.0 / cfg.eps, x, cfg.subproblem_tol});
    double fy = f.value(y);
    Vector gy = f.gradient(y);

    TraceRecord r;
    r.index = double(k);
    r.f_gap = have_star ? fy - fstar : std::numeric_limits<double>::quiet_NaN();
    r.grad_norm = gy.norm();

    {  // progress inequality of the 2/eps Taylor step
      double lhs = gy.dot(x - y);
      double rhs = 0.25 * std::pow(cfg.eps, 1.0 / (cfg.p - 1)) *
                   std::pow(gy.norm(), double(cfg.p) / (cfg.p - 1));
      r.flags["lemma2"] = lhs >= rhs - 1e-12 * std::max({1.0, lhs, rhs});
    }

    const double wk = C * cfg.p * weight_k(cfg, k);
    psi.add(wk, y, fy, gy);

    // dual-averaging form of the z-step, against its recursive rewriting
    Vector dual_prev_roundtrip = h.grad_h(z);
    dual -= cfg.eps * sigma * wk * gy;
    Vector z_dual = h.grad_h_inverse(dual);
    Vector z_rec = h.grad_h_inverse(dual_prev_roundtrip - cfg.eps * sigma * wk * gy);
    double ztol = 1e-10 * (1.0 + z_dual.norm());
    r.flags["dualforms"] = (z_dual - z_rec).norm() <= ztol;
    z = z_dual;

    const double Ak = psi.total_weight();  // = C k^(p) for the factorial weights
    double psi_star = psi.value_at(z);
    double scale = 1e-9 * (1.0 + std::abs(psi_star) + std::abs(Ak * fy));
    r.flags["prop1"] = Ak * fy <= psi_star + scale;
    if (have_star) {
      double upper = Ak * fstar + bregman_divergence(h, *f.minimizer, x0) / (cfg.eps * sigma);
      r.flags["estfunc"] = psi_star <= upper + scale;
      r.energy = Ak * r.f_gap;
    }

    tr.records.push_back(std::move(r));
    tr.points.push_back(x);

    x = (cfg.p * z + double(k) * y) / double(k + cfg.p);
    if (final_y) *final_y = y;
    if (cfg.stop_gap > 0 && have_star && fy - fstar <= cfg.stop_gap) break;
  }
  return tr;
}

}  // namespace

Trace agp_run(const ObjectiveOracle& f, const DistanceGenerator& h, const MethodConfig& cfg,
              const Vector& x0) {
  return agp_run_impl(f, h, cfg, x0, nullptr);
}

Trace agd_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0) {
  cfg.validate();
  Trace tr;
  tr.meta.id = "agd";
  tr.meta.delta = std::sqrt(cfg.eps);
  tr.meta.scalars = {{"p", 2.0}, {"eps", cfg.eps}};
  note_provenance(tr, f);
  if (f.minimizer) tr.meta.scalars["R0"] = (x0 - *f.minimizer).norm();

  Vector y = x0, z = x0;
  double tau_prev = 1.0;
  auto push = [&](long k, const Vector& yk) {
    TraceRecord r;
    r.index = double(k);
    r.f_gap = record_gap(f, yk);
    r.grad_norm = f.gradient(yk).norm();
    tr.records.push_back(std::move(r));
    tr.points.push_back(yk);
  };
  push(0, y);
  for (long k = 0; k < cfg.max_iters; ++k) {
    double tau = agd_tau_next(tau_prev);
    Vector x = tau * z + (1.0 - tau) * y;
    Vector g = f.gradient(x);
    y = x - cfg.eps * g;
    z = z - (cfg.eps / tau) * g;
    push(k + 1, y);
    tr.records.back().flags["taurec"] =
        std::abs(tau * tau / (1.0 - tau) - tau_prev * tau_prev) <= 1e-12;
    tau_prev = tau;
    if (cfg.stop_gap > 0 && tr.records.back().f_gap <= cfg.stop_gap) break;
  }
  tr.meta.scalars["tau_last"] = tau_prev;
  return tr;
}

Trace amd_run(const ObjectiveOracle& f, const DistanceGenerator& h, const MethodConfig& cfg,
              const Vector& x0) {
  cfg.validate();
  if (h.uc_order != 2) throw ConfigError("accelerated mirror descent needs a strongly convex h");
  const double sigma = h.uc_constant;
  Trace tr;
  tr.meta.id = "amd";
  tr.meta.delta = std::sqrt(cfg.eps);
  tr.meta.scalars = {{"p", 2.0}, {"eps", cfg.eps}, {"sigma", sigma}};
  note_provenance(tr, f);
  double Dh = 0.0;
  if (f.minimizer) {
    Dh = bregman_divergence(h, *f.minimizer, x0);
    tr.meta.scalars["Dh"] = Dh;
  }

  Vector x = x0;
  Vector dual = h.grad_h(x0);
  for (long k = 0; k < cfg.max_iters; ++k) {
    Vector g = f.gradient(x);
    Vector y = x - cfg.eps * g;
    dual -= cfg.eps * sigma * (0.5 * (k + 1)) * g;
    Vector z = h.grad_h_inverse(dual);
    if (!h.in_domain(z)) throw DomainError("mirror iterate left the domain of h");

    TraceRecord r;
    r.index = double(k);
    r.f_gap = record_gap(f, y);
    r.grad_norm = f.gradient(y).norm();
    if (f.minimizer) {
      double bound = 4.0 * Dh / (cfg.eps * sigma * (k + 1.0) * (k + 2.0));
      r.flags["bound"] = r.f_gap <= bound * (1.0 + 1e-9) + 1e-12;
    }
    tr.records.push_back(std::move(r));
    tr.points.push_back(y);

    x = (2.0 * z + (k + 1.0) * y) / (k + 3.0);
    if (cfg.stop_gap > 0 && tr.records.back().f_gap <= cfg.stop_gap) break;
  }
  return tr;
}

Trace acn_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0) {
  cfg.validate();
  Trace tr;
  tr.meta.id = "acn";
  tr.meta.delta = std::pow(cfg.eps, 1.0 / 3.0);
  tr.meta.scalars = {{"p", 3.0}, {"eps", cfg.eps}};
  note_provenance(tr, f);
  double R0 = 0.0;
  if (f.minimizer) {
    R0 = (x0 - *f.minimizer).norm();
    tr.meta.scalars["R0"] = R0;
  }

  Vector x = x0;
  Vector G = Vector::Zero(x0.size());
  for (long k = 0; k < cfg.max_iters; ++k) {
    Vector y = x + solve_surrogate(f, {3, 1.0 / cfg.eps, x, cfg.subproblem_tol});
    G += 0.5 * k * (k + 1.0) * f.gradient(y);
    Vector z = x0;
    if (G.norm() > 0) z -= std::sqrt(cfg.eps / (6.0 * G.norm())) * G;

    TraceRecord r;
    r.index = double(k);
    r.f_gap = record_gap(f, y);
    r.grad_norm = f.gradient(y).norm();
    if (f.minimizer && k >= 1) {
      double bound = 14.0 * R0 * R0 * R0 / (cfg.eps * k * (k + 1.0) * (k + 2.0));
      r.flags["bound"] = r.f_gap <= bound * (1.0 + 1e-9) + 1e-12;
    }
    tr.records.push_back(std::move(r));
    tr.points.push_back(y);

    x = (3.0 * z + double(k) * y) / (k + 3.0);
    if (cfg.stop_gap > 0 && tr.records.back().f_gap <= cfg.stop_gap) break;
  }
  return tr;
}

Vector mirror_descent_step(const ObjectiveOracle& f, const DistanceGenerator& h, const Vector& x,
                           double eps) {
  if (!h.in_domain(x)) throw DomainError("mirror descent step from a point outside the domain");
  Vector out = h.grad_h_inverse(h.grad_h(x) - eps * f.gradient(x));
  if (!h.in_domain(out)) throw DomainError("mirror descent step left the domain of h");
  return out;
}

Vector natural_gradient_step(const ObjectiveOracle& f, const DistanceGenerator& h, const Vector& x,
                             double eps) {
  return x - eps * h.hess_h_solve(x, f.gradient(x));
}

double resolve_sigma_f(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0,
                       std::string* provenance) {
  if (cfg.sigma_f > 0) {
    if (provenance) *provenance = "config";
    return cfg.sigma_f;
  }
  if (f.uniform_convexity && f.uniform_convexity->order == cfg.p) {
    if (provenance) *provenance = "oracle";
    return f.uniform_convexity->constant;
  }
  // Sampled lower bound of D_f(y,x) / ((1/p)||y-x||^p) over random pairs.
  std::mt19937_64 rng(0xA5A5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double radius = 1.0 + x0.norm();
  double sigma = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 400; ++i) {
    Vector x(x0.size()), y(x0.size());
    for (int j = 0; j < x0.size(); ++j) {
      x(j) = x0(j) + radius * gauss(rng);
      y(j) = x0(j) + radius * gauss(rng);
    }
    double df = f.value(y) - f.value(x) - f.gradient(x).dot(y - x);
    double denom = std::pow((y - x).norm(), cfg.p) / cfg.p;
    if (denom > 0) sigma = std::min(sigma, df / denom);
  }
  if (!(sigma > 0))
    throw ConfigError("uniform convexity constant unavailable and not estimable from samples");
  if (provenance) *provenance = "sampled(400 pairs)";
  return 0.9 * sigma;
}

Trace gp_uniformly_convex_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0) {
  cfg.validate();
  std::string prov;
  const double sigma_f = resolve_sigma_f(f, cfg, x0, &prov);
  const double kappa = cfg.eps * sigma_f;
  const double contraction = 1.0 + 0.25 * std::pow(kappa, 1.0 / (cfg.p - 1));

  Trace tr;
  tr.meta.id = "gp-uc";
  tr.meta.scalars = {
      {"p", double(cfg.p)}, {"eps", cfg.eps}, {"sigma_f", sigma_f}, {"kappa", kappa}};
  tr.meta.notes["sigma_provenance"] = prov;
  note_provenance(tr, f);
  double R0 = 0.0;
  if (f.minimizer) {
    R0 = (x0 - *f.minimizer).norm();
    tr.meta.scalars["R0"] = R0;
  }

  Vector x = x0;
  auto push = [&](long k) {
    TraceRecord r;
    r.index = double(k);
    r.f_gap = record_gap(f, x);
    r.grad_norm = f.gradient(x).norm();
    tr.records.push_back(std::move(r));
    tr.points.push_back(x);
  };
  push(0);
  for (long k = 0; k < cfg.max_iters; ++k) {
    Vector v = solve_surrogate(f, {cfg.p, 2.0 / cfg.eps, x, cfg.subproblem_tol});
    x += v;
    push(k + 1);
    if (f.minimizer) {
      double prev = tr.records[tr.records.size() - 2].f_gap;
      double cur = tr.records.back().f_gap;
      double slack = 1e-12 * std::max(1.0, prev);
      if (prev > 1e-13 * std::max(1.0, std::abs(*f.min_value)))
        tr.records.back().flags["contraction"] = cur <= prev / contraction + slack;
      double bound = 3.0 * std::pow(R0, cfg.p) / (cfg.eps * cfg.p * std::pow(contraction, double(k)));
      tr.records.back().flags["bound"] = cur <= bound * (1.0 + 1e-9) + 1e-12;
    }
    if (cfg.stop_gap > 0 && tr.records.back().f_gap <= cfg.stop_gap) break;
  }
  return tr;
}

Trace restart_run(const ObjectiveOracle& f, const MethodConfig& cfg, const Vector& x0) {
  cfg.validate();
  std::string prov;
  const double sigma_f = resolve_sigma_f(f, cfg, x0, &prov);
  const double kappa = cfg.eps * sigma_f;
  const long m = static_cast<long>(std::ceil(24.0 * cfg.p / std::pow(kappa, 1.0 / cfg.p)));
  if (!f.minimizer) throw ConfigError("restart contraction checks need a recorded minimizer");

  Trace tr;
  tr.meta.id = "restart";
  tr.meta.scalars = {{"p", double(cfg.p)}, {"eps", cfg.eps},     {"sigma_f", sigma_f},
                     {"kappa", kappa},     {"m", double(m)},     {"C", cfg.resolved_C()}};
  tr.meta.notes["sigma_provenance"] = prov;
  note_provenance(tr, f);
  tr.meta.scalars["R0"] = (x0 - *f.minimizer).norm();

  const Vector& xstar = *f.minimizer;
  Vector x = x0;
  long global_k = 0;
  long cycles = 0;
  {
    TraceRecord r;
    r.index = 0.0;
    r.f_gap = record_gap(f, x);
    r.grad_norm = f.gradient(x).norm();
    tr.records.push_back(std::move(r));
  }

  MethodConfig inner = cfg;
  inner.max_iters = m;
  while (global_k < cfg.max_iters) {
    double dist_old = (x - xstar).norm();
    DistanceGenerator h_cyc = ppower_generator(cfg.p, x);
    Vector y_final = x;
    Trace inner_tr = agp_run_impl(f, h_cyc, inner, x, &y_final);
    for (const auto& row : inner_tr.records) {
      TraceRecord r = row;
      r.index = double(global_k) + row.index + 1.0;
      tr.records.push_back(std::move(r));
    }
    global_k += static_cast<long>(inner_tr.records.size());
    x = y_final;
    ++cycles;
    bool full_cycle = inner_tr.records.size() == static_cast<std::size_t>(m);
    if (full_cycle) {
      double dist_new = (x - xstar).norm();
      tr.records.back().flags["cycle"] =
          std::pow(dist_new, cfg.p) <= (1.05 / std::exp(1.0)) * std::pow(dist_old, cfg.p);
    }
    if (cfg.stop_gap > 0 && record_gap(f, x) <= cfg.stop_gap) break;
    if (!full_cycle) break;
  }

  // One larger-regularization Taylor step converts distance into function gap.
  double dist = (x - xstar).norm();
  Vector y_pol = x + solve_surrogate(f, {cfg.p, 2.0 / cfg.eps, x, cfg.subproblem_tol});
  TraceRecord r;
  r.index = double(global_k + 1);
  r.f_gap = record_gap(f, y_pol);
  r.grad_norm = f.gradient(y_pol).norm();
  double polish_bound = 3.0 * std::pow(dist, cfg.p) / (cfg.eps * cfg.p);
  r.flags["polish"] = r.f_gap <= polish_bound * (1.0 + 1e-9) + 1e-12;
  tr.records.push_back(std::move(r));
  tr.meta.scalars["cycles"] = double(cycles);
  return tr;
}

}  // namespace accel

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>

#include "accel/discrete.hpp"
#include "accel/divergence.hpp"
#include "accel/harness.hpp"
#include "accel/problems.hpp"
#include "helpers.hpp"

using namespace accel;
using testutil::random_vector;

namespace {

ObjectiveOracle linear_objective(const Vector& c) {
  ObjectiveOracle f;
  f.dim = static_cast<int>(c.size());
  f.label = "linear";
  f.value = [c](const Vector& x) { return c.dot(x); };
  f.gradient = [c](const Vector&) { return c; };
  f.hessian_vec = [c](const Vector&, const Vector&) { return Vector(Vector::Zero(c.size())); };
  return f;
}

}  // namespace

TEST_CASE("rising factorial") {
  CHECK(rising_factorial(3, 2) == 12);
  for (int m = 1; m <= 4; ++m) CHECK(rising_factorial(0, m) == 0);
  long long sum = 0;
  for (int i = 0; i <= 3; ++i) sum += rising_factorial(i, 1);
  CHECK(sum == 6);
  CHECK(sum == rising_factorial(3, 2) / 2);
  // the partial-sum identity at higher order: sum i^(p-1) = k^(p)/p
  for (int p : {2, 3, 4}) {
    long long s = 0;
    for (int i = 0; i <= 20; ++i) s += rising_factorial(i, p - 1);
    CHECK(s == rising_factorial(20, p) / p);
  }
  CHECK_THROWS_AS(rising_factorial(1 << 20, 4), std::overflow_error);
  CHECK_THROWS_AS(rising_factorial(-1, 2), ConfigError);
}

TEST_CASE("geometric contraction of order-2 descent on the isotropic quadratic") {
  ProblemSpec spec{"quadratic", 2, 0, {{"identity", true}, {"x0", {1.0, 1.0}}}};
  auto [f, x0] = make_problem(spec);
  MethodConfig cfg;
  cfg.p = 2;
  cfg.eps = 0.1;
  cfg.max_iters = 20;
  Trace tr = gp_run(f, cfg, x0);
  for (int k = 0; k <= 20; ++k) {
    double expect = std::pow(0.9, k);
    CHECK(tr.points[k](0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(tr.points[k](1) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(tr.clean());
}

TEST_CASE("descent runs keep their per-step residual inequality") {
  SUBCASE("order 2 on an anisotropic quadratic") {
    auto [f, x0] = make_problem({"quadratic", 4, 19, {{"lam_max", 40.0}}});
    MethodConfig cfg;
    cfg.p = 2;
    cfg.eps = 1.0 / *f.smoothness_constant(1);
    cfg.max_iters = 300;
    Trace tr = gp_run(f, cfg, x0);
    CHECK(tr.clean());
    BoundReport rep = compare_bound(tr, "gp");
    CHECK(rep.max_ratio <= 1.02);
  }
  SUBCASE("order 3 on logsumexp, with tail slope") {
    auto [f, x0] = make_problem({"logsumexp", 3, 17, {{"terms", 5}}});
    MethodConfig cfg;
    cfg.p = 3;
    cfg.eps = 2.0 / *f.smoothness_constant(2);
    cfg.max_iters = 400;
    Trace tr = gp_run(f, cfg, x0);
    CHECK(tr.clean());
    BoundReport rep = compare_bound(tr, "gp");
    CHECK(rep.max_ratio <= 1.02);
    RateFit fit = fit_rate(tr, 0.5);
    CHECK(fit.slope <= -1.8);
  }
}

TEST_CASE("accelerated run: coupling at k=0 and the euclidean dual collapse") {
  ProblemSpec spec{"quadratic", 2, 7, {}};
  auto [f, x0] = make_problem(spec);
  MethodConfig cfg;
  cfg.p = 2;
  cfg.eps = 1.0 / *f.smoothness_constant(1);
  cfg.max_iters = 40;
  DistanceGenerator h = euclidean_generator(2);
  Trace tr = agp_run(f, h, cfg, x0);
  REQUIRE(tr.clean());

  // x_1 = z_0 = x_0 because the first dual weight vanishes
  CHECK((tr.points[1] - x0).norm() <= 1e-14);

  // replay the recursion with the explicit euclidean z-step
  double C = cfg.resolved_C();
  Vector x = x0, z = x0;
  for (long k = 0; k < cfg.max_iters; ++k) {
    Vector y = x - 0.5 * cfg.eps * f.gradient(x);
    z -= cfg.eps * C * 2.0 * double(k) * f.gradient(y);
    CHECK((tr.points[k] - x).norm() <= 1e-10 * (1 + x.norm()));
    x = (2.0 * z + double(k) * y) / double(k + 2);
  }
}

TEST_CASE("accelerated rate bound and sandwich flags") {
  for (int p : {2, 3}) {
    auto [f, x0] = make_problem({"quadratic", 3, 29, {}});
    MethodConfig cfg;
    cfg.p = p;
    cfg.eps = p == 2 ? 1.0 / *f.smoothness_constant(1) : 1.0;
    cfg.max_iters = 200;
    DistanceGenerator h = ppower_generator(p, x0);
    Trace tr = agp_run(f, h, cfg, x0);
    CHECK(tr.clean());
    BoundReport rep = compare_bound(tr, "agp");
    CHECK(rep.max_ratio <= 1.02);
  }
}

TEST_CASE("estimate function stays below its convexity envelope at probes") {
  auto [f, x0] = make_problem({"quadratic", 2, 3, {}});
  DistanceGenerator h = euclidean_generator(2);
  double eps = 1.0 / *f.smoothness_constant(1);
  EstimateFunction psi(h, x0, eps);
  auto g = testutil::rng(77);
  Vector y = x0;
  double C = std::pow(8.0, -2.0);
  for (int k = 0; k <= 12; ++k) {
    y = y - 0.5 * eps * f.gradient(y);
    psi.add(C * 2 * rising_factorial_d(k, 1), y, f.value(y), f.gradient(y));
    for (int probe = 0; probe < 8; ++probe) {
      Vector x = x0 + random_vector(g, 2, 1.5);
      double envelope = psi.total_weight() * f.value(x) + bregman_divergence(h, x, x0) / eps;
      CHECK(psi.value_at(x) <= envelope + 1e-10 * std::max(1.0, std::abs(envelope)));
    }
  }
}

TEST_CASE("momentum-weight recursion") {
  double tau0 = agd_tau_next(1.0);
  CHECK(tau0 == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-14));
  double tau = 1.0;
  for (int k = 0; k <= 200; ++k) {
    double next = agd_tau_next(tau);
    CHECK(std::abs(next * next / (1.0 - next) - tau * tau) <= 1e-12);
    tau = next;
  }
  // tau_k = 2/k + o(1/k): the deviation decays like 1/k^2 and is inside
  // 3e-4 once k is large enough (about k = 183 for this recursion)
  CHECK(std::abs(tau - 2.0 / 200.0) <= 3e-4);
}

TEST_CASE("accelerated gradient descent rate") {
  auto [f, x0] = make_problem({"quadratic", 4, 31, {}});
  MethodConfig cfg;
  cfg.eps = 1.0 / *f.smoothness_constant(1);
  cfg.max_iters = 500;
  Trace tr = agd_run(f, cfg, x0);
  CHECK(tr.clean());
  BoundReport rep = compare_bound(tr, "agd");
  CHECK(rep.max_ratio <= 1.02);
  RateFit fit = fit_rate(tr, 0.5);
  CHECK(fit.slope <= -1.8);
}

TEST_CASE("accelerated mirror descent") {
  auto [f, x0] = make_problem({"quadratic", 3, 37, {}});
  MethodConfig cfg;
  cfg.eps = 1.0 / *f.smoothness_constant(1);
  cfg.max_iters = 1000;

  SUBCASE("euclidean collapse to the explicit weighted step and k=0 coupling") {
    DistanceGenerator h = euclidean_generator(3);
    Trace tr = amd_run(f, h, cfg, x0);
    CHECK(tr.clean());
    Vector x = x0, z = x0;
    for (long k = 0; k < 5; ++k) {
      Vector g = f.gradient(x);
      Vector y = x - cfg.eps * g;
      z -= cfg.eps * ((k + 1.0) / 2.0) * g;
      CHECK((tr.points[k] - y).norm() <= 1e-12 * (1 + y.norm()));
      if (k == 0) {
        Vector x1 = (2.0 / 3.0) * z + (1.0 / 3.0) * y;
        x = x1;
      } else {
        x = (2.0 * z + (k + 1.0) * y) / (k + 3.0);
      }
    }
  }
  SUBCASE("rate bound over a thousand steps") {
    DistanceGenerator h = euclidean_generator(3);
    Trace tr = amd_run(f, h, cfg, x0);
    BoundReport rep = compare_bound(tr, "amd");
    CHECK(rep.checked >= 1000);
    CHECK(rep.max_ratio <= 1.02);
  }
}

TEST_CASE("accelerated cubic-regularized steps") {
  auto [f, x0] = make_problem({"quadratic", 2, 41, {}});
  MethodConfig cfg;
  cfg.p = 3;
  cfg.eps = 1.0;
  cfg.max_iters = 1000;
  Trace tr = acn_run(f, cfg, x0);
  CHECK(tr.clean());
  CHECK((tr.points[0] - (x0 + solve_surrogate(f, {3, 1.0, x0, 1e-10}))).norm() <= 1e-12);
  BoundReport rep = compare_bound(tr, "acn");
  CHECK(rep.max_ratio <= 1.02);

  // the y-step of the first iteration minimizes the cubic model: scan a 2D grid
  SubproblemSpec sp{3, 1.0 / cfg.eps, x0, 1e-12};
  Vector v = tr.points[0] - x0;
  double best = surrogate_value(f, sp, v);
  for (double dx = -0.05; dx <= 0.05; dx += 0.01)
    for (double dy = -0.05; dy <= 0.05; dy += 0.01) {
      Vector w = v;
      w(0) += dx;
      w(1) += dy;
      CHECK(surrogate_value(f, sp, w) >= best - 1e-12);
    }
}

TEST_CASE("mirror and natural gradient steps") {
  SUBCASE("euclidean is the plain gradient step; zero step size is the identity") {
    auto [f, x0] = make_problem({"quadratic", 3, 43, {}});
    DistanceGenerator h = euclidean_generator(3);
    Vector md = mirror_descent_step(f, h, x0, 0.05);
    CHECK((md - (x0 - 0.05 * f.gradient(x0))).norm() <= 1e-14);
    CHECK((mirror_descent_step(f, h, x0, 0.0) - x0).norm() == 0.0);
    CHECK((natural_gradient_step(f, h, x0, 0.05) - md).norm() <= 1e-14);
  }
  SUBCASE("entropy mirror step on a linear objective is multiplicative") {
    Vector c(2);
    c << 0.3, -0.7;
    ObjectiveOracle f = linear_objective(c);
    DistanceGenerator h = make_generator({"entropy", 2, {}});
    Vector x(2);
    x << 0.4, 1.2;
    double eps = 0.25;
    Vector next = mirror_descent_step(f, h, x, eps);
    for (int i = 0; i < 2; ++i)
      CHECK(next(i) == doctest::Approx(x(i) * std::exp(-eps * c(i))).epsilon(1e-12));
  }
  SUBCASE("natural step with h = f jumps to the optimum at unit step") {
    auto [f, x0] = make_problem({"quadratic", 3, 47, {}});
    DistanceGenerator h = euclidean_generator(3);
    h.hess_h_solve = [&](const Vector& x, const Vector& w) {
      return Vector(f.dense_hessian(x).ldlt().solve(w));
    };
    Vector next = natural_gradient_step(f, h, x0, 1.0);
    CHECK((next - *f.minimizer).norm() <= 1e-10);
  }
  SUBCASE("mirror and natural steps agree to second order in the step size") {
    auto [fq, x0q] = make_problem({"quadratic", 2, 53, {{"xstar", {1.0, 1.5}}}});
    DistanceGenerator h = make_generator({"entropy", 2, {}});
    Vector x(2);
    x << 0.8, 1.1;
    auto diff = [&](double eps) {
      return (mirror_descent_step(fq, h, x, eps) - natural_gradient_step(fq, h, x, eps)).norm();
    };
    double d1 = diff(0.02), d2 = diff(0.01);
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.15));
  }
  SUBCASE("domain exits raise") {
    Vector c(2);
    c << -50.0, -50.0;  // pushes the multiplicative update out of range
    ObjectiveOracle f = linear_objective(c);
    DistanceGenerator h = make_generator({"entropy", 2, {}});
    Vector bad(2);
    bad << -1.0, 0.5;
    CHECK_THROWS_AS(mirror_descent_step(f, h, bad, 0.1), DomainError);
  }
}

TEST_CASE("uniformly convex descent with doubled regularization") {
  ProblemSpec spec{"quadratic", 3, 59, {{"lam_min", 0.5}, {"lam_max", 5.0}}};
  auto [f, x0] = make_problem(spec);
  MethodConfig cfg;
  cfg.p = 2;
  cfg.eps = 1.0 / *f.smoothness_constant(1);
  cfg.max_iters = 300;
  Trace tr = gp_uniformly_convex_run(f, cfg, x0);
  CHECK(tr.clean());
  CHECK(tr.scalar("kappa") == doctest::Approx(0.1).epsilon(1e-9));
  BoundReport rep = compare_bound(tr, "gp-uc");
  CHECK(rep.max_ratio <= 1.02);

  // constant at the optimum
  Trace still = gp_uniformly_convex_run(f, cfg, *f.minimizer);
  for (const auto& pt : still.points) CHECK((pt - *f.minimizer).norm() <= 1e-12);
}

TEST_CASE("restart cycle length and contraction") {
  ProblemSpec spec{"quadratic", 4, 61, {{"lam_min", 0.01}, {"lam_max", 1.0}}};
  auto [f, x0] = make_problem(spec);
  MethodConfig cfg;
  cfg.p = 2;
  cfg.eps = 1.0;  // kappa = eps * lam_min = 0.01
  cfg.max_iters = 3000;
  Trace tr = restart_run(f, cfg, x0);
  CHECK(tr.scalar("m") == doctest::Approx(480.0));
  CHECK(tr.clean());
  int cycle_flags = 0;
  for (const auto& r : tr.records)
    if (r.flags.count("cycle")) {
      ++cycle_flags;
      CHECK(r.flags.at("cycle"));
    }
  CHECK(cycle_flags >= 6);
  BoundReport rep = compare_bound(tr, "restart");
  CHECK(rep.max_ratio <= 1.02);
}

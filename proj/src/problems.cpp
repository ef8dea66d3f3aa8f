#include "accel/problems.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace accel {

using nlohmann::json;

void to_json(json& j, const ProblemSpec& s) {
  j = json{{"kind", s.kind}, {"dim", s.dim}, {"seed", s.seed}, {"params", s.params}};
}

void from_json(const json& j, ProblemSpec& s) {
  s.kind = j.at("kind").get<std::string>();
  s.dim = j.value("dim", 2);
  s.seed = j.value("seed", std::uint64_t{0});
  s.params = j.value("params", json::object());
}

void to_json(json& j, const GeneratorSpec& s) {
  j = json{{"kind", s.kind}, {"dim", s.dim}, {"params", s.params}};
}

void from_json(const json& j, GeneratorSpec& s) {
  s.kind = j.at("kind").get<std::string>();
  s.dim = j.value("dim", 2);
  s.params = j.value("params", json::object());
}

namespace {

Vector gaussian_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
  return v;
}

Vector json_vector(const json& j) {
  Vector v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

// Random rotation from the QR factorization of a Gaussian matrix.
Matrix random_orthogonal(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix M(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) M(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(M);
  Matrix Q = qr.householderQ();
  return Q;
}

// Symmetric PD matrix with log-spaced eigenvalues in [lam_min, lam_max].
Matrix seeded_spd(std::mt19937_64& rng, int dim, double lam_min, double lam_max) {
  if (!(lam_min > 0) || lam_max < lam_min)
    throw ConfigError("quadratic needs 0 < lam_min <= lam_max");
  Matrix Q = random_orthogonal(rng, dim);
  Vector lam(dim);
  for (int i = 0; i < dim; ++i) {
    double f = dim == 1 ? 0.0 : static_cast<double>(i) / (dim - 1);
    lam(i) = std::exp(std::log(lam_min) + f * (std::log(lam_max) - std::log(lam_min)));
  }
  Matrix A = Q * lam.asDiagonal() * Q.transpose();
  return 0.5 * (A + A.transpose());
}

Vector pick_x0(const json& params, std::mt19937_64& rng, const Vector& xstar) {
  if (params.contains("x0")) return json_vector(params.at("x0"));
  double dist = params.value("x0_distance", 1.0);
  Vector dir = gaussian_vector(rng, static_cast<int>(xstar.size()));
  if (dir.norm() < 1e-12) dir.setOnes();
  return xstar + dist * dir / dir.norm();
}

// Damped Newton to a stationary point; used to populate f* for problems
// without an analytic minimizer. Gradient norm target 1e-13.
Vector presolve_minimizer(const ObjectiveOracle& f, const Vector& start, double grad_tol = 1e-13) {
  Vector x = start;
  double mu = 1e-12;
  for (int it = 0; it < 400; ++it) {
    Vector g = f.gradient(x);
    double gn = g.norm();
    if (gn <= grad_tol) return x;
    Matrix H = f.dense_hessian(x);
    for (int tries = 0; tries < 60; ++tries) {
      Matrix Hd = H + mu * Matrix::Identity(x.size(), x.size());
      Vector d = Hd.ldlt().solve(-g);
      if (f.gradient(x + d).norm() < gn || d.norm() < 1e-15) {
        x += d;
        mu = std::max(mu * 0.25, 1e-14);
        break;
      }
      mu *= 10.0;
      if (tries == 59) throw ConfigError("pre-solve stalled; cannot certify the optimum");
    }
  }
  if (f.gradient(x).norm() <= grad_tol) return x;
  throw ConfigError("pre-solve did not reach the gradient tolerance");
}

std::pair<ObjectiveOracle, Vector> make_quadratic(const ProblemSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const int d = spec.dim;
  double lam_min = spec.params.value("lam_min", 1.0);
  double lam_max = spec.params.value("lam_max", 10.0);
  Matrix A = d == 1 ? Matrix::Constant(1, 1, lam_min) : seeded_spd(rng, d, lam_min, lam_max);
  if (spec.params.value("identity", false)) A = Matrix::Identity(d, d);

  Vector xstar = Vector::Zero(d);
  if (spec.params.contains("xstar")) xstar = json_vector(spec.params.at("xstar"));
  Vector b = A * xstar;

  ObjectiveOracle f;
  f.dim = d;
  f.label = "quadratic";
  f.value = [A, b](const Vector& x) { return 0.5 * x.dot(A * x) - b.dot(x); };
  f.gradient = [A, b](const Vector& x) { return Vector(A * x - b); };
  f.hessian_vec = [A](const Vector&, const Vector& v) { return Vector(A * v); };
  f.third_directional = [d](const Vector&, const Vector&) { return Vector(Vector::Zero(d)); };
  f.minimizer = xstar;
  f.min_value = 0.5 * xstar.dot(A * xstar) - b.dot(xstar);
  f.fstar_provenance = "analytic";
  f.smoothness = {{1, lam_max}, {2, 0.0}};
  f.uniform_convexity = UniformConvexity{2, lam_min};

  Vector x0 = pick_x0(spec.params, rng, xstar);
  return {std::move(f), std::move(x0)};
}

std::pair<ObjectiveOracle, Vector> make_logsumexp(const ProblemSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const int d = spec.dim;
  const int m = spec.params.value("terms", d + 3);
  const double scale = spec.params.value("scale", 1.0);
  if (m < d + 1) throw ConfigError("logsumexp needs at least dim+1 planes");

  Matrix A(m, d);
  for (int i = 0; i < m; ++i) A.row(i) = scale * gaussian_vector(rng, d).transpose();
  A.rowwise() -= A.colwise().mean();  // keeps 0 in the hull of the slopes
  Vector b = 0.5 * gaussian_vector(rng, m);

  auto softmax = [A, b](const Vector& x) {
    Vector u = A * x - b;
    double umax = u.maxCoeff();
    Vector e = (u.array() - umax).exp();
    return Vector(e / e.sum());
  };

  ObjectiveOracle f;
  f.dim = d;
  f.label = "logsumexp";
  f.value = [A, b](const Vector& x) {
    Vector u = A * x - b;
    double umax = u.maxCoeff();
    return umax + std::log((u.array() - umax).exp().sum());
  };
  f.gradient = [A, softmax](const Vector& x) { return Vector(A.transpose() * softmax(x)); };
  f.hessian_vec = [A, softmax](const Vector& x, const Vector& v) {
    Vector s = softmax(x);
    Vector w = A * v;
    Vector t = s.cwiseProduct(w) - s * s.dot(w);
    return Vector(A.transpose() * t);
  };
  f.third_directional = [A, softmax](const Vector& x, const Vector& v) {
    Vector sig = softmax(x);
    Vector w = A * v;
    Vector s = sig.cwiseProduct(w) - sig * sig.dot(w);
    Vector t = s.cwiseProduct(w) - s * sig.dot(w) - sig * s.dot(w);
    return Vector(A.transpose() * t);
  };

  // grad^2 f = A^T (diag(s) - s s^T) A with diag(s) - s s^T <= I.
  double op = A.jacobiSvd().singularValues()(0);
  double row_max = A.rowwise().norm().maxCoeff();
  f.smoothness = {{1, op * op}, {2, 5.0 * op * row_max * row_max}};

  Vector x0 = spec.params.contains("x0") ? json_vector(spec.params.at("x0"))
                                         : Vector(gaussian_vector(rng, d));
  Vector xstar = presolve_minimizer(f, Vector::Zero(d));
  f.minimizer = xstar;
  f.min_value = f.value(xstar);
  f.fstar_provenance = "presolve: damped Newton to gradient norm 1e-13";
  return {std::move(f), std::move(x0)};
}

// (1/p)||x-c||^p pieces shared by the problem and the generator.
Vector ppower_grad(double p, const Vector& r) {
  double n = r.norm();
  if (n == 0.0) return Vector::Zero(r.size());
  return std::pow(n, p - 2.0) * r;
}

Vector ppower_hess_vec(double p, const Vector& r, const Vector& v) {
  double n = r.norm();
  if (n == 0.0) {
    if (p == 2.0) return v;
    return Vector::Zero(r.size());
  }
  return std::pow(n, p - 2.0) * v + (p - 2.0) * std::pow(n, p - 4.0) * r.dot(v) * r;
}

Vector ppower_third(double p, const Vector& r, const Vector& v) {
  if (p == 2.0) return Vector::Zero(r.size());
  double n = r.norm();
  if (n == 0.0) {
    if (p >= 4.0) return Vector::Zero(r.size());
    throw DomainError("third derivative of the p-th power is singular at its center");
  }
  Vector out = (p - 2.0) * std::pow(n, p - 4.0) * (2.0 * r.dot(v) * v + v.squaredNorm() * r);
  out += (p - 2.0) * (p - 4.0) * std::pow(n, p - 6.0) * r.dot(v) * r.dot(v) * r;
  return out;
}

std::pair<ObjectiveOracle, Vector> make_ppower(const ProblemSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const int d = spec.dim;
  const int p = spec.params.value("p", 3);
  if (p < 2) throw ConfigError("ppower needs p >= 2");
  Vector c = spec.params.contains("center") ? json_vector(spec.params.at("center"))
                                            : Vector(Vector::Zero(d));

  ObjectiveOracle f;
  f.dim = d;
  f.label = "ppower";
  double pd = p;
  f.value = [c, pd](const Vector& x) { return std::pow((x - c).norm(), pd) / pd; };
  f.gradient = [c, pd](const Vector& x) { return ppower_grad(pd, x - c); };
  f.hessian_vec = [c, pd](const Vector& x, const Vector& v) { return ppower_hess_vec(pd, x - c, v); };
  f.third_directional = [c, pd](const Vector& x, const Vector& v) { return ppower_third(pd, x - c, v); };
  f.minimizer = c;
  f.min_value = 0.0;
  f.fstar_provenance = "analytic";
  f.uniform_convexity = UniformConvexity{p, std::pow(0.5, p - 2)};
  if (p == 2) f.smoothness = {{1, 1.0}};
  if (p == 3) f.smoothness = {{2, 2.0}};
  if (p == 4) f.smoothness = {{3, 6.0}};

  Vector x0 = pick_x0(spec.params, rng, c);
  return {std::move(f), std::move(x0)};
}

std::pair<ObjectiveOracle, Vector> make_ppower_plus_quadratic(const ProblemSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const int d = spec.dim;
  const int p = spec.params.value("p", 3);
  if (p < 2) throw ConfigError("ppower-plus-quadratic needs p >= 2");
  Vector c = spec.params.contains("center") ? json_vector(spec.params.at("center"))
                                            : Vector(Vector::Zero(d));
  double lam_min = spec.params.value("lam_min", 0.05);
  double lam_max = spec.params.value("lam_max", 0.5);
  Matrix A = seeded_spd(rng, d, lam_min, lam_max);

  ObjectiveOracle f;
  f.dim = d;
  f.label = "ppower-plus-quadratic";
  double pd = p;
  f.value = [c, pd, A](const Vector& x) {
    return std::pow((x - c).norm(), pd) / pd + 0.5 * x.dot(A * x);
  };
  f.gradient = [c, pd, A](const Vector& x) { return Vector(ppower_grad(pd, x - c) + A * x); };
  f.hessian_vec = [c, pd, A](const Vector& x, const Vector& v) {
    return Vector(ppower_hess_vec(pd, x - c, v) + A * v);
  };
  f.third_directional = [c, pd](const Vector& x, const Vector& v) { return ppower_third(pd, x - c, v); };
  f.uniform_convexity = UniformConvexity{p, std::pow(0.5, p - 2)};
  if (p == 3) f.smoothness = {{2, 2.0}};

  Vector xstar = presolve_minimizer(f, c);
  f.minimizer = xstar;
  f.min_value = f.value(xstar);
  f.fstar_provenance = "presolve: damped Newton to gradient norm 1e-13";

  Vector x0 = pick_x0(spec.params, rng, xstar);
  return {std::move(f), std::move(x0)};
}

}  // namespace

std::pair<ObjectiveOracle, Vector> make_problem(const ProblemSpec& spec_in) {
  ProblemSpec spec = spec_in;
  if (spec.params.is_null()) spec.params = json::object();
  if (spec.dim < 1) throw ConfigError("problem dimension must be positive");
  if (spec.kind == "quadratic") return make_quadratic(spec);
  if (spec.kind == "logsumexp") return make_logsumexp(spec);
  if (spec.kind == "ppower") return make_ppower(spec);
  if (spec.kind == "ppower-plus-quadratic") return make_ppower_plus_quadratic(spec);
  throw ConfigError("unknown problem kind: " + spec.kind);
}

DistanceGenerator euclidean_generator(int dim) {
  DistanceGenerator g;
  g.dim = dim;
  g.label = "euclidean";
  g.h = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  g.grad_h = [](const Vector& x) { return x; };
  g.hess_h_vec = [](const Vector&, const Vector& v) { return v; };
  g.hess_h_solve = [](const Vector&, const Vector& w) { return w; };
  g.grad_h_inverse = [](const Vector& w) { return w; };
  g.third_h_directional = [dim](const Vector&, const Vector&) { return Vector(Vector::Zero(dim)); };
  g.mirror_jacobian = [dim](const Vector&) { return Matrix(Matrix::Identity(dim, dim)); };
  g.uc_order = 2;
  g.uc_constant = 1.0;
  return g;
}

DistanceGenerator ppower_generator(int p, const Vector& x0) {
  if (p < 2) throw ConfigError("ppower generator needs p >= 2");
  DistanceGenerator g;
  const int dim = static_cast<int>(x0.size());
  g.dim = dim;
  g.label = "ppower" + std::to_string(p);
  double pd = p;
  g.h = [x0, pd](const Vector& x) { return std::pow((x - x0).norm(), pd) / pd; };
  g.grad_h = [x0, pd](const Vector& x) { return ppower_grad(pd, x - x0); };
  g.hess_h_vec = [x0, pd](const Vector& x, const Vector& v) { return ppower_hess_vec(pd, x - x0, v); };
  g.hess_h_solve = [x0, pd](const Vector& x, const Vector& w) {
    Vector r = x - x0;
    double n = r.norm();
    if (pd == 2.0) return w;
    if (n < 1e-300) throw LinearSolveError("p-power Hessian is singular at its center");
    // (a I + b r r^T)^-1 w with a = n^(p-2), b = (p-2) n^(p-4)
    double a = std::pow(n, pd - 2.0);
    double b = (pd - 2.0) * std::pow(n, pd - 4.0);
    Vector out = (w - (b * r.dot(w) / (a + b * n * n)) * r) / a;
    return out;
  };
  g.grad_h_inverse = [x0, pd](const Vector& w) {
    double n = w.norm();
    if (n == 0.0) return x0;
    return Vector(x0 + std::pow(n, (2.0 - pd) / (pd - 1.0)) * w);
  };
  g.third_h_directional = [x0, pd](const Vector& x, const Vector& v) {
    return ppower_third(pd, x - x0, v);
  };
  g.mirror_jacobian = [x0, pd, dim](const Vector& w) {
    double n = w.norm();
    double q = (2.0 - pd) / (pd - 1.0);
    if (n == 0.0) throw LinearSolveError("mirror map Jacobian singular at the dual origin");
    Matrix J = std::pow(n, q) * (Matrix::Identity(dim, dim) + q / (n * n) * w * w.transpose());
    return J;
  };
  g.uc_order = p;
  g.uc_constant = std::pow(0.5, p - 2);
  return g;
}

namespace {

DistanceGenerator entropy_generator(int dim) {
  DistanceGenerator g;
  g.dim = dim;
  g.label = "entropy";
  auto check = [](const Vector& x) {
    if ((x.array() <= 0.0).any())
      throw DomainError("negative-entropy generator needs strictly positive coordinates");
  };
  g.h = [check](const Vector& x) {
    check(x);
    return (x.array() * x.array().log()).sum();
  };
  g.grad_h = [check](const Vector& x) {
    check(x);
    return Vector(x.array().log() + 1.0);
  };
  g.hess_h_vec = [check](const Vector& x, const Vector& v) {
    check(x);
    return Vector(v.array() / x.array());
  };
  g.hess_h_solve = [check](const Vector& x, const Vector& w) {
    check(x);
    return Vector(w.array() * x.array());
  };
  g.grad_h_inverse = [](const Vector& w) { return Vector((w.array() - 1.0).exp()); };
  g.third_h_directional = [check](const Vector& x, const Vector& v) {
    check(x);
    return Vector(-(v.array() * v.array()) / (x.array() * x.array()));
  };
  g.mirror_jacobian = [](const Vector& w) {
    return Matrix(Vector((w.array() - 1.0).exp()).asDiagonal());
  };
  g.contains = [](const Vector& x) { return (x.array() > 0.0).all(); };
  // Strong convexity certificate for the sampling box (0, 2]^d.
  g.uc_order = 2;
  g.uc_constant = 0.5;
  return g;
}

}  // namespace

DistanceGenerator make_generator(const GeneratorSpec& spec_in) {
  GeneratorSpec spec = spec_in;
  if (spec.params.is_null()) spec.params = json::object();
  if (spec.dim < 1) throw ConfigError("generator dimension must be positive");
  if (spec.kind == "euclidean") return euclidean_generator(spec.dim);
  if (spec.kind == "entropy") return entropy_generator(spec.dim);
  if (spec.kind == "ppower") {
    int p = spec.params.value("p", 3);
    Vector x0 = spec.params.contains("x0") ? json_vector(spec.params.at("x0"))
                                           : Vector(Vector::Zero(spec.dim));
    return ppower_generator(p, x0);
  }
  throw ConfigError("unknown generator kind: " + spec.kind);
}

ObjectiveOracle with_counting(const ObjectiveOracle& f, std::shared_ptr<OracleCallCounts> counts) {
  ObjectiveOracle g = f;
  auto value = f.value;
  auto gradient = f.gradient;
  auto hess = f.hessian_vec;
  g.value = [value, counts](const Vector& x) {
    counts->value++;
    return value(x);
  };
  g.gradient = [gradient, counts](const Vector& x) {
    counts->gradient++;
    return gradient(x);
  };
  g.hessian_vec = [hess, counts](const Vector& x, const Vector& v) {
    counts->hessian_vec++;
    return hess(x, v);
  };
  if (f.third_directional) {
    auto third = f.third_directional;
    g.third_directional = [third, counts](const Vector& x, const Vector& v) {
      counts->third++;
      return third(x, v);
    };
  }
  return g;
}

}  // namespace accel

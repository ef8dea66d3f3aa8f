#pragma once

// Test-only numerical oracles: finite differences, directional derivatives,
// and grid searches. These stay independent of the library implementations
// they are used to check.

#include <cmath>
#include <functional>
#include <random>

#include "accel/oracle.hpp"

namespace testutil {

using accel::Vector;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Vector random_vector(std::mt19937_64& g, int dim, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = scale * gauss(g);
  return v;
}

inline Vector random_positive(std::mt19937_64& g, int dim, double lo, double hi) {
  std::uniform_real_distribution<double> uni(lo, hi);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = uni(g);
  return v;
}

// Central-difference gradient of a scalar field.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-6) {
  Vector g(x.size());
  Vector xx = x;
  for (int i = 0; i < x.size(); ++i) {
    double save = xx(i);
    xx(i) = save + h;
    double up = f(xx);
    xx(i) = save - h;
    double dn = f(xx);
    xx(i) = save;
    g(i) = (up - dn) / (2.0 * h);
  }
  return g;
}

// First and second directional derivatives of t -> f(x + t v) at t = 0,
// five-point stencils.
inline double fd_dir1(const std::function<double(const Vector&)>& f, const Vector& x,
                      const Vector& v, double h = 1e-4) {
  auto phi = [&](double t) { return f(x + t * v); };
  return (-phi(2 * h) + 8 * phi(h) - 8 * phi(-h) + phi(-2 * h)) / (12 * h);
}

inline double fd_dir2(const std::function<double(const Vector&)>& f, const Vector& x,
                      const Vector& v, double h = 1e-4) {
  auto phi = [&](double t) { return f(x + t * v); };
  return (-phi(2 * h) + 16 * phi(h) - 30 * phi(0) + 16 * phi(-h) - phi(-2 * h)) / (12 * h * h);
}

// Brute-force minimizer of a scalar function on [lo, hi]: coarse grid then
// golden-section refinement.
inline double grid_minimize(const std::function<double(double)>& f, double lo, double hi,
                            int grid = 20000) {
  double best_x = lo, best = f(lo);
  for (int i = 1; i <= grid; ++i) {
    double x = lo + (hi - lo) * i / grid;
    double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - (hi - lo) / grid);
  double b = std::min(hi, best_x + (hi - lo) / grid);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  for (int it = 0; it < 200; ++it) {
    if (f(c) < f(d))
      b = d;
    else
      a = c;
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  return 0.5 * (a + b);
}

}  // namespace testutil

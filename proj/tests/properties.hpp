#pragma once

// Randomized property checks shared by the unit tests and the acceptance
// suite. Each returns the number of failing trials (0 expected).

#include <cmath>
#include <random>

#include "stoptail/matrix.hpp"
#include "stoptail/process.hpp"
#include "stoptail/regime.hpp"

namespace stoptail::props {

inline Matrix random_nonneg(std::mt19937_64& g, int n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = u(g);
  return a;
}

inline Matrix random_stochastic(std::mt19937_64& g, int n) {
  Matrix a = random_nonneg(g, n, 0.05, 1.0);
  for (int i = 0; i < n; ++i) a.row(i) /= a.row(i).sum();
  return a;
}

// rho(A^{1-t} o B^{t}) <= rho(A)^{1-t} rho(B)^{t} entrywise.
inline int elsner_log_convexity(int trials, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<int> dn(2, 5);
  std::uniform_real_distribution<double> dt(0.0, 1.0);
  int bad = 0;
  for (int k = 0; k < trials; ++k) {
    const int n = dn(g);
    const Matrix a = random_nonneg(g, n, 0.01, 2.0);
    const Matrix b = random_nonneg(g, n, 0.01, 2.0);
    const double t = dt(g);
    const Matrix mix = hadamard(entrywise_pow(a, 1.0 - t), entrywise_pow(b, t));
    const double lhs = spectral_radius(mix);
    const double rhs = std::pow(spectral_radius(a), 1.0 - t) * std::pow(spectral_radius(b), t);
    if (lhs > rhs * (1.0 + 1e-9) + 1e-12) ++bad;
  }
  return bad;
}

// |B| <= A entrywise implies rho(B) <= rho(A).
inline int perron_domination(int trials, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<int> dn(2, 6);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int bad = 0;
  for (int k = 0; k < trials; ++k) {
    const int n = dn(g);
    const Matrix a = random_nonneg(g, n, 0.0, 2.0);
    Matrix b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double sign = u01(g) < 0.5 ? -1.0 : 1.0;
        b(i, j) = sign * u01(g) * a(i, j);
      }
    if (spectral_radius(b) > spectral_radius(a) * (1.0 + 1e-9) + 1e-12) ++bad;
  }
  return bad;
}

// t -> rho((tI + (1-t)Pi) D) is nondecreasing for stochastic Pi, diagonal D >= 0.
inline int karlin_monotonicity(int trials, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<int> dn(2, 5);
  std::uniform_real_distribution<double> ud(0.05, 3.0);
  int bad = 0;
  for (int k = 0; k < trials; ++k) {
    const int n = dn(g);
    const Matrix pi = random_stochastic(g, n);
    Vector d(n);
    for (int i = 0; i < n; ++i) d(i) = ud(g);
    double prev = -1.0;
    bool ok = true;
    for (int it = 0; it <= 10; ++it) {
      const double t = it / 10.0;
      const Matrix m =
          (t * Matrix::Identity(n, n) + (1.0 - t) * pi) * d.asDiagonal();
      const double r = spectral_radius(m);
      if (r < prev * (1.0 - 1e-9) - 1e-12) ok = false;
      prev = r;
    }
    if (!ok) ++bad;
  }
  return bad;
}

// s -> log lambda(s) is convex: midpoint value below chord.
inline int lambda_log_convexity(int trials, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<int> dn(1, 3);
  std::uniform_real_distribution<double> umu(-0.1, 0.1), usd(0.02, 0.3), us(-3.0, 3.0),
      uv(0.5, 0.99);
  int bad = 0;
  for (int k = 0; k < trials; ++k) {
    const int n = dn(g);
    ProcessSpec spec;
    spec.n_states = n;
    spec.pi = random_stochastic(g, n);
    spec.v = Matrix::Constant(n, n, uv(g));
    spec.dists.resize(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        spec.dists[i].push_back(Gaussian{umu(g), usd(g) * usd(g)});
    spec.finalize();
    double s1 = us(g), s2 = us(g);
    const double mid = 0.5 * (s1 + s2);
    const double lhs = log_lambda(spec, mid);
    const double chord = 0.5 * (log_lambda(spec, s1) + log_lambda(spec, s2));
    if (lhs > chord + 1e-9) ++bad;
  }
  return bad;
}

// Filtered posteriors stay normalized and nonnegative along random series.
inline int filter_normalization(int trials, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<int> dn(1, 4), dT(3, 30);
  std::uniform_real_distribution<double> umu(-0.2, 0.2), usd(0.01, 0.3), ux(-1.0, 1.0);
  int bad = 0;
  for (int k = 0; k < trials; ++k) {
    const int n = dn(g);
    RegimeModel m;
    m.pi = random_stochastic(g, n);
    m.mu.resize(n);
    m.sigma.resize(n);
    for (int i = 0; i < n; ++i) {
      m.mu(i) = umu(g);
      m.sigma(i) = usd(g);
    }
    std::vector<double> xs(dT(g));
    for (auto& x : xs) x = ux(g);
    const auto res = hamilton_filter(m, xs);
    bool ok = std::isfinite(res.loglik);
    for (const auto& xi : res.filtered) {
      if (std::abs(xi.sum() - 1.0) > 1e-10 || xi.minCoeff() < -1e-14) ok = false;
    }
    if (!ok) ++bad;
  }
  return bad;
}

}  // namespace stoptail::props

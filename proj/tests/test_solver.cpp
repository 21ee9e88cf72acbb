#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "stoptail/errors.hpp"
#include "stoptail/process.hpp"
#include "stoptail/solver.hpp"

using namespace stoptail;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Plain bisection on log lambda, independent of the production refinement.
double bisect_exponent(const ProcessSpec& spec, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (log_lambda(spec, mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("gaussian exponent matches the quadratic closed form") {
  // Unit-period Gaussian size growth with hazard eta: the exponent solves
  // (sigma^2/2) z^2 + (mu - sigma^2/2) z - eta = 0.
  const double mu = 0.02, sigma = 0.1, eta = 0.04;
  const ProcessSpec spec =
      iid_spec(Gaussian{mu - 0.5 * sigma * sigma, sigma * sigma}, std::exp(-eta));
  const double a = 0.5 * sigma * sigma, b = mu - 0.5 * sigma * sigma, c = -eta;
  const double root_pos = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  const double root_neg = (-b - std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  CHECK(root_pos == doctest::Approx(0.5 * (-3.0 + std::sqrt(41.0))).epsilon(1e-14));
  CHECK(solve_exponent(spec, Side::Upper) == doctest::Approx(root_pos).epsilon(1e-10));
  CHECK(solve_exponent(spec, Side::Lower) == doctest::Approx(-root_neg).epsilon(1e-10));
}

TEST_CASE("deterministic growth: exponent and constants in closed form") {
  const double v = 0.96, mu = 0.02;
  const ProcessSpec spec = iid_spec(PointMass{mu}, v);
  const double alpha = solve_exponent(spec, Side::Upper);
  CHECK(alpha == doctest::Approx(-std::log(v) / mu).epsilon(1e-9));
  CHECK(std::abs(lambda(spec, alpha) - 1.0) <= 1e-10);

  const TailConstants tc = tail_constants(spec, alpha);
  CHECK(tc.c == doctest::Approx((1.0 - v) / (mu * v)).epsilon(1e-10));
  CHECK(tc.b == doctest::Approx(2.0 * std::numbers::pi / mu).epsilon(1e-12));
}

TEST_CASE("unit-step geometric sum: sharp oscillation bounds (1, 2)") {
  const double p = 0.5;
  const ProcessSpec spec = iid_spec(PointMass{1.0}, 1.0 - p);
  const double alpha = solve_exponent(spec, Side::Upper);
  CHECK(alpha == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const TailConstants tc = tail_constants(spec, alpha);
  CHECK(tc.c == doctest::Approx(p / (1.0 - p)).epsilon(1e-10));
  CHECK(tc.b == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));
  const TailBounds bounds = tauberian_bounds({tc.c, tc.b, alpha});
  CHECK(bounds.lower == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(bounds.upper == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("oscillation bound formulas") {
  const TailBounds flat = tauberian_bounds({1.0, kInf, 1.0});
  CHECK(flat.lower == 1.0);
  CHECK(flat.upper == 1.0);

  const TailBounds geo = tauberian_bounds({1.0, 2.0 * std::numbers::pi, std::log(2.0)});
  CHECK(geo.lower == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(geo.upper == doctest::Approx(2.0).epsilon(1e-12));

  const TailBounds mid = tauberian_bounds({0.5, std::numbers::pi, 1.0});
  CHECK(mid.lower < mid.upper);
  CHECK(mid.upper / mid.lower == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
  // Wide pole spacing collapses both bounds onto a/alpha.
  const TailBounds wide = tauberian_bounds({0.7, 1e12, 1.3});
  CHECK(wide.lower == doctest::Approx(0.7 / 1.3).epsilon(1e-9));
  CHECK(wide.upper == doctest::Approx(0.7 / 1.3).epsilon(1e-9));

  CHECK_THROWS_AS(static_cast<void>(tauberian_bounds({-1.0, 1.0, 1.0})), ValidationError);
  CHECK_THROWS_AS(static_cast<void>(tauberian_bounds({1.0, 0.0, 1.0})), ValidationError);
  CHECK_THROWS_AS(static_cast<void>(tauberian_bounds({1.0, 1.0, -2.0})), ValidationError);
}

TEST_CASE("pareto prefactor: scaling and the lattice rejection") {
  const ProcessSpec gauss = iid_spec(Gaussian{0.015, 0.01}, std::exp(-0.04));
  const double alpha = solve_exponent(gauss, Side::Upper);
  const double c = tail_constants(gauss, alpha).c;
  CHECK(pareto_prefactor(gauss, alpha, 1.0) == doctest::Approx(c / alpha).epsilon(1e-12));
  const double s0 = std::pow(2.0, alpha);  // S0 = 2 constant
  CHECK(pareto_prefactor(gauss, alpha, s0) ==
        doctest::Approx(c / alpha * s0).epsilon(1e-12));

  const ProcessSpec latt = iid_spec(PointMass{0.02}, 0.96);
  CHECK_THROWS_AS(
      static_cast<void>(pareto_prefactor(latt, solve_exponent(latt, Side::Upper), 1.0)),
      ValidationError);
  CHECK_THROWS_AS(static_cast<void>(pareto_prefactor(gauss, -1.0, 1.0)), ValidationError);
}

TEST_CASE("one-sided specs report which side is missing") {
  const ProcessSpec neg = iid_spec(PointMass{-0.1}, 0.9);
  CHECK_THROWS_WITH_AS(static_cast<void>(solve_exponent(neg, Side::Upper)),
                       doctest::Contains("below 1"), NoSolutionError);
  CHECK(solve_exponent(neg, Side::Lower) ==
        doctest::Approx(-std::log(0.9) / 0.1).epsilon(1e-10));

  const ExponentSolution sol = solve_process(neg);
  CHECK(!sol.alpha.has_value());
  CHECK(!sol.upper_note.empty());
  REQUIRE(sol.beta_tail.has_value());
  CHECK(*sol.beta_tail == doctest::Approx(-std::log(0.9) / 0.1).epsilon(1e-10));
}

TEST_CASE("full report wires constants, bounds, and prefactor together") {
  const ProcessSpec gauss = iid_spec(Gaussian{0.015, 0.01}, std::exp(-0.04));
  const ExponentSolution sol = solve_process(gauss);
  REQUIRE(sol.alpha.has_value());
  REQUIRE(sol.beta_tail.has_value());
  CHECK(!sol.lattice.lattice);
  CHECK(sol.constants.b == kInf);
  CHECK(sol.bounds.lower == doctest::Approx(sol.bounds.upper).epsilon(1e-14));
  REQUIRE(sol.prefactor.has_value());
  CHECK(*sol.prefactor == doctest::Approx(sol.constants.c / *sol.alpha).epsilon(1e-14));
  CHECK(sol.perron_x.size() == 1);
  CHECK(sol.perron_y.size() == 1);

  const ExponentSolution geo = solve_process(iid_spec(PointMass{1.0}, 0.5));
  REQUIRE(geo.alpha.has_value());
  CHECK(geo.lattice.lattice);
  CHECK(!geo.prefactor.has_value());
  CHECK(geo.bounds.lower == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(geo.bounds.upper == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("newton refinement agrees with plain bisection on random specs") {
  std::mt19937_64 g(515151);
  std::uniform_real_distribution<double> umu(-0.05, 0.05), usd(0.05, 0.25), uv(0.7, 0.97),
      upi(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(g() % 3);
    Matrix pi(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) pi(i, j) = upi(g);
      pi.row(i) /= pi.row(i).sum();
    }
    ProcessSpec spec;
    spec.n_states = n;
    spec.pi = pi;
    spec.v = Matrix::Constant(n, n, uv(g));
    spec.dists.resize(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) spec.dists[i].push_back(Gaussian{umu(g), usd(g) * usd(g)});
    spec.finalize();

    const double alpha = solve_exponent(spec, Side::Upper);
    double hi = 0.1;
    while (log_lambda(spec, hi) < 0.0) hi *= 2.0;
    CHECK(alpha == doctest::Approx(bisect_exponent(spec, 0.0, hi)).epsilon(1e-9));
    CHECK(std::abs(lambda(spec, alpha) - 1.0) <= 1e-10);
  }
}

TEST_CASE("constant survival reduces to the discounted chain form") {
  const double p = 0.08;
  Matrix pi(2, 2);
  pi << 0.7, 0.3, 0.4, 0.6;
  ProcessSpec spec;
  spec.n_states = 2;
  spec.pi = pi;
  spec.v = Matrix::Constant(2, 2, 1.0 - p);
  spec.dists = {{Gaussian{0.01, 0.004}, FiniteDiscrete{{-0.1, 0.2}, {0.5, 0.5}}},
                {PointMass{0.03}, Gaussian{0.02, 0.009}}};
  spec.finalize();
  const double alpha = solve_exponent(spec, Side::Upper);

  // Same root from (1-p) rho(Pi o M(s)) = 1 solved without the spec plumbing.
  double lo = 0.0, hi = 1.0;
  const auto f = [&](double s) {
    return (1.0 - p) * spectral_radius(hadamard(pi, mgf_matrix(spec, s))) - 1.0;
  };
  while (f(hi) < 0.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  CHECK(alpha == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
}

TEST_CASE("small-stopping limit approaches the quadratic root") {
  Matrix one = Matrix::Constant(1, 1, 1.0);
  const std::vector<double> grid = {1e-2, 1e-3, 1e-4};

  Vector a0(1), v0(1);
  a0 << 0.0;
  v0 << 1.0;
  const LaplaceLimitReport r0 = laplace_limit_check(one, a0, v0, grid);
  CHECK(r0.s_star == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(r0.alpha.size() == grid.size());
  CHECK(r0.deviation < 0.01);

  Vector a1(1);
  a1 << 0.5;
  const LaplaceLimitReport r1 = laplace_limit_check(one, a1, v0, grid);
  CHECK(r1.s_star == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r1.deviation < 0.01);

  // Two-state family with the same long-run moments converges to the same root.
  Matrix pi2 = Matrix::Constant(2, 2, 0.5);
  Vector a2(2), v2(2);
  a2 << 0.3, -0.3;
  v2 << 1.2, 0.8;
  const LaplaceLimitReport r2 = laplace_limit_check(pi2, a2, v2, grid);
  CHECK(r2.s_star == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(r2.deviation < 0.01);

  CHECK_THROWS_AS(static_cast<void>(laplace_limit_check(one, a0, v0, {0.0})), ValidationError);
  CHECK_THROWS_AS(static_cast<void>(laplace_limit_check(one, a0, v0, {})), ValidationError);
}

TEST_CASE("pencil scan dips at multiples of the pole spacing") {
  const double v = 0.96, mu = 0.02;
  const ProcessSpec spec = iid_spec(PointMass{mu}, v);
  const double alpha = solve_exponent(spec, Side::Upper);
  const double b = tail_constants(spec, alpha).b;
  const auto scan = pencil_axis_scan(spec, alpha, 2.0 * b, 5);
  REQUIRE(scan.size() == 5);
  CHECK(scan[0].second <= 1e-10);   // t = 0
  CHECK(scan[2].second <= 1e-9);    // t = b
  CHECK(scan[4].second <= 1e-9);    // t = 2b
  CHECK(scan[1].second > 1.9);      // t = b/2 sits between poles
  CHECK(scan[3].second > 1.9);
  CHECK(scan[2].first == doctest::Approx(b).epsilon(1e-12));
  CHECK_THROWS_AS(static_cast<void>(pencil_axis_scan(spec, alpha, -1.0, 5)), ValidationError);
}

TEST_CASE("persistence blend reaches its limiting exponent only very slowly") {
  const auto blend = [](double tau) {
    Matrix anti(2, 2);
    anti << 0, 1, 1, 0;
    const Matrix pi = tau * Matrix::Identity(2, 2) + (1.0 - tau) * anti;
    const std::vector<IncrementDist> by_state = {PointMass{0.03}, PointMass{0.01}};
    return current_state_spec(pi, by_state, Vector::Constant(2, std::exp(-0.04)));
  };
  const double limit = 4.0 / 3.0;
  const double near = solve_exponent(blend(0.999), Side::Upper);
  const double far = solve_exponent(blend(0.99997), Side::Upper);
  CHECK(near > far);
  CHECK(far > limit);
  // The gap closes roughly linearly in (1 - tau) with a large constant, so
  // three more nines are needed before the limit is matched to 1e-3.
  CHECK(std::abs(near - limit) > 0.03);
  CHECK(std::abs(far - limit) <= 1.1e-3);
}

#include "stoptail/markov.hpp"

#include <cmath>

#include "stoptail/errors.hpp"

namespace stoptail {

namespace {

void check_ar1(double rho, double sigma, int n) {
  if (!(std::abs(rho) < 1.0))
    throw ValidationError("ar1: persistence must lie strictly inside (-1,1)");
  if (!(sigma > 0.0)) throw ValidationError("ar1: innovation sd must be positive");
  if (n < 1) throw ValidationError("ar1: need at least one grid point");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

DiscretizedAr1 rouwenhorst(double rho, double sigma, int n) {
  check_ar1(rho, sigma, n);
  DiscretizedAr1 out;
  if (n == 1) {
    out.grid = Vector::Zero(1);
    out.P = Matrix::Ones(1, 1);
    return out;
  }
  const double sd_y = sigma / std::sqrt(1.0 - rho * rho);
  const double psi = sd_y * std::sqrt(static_cast<double>(n - 1));
  out.grid = Vector::LinSpaced(n, -psi, psi);

  const double p = (1.0 + rho) / 2.0;
  Matrix theta(2, 2);
  theta << p, 1.0 - p, 1.0 - p, p;
  for (int k = 3; k <= n; ++k) {
    Matrix big = Matrix::Zero(k, k);
    big.topLeftCorner(k - 1, k - 1) += p * theta;
    big.topRightCorner(k - 1, k - 1) += (1.0 - p) * theta;
    big.bottomLeftCorner(k - 1, k - 1) += (1.0 - p) * theta;
    big.bottomRightCorner(k - 1, k - 1) += p * theta;
    big.middleRows(1, k - 2) /= 2.0;
    theta = big;
  }
  out.P = theta;
  return out;
}

DiscretizedAr1 tauchen(double rho, double sigma, int n, double m) {
  check_ar1(rho, sigma, n);
  if (!(m > 0.0)) throw ValidationError("ar1: grid width multiple must be positive");
  DiscretizedAr1 out;
  if (n == 1) {
    out.grid = Vector::Zero(1);
    out.P = Matrix::Ones(1, 1);
    return out;
  }
  const double sd_y = sigma / std::sqrt(1.0 - rho * rho);
  out.grid = Vector::LinSpaced(n, -m * sd_y, m * sd_y);
  const double half = (out.grid(1) - out.grid(0)) / 2.0;
  out.P.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const double cond_mean = rho * out.grid(i);
    out.P(i, 0) = normal_cdf((out.grid(0) - cond_mean + half) / sigma);
    for (int j = 1; j + 1 < n; ++j)
      out.P(i, j) = normal_cdf((out.grid(j) - cond_mean + half) / sigma) -
                    normal_cdf((out.grid(j) - cond_mean - half) / sigma);
    out.P(i, n - 1) = 1.0 - normal_cdf((out.grid(n - 1) - cond_mean - half) / sigma);
  }
  return out;
}

}  // namespace stoptail

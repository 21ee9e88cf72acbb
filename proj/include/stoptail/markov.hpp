#pragma once

// Finite-state approximations of a stationary Gaussian AR(1),
//   y' = rho y + e,  e ~ N(0, sigma^2).

#include "stoptail/matrix.hpp"

namespace stoptail {

struct DiscretizedAr1 {
  Vector grid;  // state values for y
  Matrix P;     // row-stochastic transition matrix
};

// Rouwenhorst's method. Matches the conditional mean (rho exactly) and the
// unconditional variance exactly for any rho in (-1,1).
DiscretizedAr1 rouwenhorst(double rho, double sigma, int n);

// Tauchen's method on an evenly spaced grid covering m unconditional
// standard deviations.
DiscretizedAr1 tauchen(double rho, double sigma, int n, double m = 3.0);

}  // namespace stoptail

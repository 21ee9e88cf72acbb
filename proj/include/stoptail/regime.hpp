#pragma once

// Gaussian hidden-Markov regime models for log growth: forward filtering,
// EM estimation over panels, and the Pareto exponent the fitted regimes imply
// for geometrically stopped growth.

#include <cstdint>
#include <vector>

#include "stoptail/matrix.hpp"

namespace stoptail {

struct RegimeModel {
  Matrix pi;     // row-stochastic regime transitions
  Vector mu;     // mean log growth per regime
  Vector sigma;  // sd of log growth per regime, positive
  int n() const { return static_cast<int>(mu.size()); }
  void validate() const;
};

struct FilterResult {
  double loglik = 0.0;
  std::vector<Vector> filtered;  // one posterior per observation, sums to 1
};

// Forward filter for one series of log-growth observations, started from the
// stationary distribution of pi. Rescales per step, so it never underflows.
FilterResult hamilton_filter(const RegimeModel& model, const std::vector<double>& series);

// Panel version: units are independent, each filtered from the stationary
// initial condition; log-likelihoods add, posteriors concatenate in unit order.
FilterResult hamilton_filter(const RegimeModel& model,
                             const std::vector<std::vector<double>>& units);

struct EmOptions {
  int max_iter = 500;
  double tol = 1e-8;   // absolute log-likelihood improvement
  int restarts = 5;    // first start is deterministic, the rest perturb it
  uint64_t seed = 1;   // drives the perturbations only
};

struct FitResult {
  RegimeModel model;
  double loglik = 0.0;
  std::vector<Vector> filtered;      // per observation, concatenated by unit
  int iterations = 0;
  bool converged = false;
  bool degenerate_restart = false;   // some restart emptied a regime
  std::vector<double> loglik_trace;  // of the winning restart
};

FitResult em_fit(const std::vector<std::vector<double>>& units, int n_states,
                 EmOptions opt = {});

// Tail exponent of geometrically stopped growth under the fitted regimes:
// the root of (1-p) rho(Pi diag E[e^{s log G} | regime]) = 1.
double implied_exponent(const RegimeModel& model, double p);

}  // namespace stoptail

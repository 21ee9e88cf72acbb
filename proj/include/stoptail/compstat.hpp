#pragma once

// Comparative statics of the upper exponent: analytic partial derivatives at
// the unit root via the implicit function theorem and the Perron pair.

#include <optional>
#include <vector>

#include "stoptail/process.hpp"

namespace stoptail {

struct SensitivityReport {
  double alpha = 0.0;    // base solution the derivatives refer to
  Matrix dalpha_dv;      // per-edge survival
  Matrix dalpha_dmu;     // per-edge location shift
  Matrix dalpha_dsigma;  // per-edge scale; needs location-scale variants
  std::optional<double> dalpha_dtau;  // persistence blend, see below
};

// tau, when given, is the blend weight the spec's pi was built with:
// pi = tau I + (1-tau) base. The tau derivative is only defined for specs
// whose survival and increments are keyed on the current state alone;
// passing tau for any other spec is an error.
SensitivityReport sensitivities(const ProcessSpec& spec,
                                std::optional<double> tau = std::nullopt);

// Two-state construction whose exponent rises with persistence because its
// increments are keyed on the transition rather than the destination: 0 on
// the diagonal, mu > 0 off it, pi(tau) = tau I + (1-tau) antidiagonal,
// constant survival v.
struct PersistencePoint {
  double tau = 0.0;
  double alpha = 0.0;
  double closed_form = 0.0;  // (1/mu) log(1 + (1/v - 1)/(1 - tau))
};

std::vector<PersistencePoint> persistence_counterexample(double v = 0.96, double mu = 0.02,
                                                         std::vector<double> tau_grid = {});

}  // namespace stoptail

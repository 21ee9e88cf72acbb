#pragma once

// Conditional increment distributions and their moment generating functions.
// Every variant has full-line MGF domain; the domain plumbing exists so a
// finite-endpoint variant can slot in without touching callers.

#include <optional>
#include <variant>
#include <vector>

#include "stoptail/errors.hpp"
#include "stoptail/rng.hpp"

namespace stoptail {

struct PointMass {
  double value = 0.0;
};

struct Gaussian {
  double mean = 0.0;
  double variance = 1.0;  // > 0
};

// Log growth rate distributed N(mu, sigma^2); separate from Gaussian only in
// parametrization (sigma is a standard deviation).
struct LognormalGrowth {
  double mu = 0.0;
  double sigma = 1.0;  // > 0
};

struct FiniteDiscrete {
  std::vector<double> values;
  std::vector<double> probs;  // nonnegative, sum 1
};

// location + scale * Y with E[Y] = 0. Use make_shifted_scaled to build one;
// it recenters the base to zero mean.
struct ShiftedScaled {
  std::variant<Gaussian, FiniteDiscrete> base;
  double location = 0.0;
  double scale = 1.0;  // > 0
};

using IncrementDist =
    std::variant<PointMass, Gaussian, LognormalGrowth, FiniteDiscrete, ShiftedScaled>;

struct MgfDomain {
  double lo;  // -inf allowed
  double hi;  // +inf allowed
};

void validate(const IncrementDist& d);

ShiftedScaled make_shifted_scaled(std::variant<Gaussian, FiniteDiscrete> base, double location,
                                  double scale);

double mean(const IncrementDist& d);
MgfDomain mgf_domain(const IncrementDist& d);
double log_mgf(const IncrementDist& d, double s);
double mgf(const IncrementDist& d, double s);
// dM/ds, closed form per variant.
double mgf_deriv(const IncrementDist& d, double s);
// d/ds log M(s); stabilized, safe where mgf itself would overflow.
double log_mgf_deriv(const IncrementDist& d, double s);

// d/du log E[e^{uY}] of a ShiftedScaled base; used for scale sensitivities.
double base_log_mgf_deriv(const std::variant<Gaussian, FiniteDiscrete>& base, double u);

bool is_continuous(const IncrementDist& d);
// Support points of a purely discrete variant (probability-zero atoms
// dropped); nullopt for continuous variants.
std::optional<std::vector<double>> discrete_support(const IncrementDist& d);

double sample(const IncrementDist& d, CounterRng& rng);

}  // namespace stoptail

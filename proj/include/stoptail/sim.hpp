#pragma once

// Monte Carlo for stopped processes plus empirical tail estimation; the
// independent check on everything the solver computes analytically.

#include <cstdint>
#include <string>
#include <vector>

#include "stoptail/process.hpp"

namespace stoptail {

struct InitialSize {
  enum class Kind { Constant, Lognormal };
  Kind kind = Kind::Constant;
  double constant = 1.0;
  double log_mean = 0.0;  // lognormal parameters, log scale
  double log_sd = 1.0;
};

struct SimConfig {
  int64_t paths = 1;
  uint64_t seed = 1;
  int64_t max_steps = 1000000;
  InitialSize s0;
  int threads = 0;  // 0 picks hardware concurrency
};

// One entry per path, indexed by path id; identical for a given (spec, cfg)
// regardless of the thread count.
struct SimResult {
  std::vector<double> w;             // W_T
  std::vector<double> size;          // S0 e^{W_T}
  std::vector<int32_t> steps;        // T
  std::vector<int32_t> final_state;  // J_T
  std::vector<uint8_t> censored;     // hit the step cap before stopping
  int64_t censored_count = 0;
  std::string warning;  // set when censoring exceeds 0.1%
};

SimResult simulate_stopped(const ProcessSpec& spec, const SimConfig& cfg);

struct TailEstimate {
  double alpha_hat = 0.0;
  int64_t k = 0;           // tail sample count
  double threshold = 0.0;  // order statistic the tail is measured against
  double std_error = 0.0;  // alpha_hat / sqrt(k)
};

// Hill MLE over the largest tail_fraction of the positive sample values.
TailEstimate hill_estimate(const std::vector<double>& sample, double tail_fraction = 0.10);

struct TailCurvePoint {
  double w = 0.0;
  double scaled = 0.0;  // e^{alpha w} P(W > w)
  double slope = 0.0;   // log P(W > w) / w
  int64_t count = 0;
};

struct TailCurve {
  std::vector<TailCurvePoint> rows;
  int64_t dropped = 0;  // grid points with an empty tail
};

TailCurve empirical_tail_curve(const std::vector<double>& sample, double alpha,
                               const std::vector<double>& grid);

// Least-squares slope of log P(W > w) against w over the grid rows with a
// nonempty tail.
double tail_slope(const std::vector<double>& sample, const std::vector<double>& grid);

}  // namespace stoptail

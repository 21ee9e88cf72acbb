#pragma once

// Heterogeneous-agent economy with idiosyncratic investment risk: equilibrium
// wage, linear value coefficients, growth rates, the wealth Pareto exponent,
// and an agent-level simulation harness.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stoptail/matrix.hpp"
#include "stoptail/process.hpp"
#include "stoptail/sim.hpp"

namespace stoptail {

struct AiyagariEconomy {
  int n_states = 0;  // set by finalize
  Matrix P;          // productivity-state transitions, row-stochastic
  Vector A;          // productivity per state, positive
  double alpha_cap = 0.38;   // capital share
  double delta = 0.08;       // depreciation
  double disc_beta = 0.96;   // effective discount factor
  double eps_eis = 1.0;      // elasticity of intertemporal substitution
  double gamma_rra = 2.0;    // relative risk aversion, != 1
  double p_die = 0.025;      // per-period bankruptcy probability
  double kappa = 0.8;        // capital recovery rate
  Vector pi0;                // newborn state draw; empty means stationary of P

  // Validates everything and fills the defaults. Call before any solve.
  void finalize();
};

// Gross return on capital per state at wage omega; strictly decreasing in
// omega, positive.
Vector returns(const AiyagariEconomy& eco, double omega);

// Coefficients b of the linear value function v_s(w) = b_s w. Throws when the
// discounted-return spectral condition rules out a solution.
Vector value_coefficients(const AiyagariEconomy& eco, const Vector& R);

// Market-clearing ratio phi(omega); strictly decreasing, equals 1 at the
// equilibrium wage. Throws when omega is outside the region where the
// aggregate-capital series converges.
double market_clearing(const AiyagariEconomy& eco, double omega);

// Wage at which newborn capital injections exactly replace the capital lost
// to bankruptcy.
double equilibrium_wage(const AiyagariEconomy& eco);

struct AiyagariSolution {
  double omega_star = 0.0;
  Vector R;       // returns at the equilibrium wage
  Vector b;       // value coefficients
  Vector Gk;      // capital growth factor by current state
  Matrix Gw;      // wealth growth factor by (current, next) state
  double zeta = 0.0;  // wealth Pareto exponent
};

// The stopped multiplicative process followed by an agent's wealth: state
// transitions P, survival 1-p everywhere, log growth as point-mass increments.
ProcessSpec wealth_process(const AiyagariEconomy& eco, const Matrix& gw);

double wealth_exponent(const AiyagariEconomy& eco, const AiyagariSolution& sol);

AiyagariSolution solve_economy(const AiyagariEconomy& eco);

struct EconomySim {
  std::vector<double> wealth;  // cross-section at the final period
  std::vector<int32_t> state;
  int64_t upper_tail_count = 0;          // observations above the newborn unit
  std::optional<TailEstimate> hill;      // top decile of the upper tail
  std::string note;                      // set when the Hill step is skipped
};

EconomySim simulate_economy(const AiyagariEconomy& eco, const AiyagariSolution& sol,
                            int64_t agents, int64_t periods, uint64_t seed,
                            int threads = 0);

}  // namespace stoptail

#pragma once

// Locates the unit crossings of lambda(s) (the tail exponents) and assembles
// the residue constant, pole spacing, and sharp oscillation bounds around
// them.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stoptail/process.hpp"

namespace stoptail {

enum class Side { Upper, Lower };

// lambda never reaches 1 on the requested side. The message carries lambda at
// the last point inspected, so "never crosses" and "MGF domain ends first"
// stay distinguishable.
struct NoSolutionError : std::runtime_error {
  explicit NoSolutionError(const std::string& msg) : std::runtime_error(msg) {}
};

// The unique s > 0 with lambda(s) = 1 (Upper), or beta = -s > 0 for the
// matching crossing on the negative axis (Lower).
double solve_exponent(const ProcessSpec& spec, Side side);

struct TailConstants {
  double c = 0.0;  // residue magnitude of the tail transform at alpha
  double b = 0.0;  // pole spacing along the critical axis; +inf if nonlattice
};

// Residue constant from the Perron pair at alpha and the analytic M'(alpha);
// pole spacing from the lattice structure.
TailConstants tail_constants(const ProcessSpec& spec, double alpha);

struct TauberianInputs {
  double a = 0.0;      // residue magnitude
  double b = 0.0;      // pole spacing; +inf collapses both bounds to a/alpha
  double alpha = 0.0;  // decay rate
};

struct TailBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Sharp oscillation bounds for e^{alpha w} P(W > w).
TailBounds tauberian_bounds(const TauberianInputs& inp);

// lim w^alpha P(S > w) for S = S0 e^W with a nonlattice W: (c/alpha) E[S0^alpha].
// The moment is supplied by the caller. Lattice specs are rejected; only the
// oscillation bounds apply there.
double pareto_prefactor(const ProcessSpec& spec, double alpha, double s0_moment);

// Full report for one spec. Either side may be absent; its note then holds
// the solver diagnostic. Constants, bounds, and prefactor are filled when the
// upper exponent exists (prefactor additionally needs a nonlattice spec and
// uses a unit initial size).
struct ExponentSolution {
  std::optional<double> alpha;
  std::optional<double> beta_tail;
  std::string upper_note, lower_note;
  Vector perron_x, perron_y;  // at s = alpha
  TailConstants constants;
  TailBounds bounds;
  LatticeStructure lattice;
  std::optional<double> prefactor;
};

ExponentSolution solve_process(const ProcessSpec& spec);

// Small-stopping-probability limit: increments sqrt(p) X + p a_n with
// conditional variances var_n, survival 1-p. alpha(p) approaches the positive
// root s* of (sigma^2/2) s^2 + a s - 1 = 0 built from the long-run averages.
struct LaplaceLimitReport {
  std::vector<double> p_grid;
  std::vector<double> alpha;  // alpha(p), aligned with p_grid
  double s_star = 0.0;
  double deviation = 0.0;  // |alpha - s_star| at the smallest p
};

LaplaceLimitReport laplace_limit_check(const Matrix& pi, const Vector& a, const Vector& var,
                                       const std::vector<double>& p_grid);

// Debug aid: |det(I - Q(alpha + i t))| on an even t-grid over [0, t_max].
// Near-zeros mark poles; their spacing cross-checks the lattice-derived b.
std::vector<std::pair<double, double>> pencil_axis_scan(const ProcessSpec& spec, double alpha,
                                                        double t_max, int n_points);

}  // namespace stoptail

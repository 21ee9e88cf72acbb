#pragma once

// Geometrically stopped Markov additive process: a state chain Pi, per-edge
// survival probabilities V, and per-edge increment distributions. lambda(s)
// is the spectral radius of V o Pi o M(s), whose unit crossings give the
// tail exponents.

#include <vector>

#include "stoptail/increments.hpp"
#include "stoptail/matrix.hpp"

namespace stoptail {

struct ProcessSpec {
  int n_states = 0;
  Matrix pi;  // row-stochastic
  Matrix v;   // entries in [0,1]
  std::vector<std::vector<IncrementDist>> dists;  // [from][to]
  Vector omega0;  // initial distribution; empty = stationary of pi

  // Validates and fills defaults. Call after assembling the fields; the
  // factory helpers below do it for you.
  void finalize();

  bool active(int from, int to) const {
    return v(from, to) * pi(from, to) > kStructuralZero;
  }
};

// Column-constant convenience: increment and survival depend only on the
// current (destination) state.
ProcessSpec current_state_spec(const Matrix& pi, const std::vector<IncrementDist>& by_state,
                               const Vector& survival_by_state);
// IID convenience: one state, one distribution, scalar survival.
ProcessSpec iid_spec(const IncrementDist& dist, double survival);

// M(s), entrywise MGFs. Throws ValidationError identifying the offending
// (from, to) pair when s is outside some entry's domain.
Matrix mgf_matrix(const ProcessSpec& spec, double s);

// Intersection of all active entries' MGF domains.
MgfDomain mgf_domain(const ProcessSpec& spec);

// rho(V o Pi o M(s)); log_lambda works on the log scale and never overflows.
double lambda(const ProcessSpec& spec, double s);
double log_lambda(const ProcessSpec& spec, double s);

// d/ds log lambda(s) via Perron pair of the weighted matrix.
double log_lambda_deriv(const ProcessSpec& spec, double s);

// Left/right Perron vectors of V o Pi o M(s). The radius field refers to the
// overflow-scaled matrix exp(L - max L), not the original; the vectors are
// shared by both.
PerronPair weighted_perron(const ProcessSpec& spec, double s);

struct LatticeStructure {
  bool lattice = false;  // false: some active increment is continuous
  double span = 0.0;     // maximal per-edge span d (lattice case)
  // true when some active support needs a nonzero offset a_{nn'} relative to
  // span * Z; pole spacing may then exceed 2*pi/span and the reported B is
  // conservative.
  bool offset = false;

  double b_value() const;  // 2*pi/span, or +inf for nonlattice
};

LatticeStructure lattice_structure(const ProcessSpec& spec);

}  // namespace stoptail

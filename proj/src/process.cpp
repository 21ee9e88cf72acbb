#include "stoptail/process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "stoptail/errors.hpp"

namespace stoptail {

namespace {

constexpr double kSumTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string entry_name(int from, int to) {
  return "(" + std::to_string(from) + "," + std::to_string(to) + ")";
}

void check_domain(const IncrementDist& d, double s, int from, int to) {
  MgfDomain dom = mgf_domain(d);
  if (s > dom.lo && s < dom.hi) return;
  throw ValidationError("mgf: s=" + std::to_string(s) + " outside the MGF domain of increment " +
                        entry_name(from, to));
}

// Log-scale weighted matrix L_ij = log(v_ij pi_ij) + log M_ij(s); -inf on
// inactive entries.
Matrix log_weight_matrix(const ProcessSpec& spec, double s) {
  Matrix l = Matrix::Constant(spec.n_states, spec.n_states, -kInf);
  for (int i = 0; i < spec.n_states; ++i)
    for (int j = 0; j < spec.n_states; ++j) {
      if (!spec.active(i, j)) continue;
      check_domain(spec.dists[i][j], s, i, j);
      l(i, j) = std::log(spec.v(i, j) * spec.pi(i, j)) + log_mgf(spec.dists[i][j], s);
    }
  return l;
}

}  // namespace

void ProcessSpec::finalize() {
  if (n_states <= 0) throw ValidationError("process: n_states must be positive");
  require_square(pi, "pi");
  require_square(v, "v");
  if (pi.rows() != n_states || v.rows() != n_states)
    throw ValidationError("process: pi and v must be n_states x n_states");
  require_nonnegative(pi, "pi");
  for (int i = 0; i < n_states; ++i) {
    double rs = pi.row(i).sum();
    if (std::abs(rs - 1.0) > kSumTol)
      throw ValidationError("process: pi row " + std::to_string(i) + " sums to " +
                            std::to_string(rs) + ", expected 1");
  }
  for (int i = 0; i < n_states; ++i)
    for (int j = 0; j < n_states; ++j)
      if (!(v(i, j) >= 0.0 && v(i, j) <= 1.0))
        throw ValidationError("process: survival v" + entry_name(i, j) + " must lie in [0,1]");
  if (static_cast<int>(dists.size()) != n_states)
    throw ValidationError("process: dists must have one row per state");
  for (int i = 0; i < n_states; ++i) {
    if (static_cast<int>(dists[i].size()) != n_states)
      throw ValidationError("process: dists row " + std::to_string(i) +
                            " must have one entry per state");
    for (int j = 0; j < n_states; ++j) validate(dists[i][j]);
  }

  auto unreachable = find_unreachable_pair(hadamard(v, pi));
  if (unreachable.first >= 0)
    throw ValidationError("process: survival-weighted chain is not strongly connected (no path "
                          "from state " +
                          std::to_string(unreachable.first) + " to state " +
                          std::to_string(unreachable.second) + ")");

  bool can_stop = false;
  for (int i = 0; i < n_states && !can_stop; ++i)
    for (int j = 0; j < n_states && !can_stop; ++j)
      if (pi(i, j) > kStructuralZero && v(i, j) < 1.0) can_stop = true;
  if (!can_stop)
    throw ValidationError("process: stopping never occurs (v = 1 on every transition with "
                          "positive probability)");

  if (omega0.size() == 0) {
    omega0 = stationary_distribution(pi);
  } else {
    if (omega0.size() != n_states)
      throw ValidationError("process: omega0 must have one entry per state");
    if (omega0.minCoeff() < 0.0)
      throw ValidationError("process: omega0 must be nonnegative");
    if (std::abs(omega0.sum() - 1.0) > kSumTol)
      throw ValidationError("process: omega0 must sum to 1");
  }
}

ProcessSpec current_state_spec(const Matrix& pi, const std::vector<IncrementDist>& by_state,
                               const Vector& survival_by_state) {
  ProcessSpec spec;
  spec.n_states = static_cast<int>(pi.rows());
  spec.pi = pi;
  if (static_cast<int>(by_state.size()) != spec.n_states ||
      survival_by_state.size() != spec.n_states)
    throw ValidationError("current_state_spec: need one distribution and one survival per state");
  spec.v.resize(spec.n_states, spec.n_states);
  for (int j = 0; j < spec.n_states; ++j) spec.v.col(j).setConstant(survival_by_state(j));
  spec.dists.assign(spec.n_states, by_state);
  spec.finalize();
  return spec;
}

ProcessSpec iid_spec(const IncrementDist& dist, double survival) {
  ProcessSpec spec;
  spec.n_states = 1;
  spec.pi = Matrix::Constant(1, 1, 1.0);
  spec.v = Matrix::Constant(1, 1, survival);
  spec.dists = {{dist}};
  spec.finalize();
  return spec;
}

Matrix mgf_matrix(const ProcessSpec& spec, double s) {
  Matrix m(spec.n_states, spec.n_states);
  for (int i = 0; i < spec.n_states; ++i)
    for (int j = 0; j < spec.n_states; ++j) {
      check_domain(spec.dists[i][j], s, i, j);
      m(i, j) = mgf(spec.dists[i][j], s);
    }
  return m;
}

MgfDomain mgf_domain(const ProcessSpec& spec) {
  MgfDomain dom{-kInf, kInf};
  for (int i = 0; i < spec.n_states; ++i)
    for (int j = 0; j < spec.n_states; ++j) {
      if (!spec.active(i, j)) continue;
      MgfDomain e = mgf_domain(spec.dists[i][j]);
      dom.lo = std::max(dom.lo, e.lo);
      dom.hi = std::min(dom.hi, e.hi);
    }
  return dom;
}

double log_lambda(const ProcessSpec& spec, double s) {
  Matrix l = log_weight_matrix(spec, s);
  double m = l.maxCoeff();
  Matrix q = (l.array() - m).exp().matrix();
  return m + std::log(spectral_radius(q));
}

double lambda(const ProcessSpec& spec, double s) { return std::exp(log_lambda(spec, s)); }

PerronPair weighted_perron(const ProcessSpec& spec, double s) {
  Matrix l = log_weight_matrix(spec, s);
  return perron_pair((l.array() - l.maxCoeff()).exp().matrix());
}

double log_lambda_deriv(const ProcessSpec& spec, double s) {
  Matrix l = log_weight_matrix(spec, s);
  double m = l.maxCoeff();
  Matrix q = (l.array() - m).exp().matrix();
  PerronPair p = perron_pair(q);
  double num = 0.0;
  for (int i = 0; i < spec.n_states; ++i)
    for (int j = 0; j < spec.n_states; ++j) {
      if (!spec.active(i, j)) continue;
      num += p.left(i) * q(i, j) * log_mgf_deriv(spec.dists[i][j], s) * p.right(j);
    }
  return num / (p.radius * p.left.dot(p.right));
}

namespace {

// Support points are rounded to 12 decimals and handled as exact integers so
// the gcd is immune to float noise.
constexpr double kLatticeScale = 1e12;
constexpr double kMaxLatticeValue = 1e3;

int64_t to_grid(double x) {
  if (!(std::abs(x) <= kMaxLatticeValue))
    throw NumericalError("lattice detection: support value " + std::to_string(x) +
                         " too large for exact arithmetic");
  return std::llround(x * kLatticeScale);
}

}  // namespace

double LatticeStructure::b_value() const {
  if (!lattice) return kInf;
  if (span <= 0.0)
    throw NumericalError("lattice span is degenerate (all closed-walk displacements vanish)");
  return 2.0 * std::numbers::pi / span;
}

LatticeStructure lattice_structure(const ProcessSpec& spec) {
  const int n = spec.n_states;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (spec.active(i, j) && is_continuous(spec.dists[i][j])) return LatticeStructure{};

  // First support point per active edge, on the integer grid.
  std::vector<std::vector<int64_t>> w(n, std::vector<int64_t>(n, 0));
  int64_t d_entry = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!spec.active(i, j)) continue;
      auto pts = discrete_support(spec.dists[i][j]);
      std::vector<int64_t> si(pts->size());
      for (size_t k = 0; k < pts->size(); ++k) si[k] = to_grid((*pts)[k]);
      for (size_t k = 1; k < si.size(); ++k) d_entry = std::gcd(d_entry, si[k] - si[k - 1]);
      if (i == j) d_entry = std::gcd(d_entry, si[0]);
      w[i][j] = si[0];
    }

  // Potentials over the (undirected) active graph turn every edge weight into
  // a closed-walk discrepancy; their gcd with d_entry is the full walk gcd.
  std::vector<int64_t> phi(n, 0);
  std::vector<char> seen(n, 0);
  std::queue<int> bfs;
  bfs.push(0);
  seen[0] = 1;
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop();
    for (int t = 0; t < n; ++t) {
      if (seen[t]) continue;
      if (spec.active(u, t)) {
        phi[t] = phi[u] + w[u][t];
      } else if (spec.active(t, u)) {
        phi[t] = phi[u] - w[t][u];
      } else {
        continue;
      }
      seen[t] = 1;
      bfs.push(t);
    }
  }
  int64_t d_full = d_entry;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (spec.active(i, j)) d_full = std::gcd(d_full, std::abs(w[i][j] + phi[i] - phi[j]));

  LatticeStructure out;
  out.lattice = true;
  if (d_entry > 0) {
    out.span = static_cast<double>(d_entry) / kLatticeScale;
    out.offset = (d_full != d_entry);
  } else if (d_full > 0) {
    // No within-entry or diagonal constraints at all; the walk gcd is the
    // only lattice information available.
    out.span = static_cast<double>(d_full) / kLatticeScale;
    out.offset = true;
  }
  return out;
}

}  // namespace stoptail

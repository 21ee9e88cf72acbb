#include "stoptail/compstat.hpp"

#include <cmath>
#include <string>
#include <variant>

#include "stoptail/errors.hpp"
#include "stoptail/solver.hpp"

namespace stoptail {

namespace {

// d log M / d sigma at fixed location, for the location-scale variants.
double scale_log_deriv(const IncrementDist& d, double s) {
  return std::visit(
      [s](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return std::sqrt(v.variance) * s * s;
        } else if constexpr (std::is_same_v<T, LognormalGrowth>) {
          return v.sigma * s * s;
        } else if constexpr (std::is_same_v<T, ShiftedScaled>) {
          return s * base_log_mgf_deriv(v.base, v.scale * s);
        } else {
          throw ValidationError(
              "sensitivities: increment has no scale parameter (needs a Gaussian, lognormal "
              "growth, or shifted-scaled form)");
        }
      },
      d);
}

bool same_base(const std::variant<Gaussian, FiniteDiscrete>& a,
               const std::variant<Gaussian, FiniteDiscrete>& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ga = std::get_if<Gaussian>(&a)) {
    const auto& gb = std::get<Gaussian>(b);
    return ga->mean == gb.mean && ga->variance == gb.variance;
  }
  const auto& fa = std::get<FiniteDiscrete>(a);
  const auto& fb = std::get<FiniteDiscrete>(b);
  return fa.values == fb.values && fa.probs == fb.probs;
}

bool same_dist(const IncrementDist& a, const IncrementDist& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&b](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b);
        if constexpr (std::is_same_v<T, PointMass>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return x.mean == y.mean && x.variance == y.variance;
        } else if constexpr (std::is_same_v<T, LognormalGrowth>) {
          return x.mu == y.mu && x.sigma == y.sigma;
        } else if constexpr (std::is_same_v<T, FiniteDiscrete>) {
          return x.values == y.values && x.probs == y.probs;
        } else {
          return x.location == y.location && x.scale == y.scale && same_base(x.base, y.base);
        }
      },
      a);
}

bool current_state_form(const ProcessSpec& spec) {
  for (int j = 0; j < spec.n_states; ++j)
    for (int i = 1; i < spec.n_states; ++i) {
      if (std::abs(spec.v(i, j) - spec.v(0, j)) > 1e-12) return false;
      if (!same_dist(spec.dists[i][j], spec.dists[0][j])) return false;
    }
  return true;
}

}  // namespace

SensitivityReport sensitivities(const ProcessSpec& spec, std::optional<double> tau) {
  const double alpha = solve_exponent(spec, Side::Upper);
  const PerronPair p = weighted_perron(spec, alpha);
  const int n = spec.n_states;

  // All derivative ratios share the bilinear form y' (dQ/d.) x; the Perron
  // normalization cancels. Entries of Q itself are moderate at the unit root,
  // so true-scale arithmetic is safe here.
  double dlam_ds = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (spec.active(i, j))
        dlam_ds += p.left(i) * spec.v(i, j) * spec.pi(i, j) *
                   mgf_deriv(spec.dists[i][j], alpha) * p.right(j);
  if (!(dlam_ds > 0.0))
    throw NumericalError("sensitivities: lambda is not increasing at alpha (bracketing bug)");

  SensitivityReport rep;
  rep.alpha = alpha;
  rep.dalpha_dv = Matrix::Zero(n, n);
  rep.dalpha_dmu = Matrix::Zero(n, n);
  rep.dalpha_dsigma = Matrix::Zero(n, n);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (spec.pi(i, j) > kStructuralZero) {
        const double mg = mgf(spec.dists[i][j], alpha);
        rep.dalpha_dv(i, j) = -(p.left(i) * spec.pi(i, j) * mg * p.right(j)) / dlam_ds;
      }
      if (spec.active(i, j)) {
        const double q = spec.v(i, j) * spec.pi(i, j) * mgf(spec.dists[i][j], alpha);
        rep.dalpha_dmu(i, j) = -(p.left(i) * q * alpha * p.right(j)) / dlam_ds;
        rep.dalpha_dsigma(i, j) =
            -(p.left(i) * q * scale_log_deriv(spec.dists[i][j], alpha) * p.right(j)) / dlam_ds;
      }
    }

  if (tau) {
    if (!(*tau > 0.0 && *tau < 1.0))
      throw ValidationError("sensitivities: tau must lie in (0,1)");
    if (!current_state_form(spec))
      throw ValidationError(
          "sensitivities: the tau derivative needs survival and increments keyed on the "
          "current state only");
    const Matrix base = (spec.pi - *tau * Matrix::Identity(n, n)) / (1.0 - *tau);
    if (base.minCoeff() < -1e-12)
      throw ValidationError("sensitivities: pi is not a tau-blend at tau=" +
                            std::to_string(*tau));
    double dlam_dtau = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double dpij = (i == j ? 1.0 : 0.0) - base(i, j);
        if (dpij == 0.0) continue;
        dlam_dtau +=
            p.left(i) * spec.v(i, j) * dpij * mgf(spec.dists[i][j], alpha) * p.right(j);
      }
    rep.dalpha_dtau = -dlam_dtau / dlam_ds;
  }
  return rep;
}

std::vector<PersistencePoint> persistence_counterexample(double v, double mu,
                                                         std::vector<double> tau_grid) {
  if (!(v > 0.0 && v < 1.0)) throw ValidationError("persistence_counterexample: v in (0,1)");
  if (!(mu > 0.0)) throw ValidationError("persistence_counterexample: mu must be positive");
  if (tau_grid.empty())
    for (int k = 1; k <= 9; ++k) tau_grid.push_back(0.1 * k);

  std::vector<PersistencePoint> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    if (!(tau >= 0.0 && tau < 1.0))
      throw ValidationError("persistence_counterexample: tau must lie in [0,1)");
    ProcessSpec spec;
    spec.n_states = 2;
    spec.pi.resize(2, 2);
    spec.pi << tau, 1.0 - tau, 1.0 - tau, tau;
    spec.v = Matrix::Constant(2, 2, v);
    spec.dists = {{PointMass{0.0}, PointMass{mu}}, {PointMass{mu}, PointMass{0.0}}};
    spec.finalize();
    PersistencePoint pt;
    pt.tau = tau;
    pt.alpha = solve_exponent(spec, Side::Upper);
    pt.closed_form = std::log1p((1.0 / v - 1.0) / (1.0 - tau)) / mu;
    out.push_back(pt);
  }
  return out;
}

}  // namespace stoptail

#include "stoptail/regime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "stoptail/errors.hpp"
#include "stoptail/process.hpp"
#include "stoptail/rng.hpp"
#include "stoptail/solver.hpp"

namespace stoptail {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

void check_series(const std::vector<double>& xs) {
  if (xs.empty()) throw ValidationError("regime filter: empty series");
  for (double x : xs)
    if (!std::isfinite(x)) throw ValidationError("regime filter: non-finite observation");
}

struct UnitPass {
  double loglik = 0.0;
  std::vector<Vector> filtered;  // posterior after each observation
  std::vector<Vector> eta_hat;   // shifted emission densities
  std::vector<double> c;         // shifted per-step normalizers
};

UnitPass forward_pass(const RegimeModel& m, const Vector& xi0,
                      const std::vector<double>& xs) {
  const int n = m.n();
  const int T = static_cast<int>(xs.size());
  UnitPass out;
  out.filtered.reserve(T);
  out.eta_hat.reserve(T);
  out.c.reserve(T);
  Vector pred = m.pi.transpose() * xi0;
  for (int t = 0; t < T; ++t) {
    Vector logeta(n);
    for (int s = 0; s < n; ++s) {
      const double z = (xs[t] - m.mu(s)) / m.sigma(s);
      logeta(s) = -kHalfLog2Pi - std::log(m.sigma(s)) - 0.5 * z * z;
    }
    // shift against the best reachable state so the update never underflows
    double shift = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s)
      if (pred(s) > 0.0) shift = std::max(shift, logeta(s));
    Vector ehat = (logeta.array() - shift).exp();
    const Vector joint = pred.cwiseProduct(ehat);
    const double c = joint.sum();
    if (!(c > 0.0))
      throw NumericalError("regime filter: lost all probability mass at observation " +
                           std::to_string(t));
    out.loglik += shift + std::log(c);
    out.filtered.push_back(joint / c);
    out.eta_hat.push_back(std::move(ehat));
    out.c.push_back(c);
    pred = m.pi.transpose() * out.filtered.back();
  }
  return out;
}

// Smoothed responsibilities and expected transition counts for one unit,
// including the step out of the (stationary) initial state.
void accumulate_unit(const RegimeModel& m, const Vector& xi0,
                     const UnitPass& fp, Matrix& trans, std::vector<Vector>& gammas) {
  const int T = static_cast<int>(fp.filtered.size());
  std::vector<Vector> beta(T);
  beta[T - 1] = Vector::Ones(m.n());
  for (int t = T - 2; t >= 0; --t)
    beta[t] = (m.pi * fp.eta_hat[t + 1].cwiseProduct(beta[t + 1])) / fp.c[t + 1];
  for (int t = 0; t < T; ++t) {
    Vector g = fp.filtered[t].cwiseProduct(beta[t]);
    gammas.push_back(g / g.sum());
  }
  for (int t = -1; t + 1 < T; ++t) {
    const Vector& a = t < 0 ? xi0 : fp.filtered[t];
    const Vector w = fp.eta_hat[t + 1].cwiseProduct(beta[t + 1]) / fp.c[t + 1];
    Matrix pair = (a * w.transpose()).cwiseProduct(m.pi);
    const double z = pair.sum();
    if (z > 0.0) trans += pair / z;
  }
}

struct EmRun {
  RegimeModel model;
  double loglik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  std::vector<double> trace;
};

EmRun run_em(const std::vector<std::vector<double>>& units, RegimeModel model,
             const EmOptions& opt) {
  const int n = model.n();
  EmRun run;
  double prev_ll = -std::numeric_limits<double>::infinity();
  RegimeModel prev_model = model;
  for (int it = 1; it <= opt.max_iter; ++it) {
    run.iterations = it;
    Vector xi0 = stationary_distribution(model.pi);

    double ll = 0.0;
    Matrix trans = Matrix::Zero(n, n);
    std::vector<Vector> gammas;
    for (const auto& xs : units) {
      const UnitPass fp = forward_pass(model, xi0, xs);
      ll += fp.loglik;
      accumulate_unit(model, xi0, fp, trans, gammas);
    }

    if (ll + 1e-10 < prev_ll) {
      // the count-based transition update is not an exact M-step for a
      // stationary-initialized chain; back out rather than accept a drop
      model = prev_model;
      run.converged = true;
      break;
    }
    run.trace.push_back(ll);
    run.loglik = ll;
    run.model = model;
    const bool small_gain = std::isfinite(prev_ll) && ll - prev_ll < opt.tol;
    prev_ll = ll;
    prev_model = model;
    if (small_gain) {
      run.converged = true;
      break;
    }

    Vector mass = Vector::Zero(n), mx = Vector::Zero(n), mxx = Vector::Zero(n);
    size_t idx = 0;
    for (const auto& xs : units)
      for (double x : xs) {
        const Vector& g = gammas[idx++];
        mass += g;
        mx += g * x;
        mxx += g * x * x;
      }
    if (mass.minCoeff() < 1e-6) {
      run.degenerate = true;
      break;
    }
    RegimeModel next = model;
    bool collapsed = false;
    for (int s = 0; s < n; ++s) {
      next.mu(s) = mx(s) / mass(s);
      const double var = mxx(s) / mass(s) - next.mu(s) * next.mu(s);
      if (!(var > 1e-16)) {
        collapsed = true;
        break;
      }
      next.sigma(s) = std::sqrt(var);
    }
    if (collapsed) {
      run.degenerate = true;
      break;
    }
    for (int s = 0; s < n; ++s) {
      const double row = trans.row(s).sum();
      if (!(row > 0.0)) {
        collapsed = true;
        break;
      }
      next.pi.row(s) = trans.row(s) / row;
    }
    if (collapsed) {
      run.degenerate = true;
      break;
    }
    model = next;
  }
  return run;
}

RegimeModel quantile_init(const std::vector<double>& all, int n) {
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double x : sorted) mean += x;
  mean /= static_cast<double>(sorted.size());
  double var = 0.0;
  for (double x : sorted) var += (x - mean) * (x - mean);
  var /= static_cast<double>(sorted.size());
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12))
    throw ValidationError("em_fit: observations are numerically constant; no scale to fit");
  RegimeModel m;
  m.mu.resize(n);
  m.sigma.resize(n);
  for (int s = 0; s < n; ++s) {
    const double q = static_cast<double>(s + 1) / (n + 1);
    const size_t at = std::min(sorted.size() - 1,
                               static_cast<size_t>(q * static_cast<double>(sorted.size())));
    m.mu(s) = sorted[at];
    m.sigma(s) = sd;
  }
  m.pi = Matrix::Constant(n, n, 0.2 / n) + 0.8 * Matrix::Identity(n, n);
  return m;
}

}  // namespace

void RegimeModel::validate() const {
  const int N = n();
  if (N < 1) throw ValidationError("regime model: need at least one state");
  require_square(pi, "regime transition matrix");
  if (static_cast<int>(pi.rows()) != N)
    throw ValidationError("regime model: transition matrix size does not match the state count");
  require_nonnegative(pi, "regime transition matrix");
  for (int i = 0; i < N; ++i)
    if (std::abs(pi.row(i).sum() - 1.0) > 1e-12)
      throw ValidationError("regime model: transition row " + std::to_string(i) +
                            " does not sum to 1");
  if (!is_irreducible(pi))
    throw ValidationError("regime model: transition matrix is not irreducible");
  if (sigma.size() != N || mu.size() != N)
    throw ValidationError("regime model: parameter vectors have mismatched lengths");
  for (int s = 0; s < N; ++s) {
    if (!std::isfinite(mu(s)))
      throw ValidationError("regime model: non-finite mean in state " + std::to_string(s));
    if (!(sigma(s) > 0.0) || !std::isfinite(sigma(s)))
      throw ValidationError("regime model: sd must be positive in state " + std::to_string(s));
  }
}

FilterResult hamilton_filter(const RegimeModel& model, const std::vector<double>& series) {
  model.validate();
  check_series(series);
  UnitPass fp = forward_pass(model, stationary_distribution(model.pi), series);
  FilterResult out;
  out.loglik = fp.loglik;
  out.filtered = std::move(fp.filtered);
  return out;
}

FilterResult hamilton_filter(const RegimeModel& model,
                             const std::vector<std::vector<double>>& units) {
  model.validate();
  if (units.empty()) throw ValidationError("regime filter: empty panel");
  const Vector xi0 = stationary_distribution(model.pi);
  FilterResult out;
  for (const auto& xs : units) {
    check_series(xs);
    UnitPass fp = forward_pass(model, xi0, xs);
    out.loglik += fp.loglik;
    for (auto& v : fp.filtered) out.filtered.push_back(std::move(v));
  }
  return out;
}

FitResult em_fit(const std::vector<std::vector<double>>& units, int n_states,
                 EmOptions opt) {
  if (n_states < 1) throw ValidationError("em_fit: need at least one state");
  if (units.empty()) throw ValidationError("em_fit: empty panel");
  std::vector<double> all;
  for (const auto& xs : units) {
    check_series(xs);
    all.insert(all.end(), xs.begin(), xs.end());
  }
  if (static_cast<int64_t>(all.size()) < 10LL * n_states)
    throw ValidationError("em_fit: need at least " + std::to_string(10 * n_states) +
                          " observations for " + std::to_string(n_states) +
                          " states, got " + std::to_string(all.size()));

  const RegimeModel base = quantile_init(all, n_states);
  double pooled_sd = base.sigma(0);

  EmRun best;
  bool degenerate_any = false;
  const int restarts = std::max(1, opt.restarts);
  for (int r = 0; r < restarts; ++r) {
    RegimeModel init = base;
    if (r > 0) {
      CounterRng rng(opt.seed, static_cast<uint64_t>(r));
      for (int s = 0; s < n_states; ++s) {
        init.mu(s) += 0.5 * pooled_sd * rng.next_normal();
        init.sigma(s) *= std::exp(0.3 * rng.next_normal());
      }
    }
    EmRun run = run_em(units, init, opt);
    degenerate_any = degenerate_any || run.degenerate;
    if (run.loglik > best.loglik) best = std::move(run);
  }
  if (!std::isfinite(best.loglik))
    throw NumericalError("em_fit: every restart collapsed before producing a fit");

  FitResult out;
  out.model = best.model;
  const FilterResult fr = hamilton_filter(best.model, units);
  out.loglik = fr.loglik;
  out.filtered = fr.filtered;
  out.iterations = best.iterations;
  out.converged = best.converged;
  out.degenerate_restart = degenerate_any;
  out.loglik_trace = std::move(best.trace);
  return out;
}

double implied_exponent(const RegimeModel& model, double p) {
  model.validate();
  if (!(p > 0.0 && p < 1.0))
    throw ValidationError("implied_exponent: stopping probability must lie in (0,1)");
  const int N = model.n();
  std::vector<IncrementDist> by_state;
  by_state.reserve(N);
  for (int s = 0; s < N; ++s)
    by_state.push_back(LognormalGrowth{model.mu(s), model.sigma(s)});
  const ProcessSpec spec =
      current_state_spec(model.pi, by_state, Vector::Constant(N, 1.0 - p));
  return solve_exponent(spec, Side::Upper);
}

}  // namespace stoptail

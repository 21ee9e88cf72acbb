#include "stoptail/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "stoptail/errors.hpp"
#include "stoptail/rng.hpp"

namespace stoptail {

namespace {

void run_paths(const ProcessSpec& spec, const SimConfig& cfg,
               const std::vector<double>& pi_rows, const std::vector<double>& w0,
               int64_t lo, int64_t hi, SimResult& out) {
  const int n = spec.n_states;
  for (int64_t pid = lo; pid < hi; ++pid) {
    CounterRng rng(cfg.seed, static_cast<uint64_t>(pid));
    const double s0 = cfg.s0.kind == InitialSize::Kind::Constant
                          ? cfg.s0.constant
                          : std::exp(cfg.s0.log_mean + cfg.s0.log_sd * rng.next_normal());
    int cur = rng.next_discrete(w0.data(), n);
    double w = 0.0;
    int64_t t = 0;
    bool stopped = false;
    while (t < cfg.max_steps) {
      const int nxt = rng.next_discrete(&pi_rows[static_cast<size_t>(cur) * n], n);
      w += sample(spec.dists[cur][nxt], rng);
      ++t;
      const bool survive = rng.next_double() < spec.v(cur, nxt);
      cur = nxt;
      if (!survive) {
        stopped = true;
        break;
      }
    }
    out.w[pid] = w;
    out.size[pid] = s0 * std::exp(w);
    out.steps[pid] = static_cast<int32_t>(t);
    out.final_state[pid] = cur;
    out.censored[pid] = stopped ? 0 : 1;
  }
}

}  // namespace

SimResult simulate_stopped(const ProcessSpec& spec, const SimConfig& cfg) {
  if (cfg.paths < 1) throw ValidationError("simulate_stopped: need at least one path");
  if (cfg.max_steps < 1) throw ValidationError("simulate_stopped: max_steps must be positive");
  if (cfg.s0.kind == InitialSize::Kind::Constant && !(cfg.s0.constant > 0.0))
    throw ValidationError("simulate_stopped: initial size must be positive");
  if (cfg.s0.kind == InitialSize::Kind::Lognormal && !(cfg.s0.log_sd >= 0.0))
    throw ValidationError("simulate_stopped: lognormal log-sd must be nonnegative");

  const int n = spec.n_states;
  std::vector<double> pi_rows(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pi_rows[static_cast<size_t>(i) * n + j] = spec.pi(i, j);
  std::vector<double> w0(n);
  for (int i = 0; i < n; ++i) w0[i] = spec.omega0(i);

  SimResult res;
  res.w.resize(cfg.paths);
  res.size.resize(cfg.paths);
  res.steps.resize(cfg.paths);
  res.final_state.resize(cfg.paths);
  res.censored.assign(cfg.paths, 0);

  int nthreads = cfg.threads > 0 ? cfg.threads
                                 : static_cast<int>(std::thread::hardware_concurrency());
  if (nthreads < 1) nthreads = 1;
  nthreads = static_cast<int>(std::min<int64_t>(nthreads, cfg.paths));

  if (nthreads == 1) {
    run_paths(spec, cfg, pi_rows, w0, 0, cfg.paths, res);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::string> failures(nthreads);
    const int64_t chunk = (cfg.paths + nthreads - 1) / nthreads;
    for (int tid = 0; tid < nthreads; ++tid) {
      const int64_t lo = tid * chunk;
      const int64_t hi = std::min<int64_t>(lo + chunk, cfg.paths);
      workers.emplace_back([&, tid, lo, hi] {
        try {
          run_paths(spec, cfg, pi_rows, w0, lo, hi, res);
        } catch (const std::exception& e) {
          failures[tid] = e.what();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (const auto& msg : failures)
      if (!msg.empty()) throw NumericalError("simulate_stopped: worker failed: " + msg);
  }

  res.censored_count = 0;
  for (uint8_t c : res.censored) res.censored_count += c;
  if (res.censored_count * 1000 > cfg.paths) {
    std::ostringstream os;
    os << "warning: " << 100.0 * static_cast<double>(res.censored_count) /
                             static_cast<double>(cfg.paths)
       << "% of paths hit the step cap of " << cfg.max_steps
       << " before stopping; tail statistics are biased downward";
    res.warning = os.str();
  }
  return res;
}

TailEstimate hill_estimate(const std::vector<double>& sample, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
    throw ValidationError("hill_estimate: tail fraction must lie in (0,1)");
  std::vector<double> pos;
  pos.reserve(sample.size());
  for (double x : sample)
    if (std::isfinite(x) && x > 0.0) pos.push_back(x);
  const int64_t n = static_cast<int64_t>(pos.size());
  if (n < 100)
    throw ValidationError("hill_estimate: need at least 100 positive observations, got " +
                          std::to_string(n));
  int64_t k = static_cast<int64_t>(std::ceil(tail_fraction * static_cast<double>(n)));
  if (k < 10) throw ValidationError("hill_estimate: fewer than 10 tail observations");
  if (k + 1 > n) k = n - 1;
  std::sort(pos.begin(), pos.end(), std::greater<>());
  const double xk1 = pos[k];
  double acc = 0.0;
  for (int64_t i = 0; i < k; ++i) acc += std::log(pos[i] / xk1);
  if (!(acc > 0.0))
    throw ValidationError("hill_estimate: tied tail values give a zero denominator");
  TailEstimate est;
  est.k = k;
  est.threshold = xk1;
  est.alpha_hat = static_cast<double>(k) / acc;
  est.std_error = est.alpha_hat / std::sqrt(static_cast<double>(k));
  return est;
}

TailCurve empirical_tail_curve(const std::vector<double>& sample, double alpha,
                               const std::vector<double>& grid) {
  if (sample.empty()) throw ValidationError("empirical_tail_curve: empty sample");
  std::vector<double> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  TailCurve curve;
  for (double w : grid) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), w);
    const int64_t count = sorted.end() - it;
    if (count == 0) {
      ++curve.dropped;
      continue;
    }
    const double p = static_cast<double>(count) / n;
    TailCurvePoint pt;
    pt.w = w;
    pt.count = count;
    pt.scaled = std::exp(alpha * w) * p;
    pt.slope = w != 0.0 ? std::log(p) / w : std::numeric_limits<double>::quiet_NaN();
    curve.rows.push_back(pt);
  }
  return curve;
}

double tail_slope(const std::vector<double>& sample, const std::vector<double>& grid) {
  const TailCurve curve = empirical_tail_curve(sample, 0.0, grid);
  if (curve.rows.size() < 2)
    throw ValidationError("tail_slope: need at least two grid points with a nonempty tail");
  // With alpha = 0 the scaled column is the raw tail probability.
  double wbar = 0.0, ybar = 0.0;
  for (const auto& pt : curve.rows) {
    wbar += pt.w;
    ybar += std::log(pt.scaled);
  }
  wbar /= static_cast<double>(curve.rows.size());
  ybar /= static_cast<double>(curve.rows.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& pt : curve.rows) {
    sxy += (pt.w - wbar) * (std::log(pt.scaled) - ybar);
    sxx += (pt.w - wbar) * (pt.w - wbar);
  }
  if (!(sxx > 0.0)) throw ValidationError("tail_slope: grid points coincide");
  return sxy / sxx;
}

}  // namespace stoptail

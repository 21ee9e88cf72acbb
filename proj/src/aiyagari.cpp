#include "stoptail/aiyagari.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "stoptail/errors.hpp"
#include "stoptail/rng.hpp"
#include "stoptail/solver.hpp"

namespace stoptail {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

Vector savings_rates(const AiyagariEconomy& eco, const Vector& b) {
  const double beta = eco.disc_beta;
  const double eps = eco.eps_eis;
  Vector srate(b.size());
  for (int s = 0; s < b.size(); ++s) {
    srate(s) = 1.0 - std::pow(1.0 - beta, eps) * std::pow(b(s), 1.0 - eps);
    if (!(srate(s) > 0.0))
      throw NumericalError("economy: consumption would exceed wealth in state " +
                           std::to_string(s));
  }
  return srate;
}

// beta * rho(P diag R^{1-gamma})^{(1-1/eps)/(1-gamma)}; below 1 iff the
// optimization problem has a solution. The exponent vanishes at eps = 1, so
// that branch always passes.
double value_condition(const AiyagariEconomy& eco, const Vector& R) {
  const double g = eco.gamma_rra;
  const Matrix pd = eco.P * Vector(R.array().pow(1.0 - g)).asDiagonal();
  const double rho = spectral_radius(pd);
  return eco.disc_beta * std::pow(rho, (1.0 - 1.0 / eco.eps_eis) / (1.0 - g));
}

// Assumes the value condition already holds.
Vector solve_b(const AiyagariEconomy& eco, const Vector& R) {
  const int n = static_cast<int>(R.size());
  const double beta = eco.disc_beta;
  const double eps = eco.eps_eis;
  const double g = eco.gamma_rra;

  if (eps == 1.0) {
    // log b is a fixed point of a sup-norm contraction with modulus beta
    const double logc = (1.0 - beta) * std::log(1.0 - beta) + beta * std::log(beta);
    const Vector logr = R.array().log();
    Vector logb = Vector::Zero(n);
    for (int it = 0; it < 10000; ++it) {
      Vector next(n);
      for (int s = 0; s < n; ++s) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j)
          if (eco.P(s, j) > 0.0) mx = std::max(mx, (1.0 - g) * (logr(j) + logb(j)));
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
          if (eco.P(s, j) > 0.0)
            acc += eco.P(s, j) * std::exp((1.0 - g) * (logr(j) + logb(j)) - mx);
        next(s) = logc + beta / (1.0 - g) * (mx + std::log(acc));
      }
      const double step = (next - logb).cwiseAbs().maxCoeff();
      logb = next;
      if (step < 1e-13) return logb.array().exp();
    }
    throw NumericalError("value recursion did not converge in 10000 iterations");
  }

  // x = b^{1-gamma}, damped fixed point
  const Vector rpow = R.array().pow(1.0 - g);
  const double ppow = (eps - 1.0) / (1.0 - g);
  const double qpow = (1.0 - g) / (eps - 1.0);
  const double cbase = std::pow(1.0 - beta, eps);
  const double bbase = std::pow(beta, eps);
  Vector x = Vector::Ones(n);
  for (int it = 0; it < 10000; ++it) {
    const Vector pdx = eco.P * rpow.cwiseProduct(x);
    Vector tx(n);
    for (int s = 0; s < n; ++s) {
      if (!(pdx(s) > 0.0))
        throw NumericalError("value recursion left the positive cone");
      tx(s) = std::pow(cbase + bbase * std::pow(pdx(s), ppow), qpow);
    }
    const Vector next = 0.5 * x + 0.5 * tx;
    const double step = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (step < 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff()))
      return x.array().pow(1.0 / (1.0 - g));
  }
  throw NumericalError("value recursion did not converge in 10000 iterations");
}

struct PhiEval {
  enum class Status { Ok, ValueCondition, AggregateCondition };
  Status status = Status::Ok;
  double phi = 0.0;
  double diagnostic = 0.0;  // offending spectral quantity when not Ok
};

PhiEval eval_phi(const AiyagariEconomy& eco, double omega) {
  PhiEval out;
  const Vector R = returns(eco, omega);
  const double cond = value_condition(eco, R);
  if (!(cond < 1.0)) {
    out.status = PhiEval::Status::ValueCondition;
    out.diagnostic = cond;
    return out;
  }
  const Vector b = solve_b(eco, R);
  const Vector gk = R.cwiseProduct(savings_rates(eco, b));
  const Matrix m = (1.0 - eco.p_die) * eco.P.transpose() * gk.asDiagonal();
  const double rho = spectral_radius(m);
  if (!(rho < 1.0)) {
    out.status = PhiEval::Status::AggregateCondition;
    out.diagnostic = rho;
    return out;
  }
  const int n = eco.n_states;
  const Vector u = (Matrix::Identity(n, n) - m).partialPivLu().solve(eco.pi0);
  out.phi = eco.p_die * eco.kappa * u.sum();
  return out;
}

[[noreturn]] void throw_no_equilibrium(double omega, const PhiEval& e) {
  throw NoSolutionError(
      "no equilibrium: the preference spectral condition fails at omega = " + fmt(omega) +
      " (beta-discounted spectral term = " + fmt(e.diagnostic) +
      ") before market clearing crosses 1");
}

}  // namespace

void AiyagariEconomy::finalize() {
  n_states = static_cast<int>(A.size());
  if (n_states < 1) throw ValidationError("economy: need at least one productivity state");
  require_square(P, "economy transition matrix");
  if (P.rows() != n_states)
    throw ValidationError("economy: transition matrix size does not match the productivity vector");
  require_nonnegative(P, "economy transition matrix");
  for (int i = 0; i < n_states; ++i)
    if (std::abs(P.row(i).sum() - 1.0) > 1e-12)
      throw ValidationError("economy: transition row " + std::to_string(i) + " sums to " +
                            fmt(P.row(i).sum()) + ", not 1");
  if (!is_irreducible(P))
    throw ValidationError("economy: transition matrix is not irreducible");
  for (int s = 0; s < n_states; ++s)
    if (!(A(s) > 0.0))
      throw ValidationError("economy: productivity must be positive in state " +
                            std::to_string(s));
  if (!(alpha_cap > 0.0 && alpha_cap < 1.0))
    throw ValidationError("economy: capital share must lie in (0,1)");
  if (!(delta >= 0.0 && delta <= 1.0))
    throw ValidationError("economy: depreciation must lie in [0,1]");
  if (!(disc_beta > 0.0 && disc_beta < 1.0))
    throw ValidationError("economy: discount factor must lie in (0,1)");
  if (!(eps_eis > 0.0))
    throw ValidationError("economy: elasticity of substitution must be positive");
  if (!(gamma_rra > 0.0))
    throw ValidationError("economy: risk aversion must be positive");
  if (gamma_rra == 1.0)
    throw ValidationError(
        "economy: risk aversion exactly 1 is not supported; use a nearby value");
  if (!(p_die > 0.0 && p_die < 1.0))
    throw ValidationError("economy: bankruptcy probability must lie in (0,1)");
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw ValidationError("economy: capital recovery rate must lie in (0,1]");
  if (pi0.size() == 0) {
    pi0 = stationary_distribution(P);
  } else {
    if (pi0.size() != n_states)
      throw ValidationError("economy: newborn distribution has the wrong length");
    for (int s = 0; s < n_states; ++s)
      if (pi0(s) < 0.0)
        throw ValidationError("economy: newborn distribution has a negative entry");
    if (std::abs(pi0.sum() - 1.0) > 1e-12)
      throw ValidationError("economy: newborn distribution sums to " + fmt(pi0.sum()) +
                            ", not 1");
  }
}

Vector returns(const AiyagariEconomy& eco, double omega) {
  if (!(omega > 0.0)) throw ValidationError("returns: wage must be positive");
  const double a = eco.alpha_cap;
  const double coef =
      a * std::pow(1.0 - a, 1.0 / a - 1.0) * std::pow(omega, 1.0 - 1.0 / a);
  return (coef * eco.A.array().pow(1.0 / a) + (1.0 - eco.delta)).matrix();
}

Vector value_coefficients(const AiyagariEconomy& eco, const Vector& R) {
  if (R.size() != eco.n_states)
    throw ValidationError("value_coefficients: returns vector has the wrong length");
  for (int s = 0; s < eco.n_states; ++s)
    if (!(R(s) > 0.0))
      throw ValidationError("value_coefficients: returns must be positive");
  const double cond = value_condition(eco, R);
  if (!(cond < 1.0))
    throw ValidationError(
        "value_coefficients: no solution exists, the discounted-return spectral term is " +
        fmt(cond) + " >= 1");
  return solve_b(eco, R);
}

double market_clearing(const AiyagariEconomy& eco, double omega) {
  const PhiEval e = eval_phi(eco, omega);
  if (e.status != PhiEval::Status::Ok)
    throw NoSolutionError("market clearing is undefined at omega = " + fmt(omega) +
                          " (spectral term " + fmt(e.diagnostic) + " >= 1)");
  return e.phi;
}

double equilibrium_wage(const AiyagariEconomy& eco) {
  // Upper bracket: a wage with phi < 1. phi(inf) < 1 always, so expanding up
  // terminates unless the preference condition closes the domain from above.
  double hi = 1.0;
  PhiEval ehi = eval_phi(eco, hi);
  int guard = 0;
  while (!(ehi.status == PhiEval::Status::Ok && ehi.phi < 1.0)) {
    if (ehi.status == PhiEval::Status::ValueCondition) throw_no_equilibrium(hi, ehi);
    hi *= 2.0;
    ehi = eval_phi(eco, hi);
    if (++guard > 200)
      throw NoSolutionError("market clearing stays above 1 out to omega = " + fmt(hi));
  }

  // Lower bracket: walk down until phi > 1 or the domain ends.
  double lo = hi / 2.0;
  bool have_lo = false;
  double bad = 0.0;
  PhiEval ebad;
  guard = 0;
  while (true) {
    const PhiEval e = eval_phi(eco, lo);
    if (e.status == PhiEval::Status::Ok && e.phi > 1.0) {
      have_lo = true;
      break;
    }
    if (e.status == PhiEval::Status::ValueCondition) throw_no_equilibrium(lo, e);
    if (e.status == PhiEval::Status::AggregateCondition) {
      bad = lo;
      ebad = e;
      break;
    }
    hi = lo;  // phi <= 1 here, so the crossing, if any, lies further down
    lo /= 2.0;
    if (++guard > 200)
      throw NoSolutionError("no lower bracket for market clearing down to omega = " +
                            fmt(lo));
  }
  if (!have_lo) {
    // The resolvent diverges at the domain edge, so just inside it phi > 1.
    double wbad = bad;
    double wok = hi;
    for (int i = 0; i < 200 && wok - wbad > 1e-9; ++i) {
      const double mid = 0.5 * (wbad + wok);
      const PhiEval e = eval_phi(eco, mid);
      if (e.status == PhiEval::Status::Ok) {
        wok = mid;
      } else {
        if (e.status == PhiEval::Status::ValueCondition) throw_no_equilibrium(mid, e);
        wbad = mid;
      }
    }
    lo = std::max(wok, wbad + 1e-8);
    const PhiEval e = eval_phi(eco, lo);
    if (!(e.status == PhiEval::Status::Ok && e.phi > 1.0))
      throw NoSolutionError(
          "no equilibrium: market clearing never exceeds 1 inside its domain (phi = " +
          fmt(e.phi) + " at omega = " + fmt(lo) + ")");
    have_lo = true;
  }

  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    const PhiEval e = eval_phi(eco, mid);
    if (e.status != PhiEval::Status::Ok) {
      lo = mid;  // out of domain means below the crossing
      continue;
    }
    if (std::abs(e.phi - 1.0) <= 1e-10) return mid;
    if (e.phi > 1.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  const double best = 0.5 * (lo + hi);
  const PhiEval e = eval_phi(eco, best);
  if (e.status == PhiEval::Status::Ok && std::abs(e.phi - 1.0) <= 1e-8) return best;
  throw NumericalError("market-clearing bisection stalled with phi - 1 = " +
                       fmt(e.phi - 1.0) + " at omega = " + fmt(best));
}

ProcessSpec wealth_process(const AiyagariEconomy& eco, const Matrix& gw) {
  const int n = eco.n_states;
  if (gw.rows() != n || gw.cols() != n)
    throw ValidationError("wealth_process: growth matrix has the wrong shape");
  ProcessSpec spec;
  spec.n_states = n;
  spec.pi = eco.P;
  spec.v = Matrix::Constant(n, n, 1.0 - eco.p_die);
  spec.dists.assign(n, std::vector<IncrementDist>(n, PointMass{0.0}));
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      if (!(gw(s, t) > 0.0))
        throw ValidationError("wealth_process: growth factors must be positive");
      spec.dists[s][t] = PointMass{std::log(gw(s, t))};
    }
  spec.omega0 = eco.pi0;
  spec.finalize();
  return spec;
}

double wealth_exponent(const AiyagariEconomy& eco, const AiyagariSolution& sol) {
  if (!(eco.kappa < 1.0))
    throw ValidationError(
        "wealth_exponent: full capital recovery (kappa = 1) pins the exponent at 1; "
        "need kappa < 1");
  const ProcessSpec spec = wealth_process(eco, sol.Gw);
  const double zeta = solve_exponent(spec, Side::Upper);
  if (!(zeta > 1.0))
    throw NumericalError("wealth exponent " + fmt(zeta) +
                         " is not above 1; inputs are outside the supported regime");
  return zeta;
}

AiyagariSolution solve_economy(const AiyagariEconomy& eco) {
  AiyagariSolution sol;
  sol.omega_star = equilibrium_wage(eco);
  sol.R = returns(eco, sol.omega_star);
  sol.b = value_coefficients(eco, sol.R);
  const Vector srate = savings_rates(eco, sol.b);
  sol.Gk = sol.R.cwiseProduct(srate);
  const int n = eco.n_states;
  sol.Gw.resize(n, n);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) sol.Gw(s, t) = sol.R(t) * srate(s);
  if (!(sol.Gk.maxCoeff() > 1.0))
    throw NumericalError(
        "all capital growth rates sit at or below 1 at the equilibrium wage; the "
        "stationary distribution has no Pareto tail");
  sol.zeta = wealth_exponent(eco, sol);
  return sol;
}

namespace {

void run_agents(const AiyagariEconomy& eco, const std::vector<double>& p_rows,
                const std::vector<double>& pi0, const std::vector<double>& log_gk,
                const Vector& R, int64_t periods, uint64_t seed, int64_t lo, int64_t hi,
                EconomySim& out) {
  const int n = eco.n_states;
  for (int64_t a = lo; a < hi; ++a) {
    CounterRng rng(seed, static_cast<uint64_t>(a));
    double logk = 0.0;
    int s = rng.next_discrete(pi0.data(), n);
    for (int64_t t = 0; t < periods; ++t) {
      if (rng.next_double() < eco.p_die) {
        logk = 0.0;
        s = rng.next_discrete(pi0.data(), n);
      } else {
        logk += log_gk[s];
        s = rng.next_discrete(&p_rows[static_cast<size_t>(s) * n], n);
      }
    }
    out.wealth[a] = R(s) * std::exp(logk);
    out.state[a] = s;
  }
}

}  // namespace

EconomySim simulate_economy(const AiyagariEconomy& eco, const AiyagariSolution& sol,
                            int64_t agents, int64_t periods, uint64_t seed, int threads) {
  if (agents < 1) throw ValidationError("simulate_economy: need at least one agent");
  if (periods < 1) throw ValidationError("simulate_economy: need at least one period");
  const int n = eco.n_states;
  std::vector<double> p_rows(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p_rows[static_cast<size_t>(i) * n + j] = eco.P(i, j);
  std::vector<double> pi0(n);
  for (int i = 0; i < n; ++i) pi0[i] = eco.pi0(i);
  std::vector<double> log_gk(n);
  for (int i = 0; i < n; ++i) log_gk[i] = std::log(sol.Gk(i));

  EconomySim out;
  out.wealth.resize(agents);
  out.state.resize(agents);

  int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (nthreads < 1) nthreads = 1;
  nthreads = static_cast<int>(std::min<int64_t>(nthreads, agents));
  if (nthreads == 1) {
    run_agents(eco, p_rows, pi0, log_gk, sol.R, periods, seed, 0, agents, out);
  } else {
    std::vector<std::thread> workers;
    const int64_t chunk = (agents + nthreads - 1) / nthreads;
    for (int tid = 0; tid < nthreads; ++tid) {
      const int64_t a0 = tid * chunk;
      const int64_t a1 = std::min<int64_t>(a0 + chunk, agents);
      workers.emplace_back([&, a0, a1] {
        run_agents(eco, p_rows, pi0, log_gk, sol.R, periods, seed, a0, a1, out);
      });
    }
    for (auto& t : workers) t.join();
  }

  std::vector<double> upper;
  for (double w : out.wealth)
    if (w > 1.0) upper.push_back(w);
  out.upper_tail_count = static_cast<int64_t>(upper.size());
  try {
    out.hill = hill_estimate(upper, 0.10);
  } catch (const ValidationError& e) {
    out.note = e.what();
  }
  return out;
}

}  // namespace stoptail

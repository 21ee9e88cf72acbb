#include "stoptail/solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <variant>

#include "stoptail/errors.hpp"

namespace stoptail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogTol = 1e-12;
constexpr double kBracketCap = 1e8;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

double solve_exponent(const ProcessSpec& spec, Side side) {
  const double sign = side == Side::Upper ? 1.0 : -1.0;
  const char* name = side == Side::Upper ? "upper" : "lower";
  const auto g = [&](double t) { return log_lambda(spec, sign * t); };

  const MgfDomain dom = mgf_domain(spec);
  const double edge = side == Side::Upper ? dom.hi : -dom.lo;
  const bool bounded = std::isfinite(edge);
  const double cap = bounded ? edge - 1e-8 : kBracketCap;
  if (cap <= 0.0)
    throw NoSolutionError(std::string("no ") + name +
                          " exponent: the MGF domain leaves no room on this side");

  double t_lo = 0.0;
  double t_hi = std::min(0.1, cap);
  double g_hi = g(t_hi);
  while (g_hi < 0.0) {
    if (t_hi >= cap) {
      if (bounded)
        throw NoSolutionError(std::string("no ") + name + " exponent: the MGF domain ends at |s| = " +
                              fmt(edge) + " with log lambda = " + fmt(g_hi) +
                              " (lambda never reaches 1 inside it)");
      throw NoSolutionError(std::string("no ") + name + " exponent: log lambda = " + fmt(g_hi) +
                            " at |s| = " + fmt(cap) + "; lambda stays below 1");
    }
    t_lo = t_hi;
    t_hi = std::min(2.0 * t_hi, cap);
    g_hi = g(t_hi);
  }

  // Convexity of log lambda makes Newton from the right endpoint monotone;
  // the bracket guard catches any stray step.
  double t = t_hi;
  double gv = g_hi;
  for (int iter = 0; iter < 200; ++iter) {
    if (std::abs(gv) <= kLogTol) return t;
    if (gv > 0.0)
      t_hi = t;
    else
      t_lo = t;
    if (t_hi - t_lo <= 1e-15 * std::max(1.0, t_hi)) break;
    const double d = sign * log_lambda_deriv(spec, sign * t);
    double t_next = d > 0.0 ? t - gv / d : t_lo;
    if (!(t_next > t_lo && t_next < t_hi)) t_next = 0.5 * (t_lo + t_hi);
    t = t_next;
    gv = g(t);
  }
  if (std::abs(gv) <= 1e-10) return t;
  throw NumericalError(std::string("solve_exponent(") + name +
                       "): root refinement stalled with |log lambda| = " + fmt(std::abs(gv)));
}

TailConstants tail_constants(const ProcessSpec& spec, double alpha) {
  const PerronPair p = weighted_perron(spec, alpha);

  // Mass leaving through the stopping branch; every transition with positive
  // probability contributes, including pure-stopping edges outside the
  // survival graph.
  double stop_term = 0.0;
  for (int i = 0; i < spec.n_states; ++i)
    for (int j = 0; j < spec.n_states; ++j)
      if (spec.pi(i, j) > kStructuralZero)
        stop_term +=
            p.left(i) * (1.0 - spec.v(i, j)) * spec.pi(i, j) * mgf(spec.dists[i][j], alpha);

  double denom = 0.0;
  for (int i = 0; i < spec.n_states; ++i)
    for (int j = 0; j < spec.n_states; ++j)
      if (spec.active(i, j))
        denom += p.left(i) * spec.v(i, j) * spec.pi(i, j) * mgf_deriv(spec.dists[i][j], alpha) *
                 p.right(j);
  if (!(denom > 0.0))
    throw NumericalError("tail_constants: nonpositive transform slope at alpha");

  TailConstants out;
  out.c = spec.omega0.dot(p.right) * stop_term / denom;
  out.b = lattice_structure(spec).b_value();
  return out;
}

TailBounds tauberian_bounds(const TauberianInputs& inp) {
  if (!(inp.a > 0.0) || !(inp.alpha > 0.0) || !(inp.b > 0.0))
    throw ValidationError("tauberian_bounds: a, alpha, b must all be positive");
  if (std::isinf(inp.b)) {
    const double flat = inp.a / inp.alpha;
    return {flat, flat};
  }
  const double r = 2.0 * std::numbers::pi / inp.b;
  const double u = r * inp.alpha;
  const double scale = r * inp.a;
  return {scale / std::expm1(u), scale / (-std::expm1(-u))};
}

double pareto_prefactor(const ProcessSpec& spec, double alpha, double s0_moment) {
  if (!(alpha > 0.0) || !(s0_moment > 0.0))
    throw ValidationError("pareto_prefactor: alpha and the initial-size moment must be positive");
  if (lattice_structure(spec).lattice)
    throw ValidationError(
        "pareto_prefactor: lattice increments have no Pareto limit; use tauberian_bounds");
  return tail_constants(spec, alpha).c / alpha * s0_moment;
}

ExponentSolution solve_process(const ProcessSpec& spec) {
  ExponentSolution out;
  out.lattice = lattice_structure(spec);
  try {
    out.alpha = solve_exponent(spec, Side::Upper);
  } catch (const NoSolutionError& e) {
    out.upper_note = e.what();
  }
  try {
    out.beta_tail = solve_exponent(spec, Side::Lower);
  } catch (const NoSolutionError& e) {
    out.lower_note = e.what();
  }
  if (out.alpha) {
    const PerronPair p = weighted_perron(spec, *out.alpha);
    out.perron_x = p.right;
    out.perron_y = p.left;
    out.constants = tail_constants(spec, *out.alpha);
    out.bounds = tauberian_bounds({out.constants.c, out.constants.b, *out.alpha});
    if (!out.lattice.lattice) out.prefactor = out.constants.c / *out.alpha;
  }
  return out;
}

LaplaceLimitReport laplace_limit_check(const Matrix& pi, const Vector& a, const Vector& var,
                                       const std::vector<double>& p_grid) {
  require_square(pi, "pi");
  const int n = static_cast<int>(pi.rows());
  if (a.size() != n || var.size() != n)
    throw ValidationError("laplace_limit_check: a and var need one entry per state");
  if (var.size() > 0 && var.minCoeff() < 0.0)
    throw ValidationError("laplace_limit_check: variances must be nonnegative");
  if (p_grid.empty()) throw ValidationError("laplace_limit_check: empty p grid");

  const Vector pibar = stationary_distribution(pi);
  const double abar = pibar.dot(a);
  const double vbar = pibar.dot(var);

  LaplaceLimitReport rep;
  rep.p_grid = p_grid;
  if (vbar > 0.0) {
    rep.s_star = (-abar + std::sqrt(abar * abar + 2.0 * vbar)) / vbar;
  } else {
    if (!(abar > 0.0))
      throw ValidationError("laplace_limit_check: the degenerate family needs positive drift");
    rep.s_star = 1.0 / abar;
  }

  double p_min = kInf;
  for (double p : p_grid) {
    if (!(p > 0.0 && p < 1.0))
      throw ValidationError("laplace_limit_check: p must lie in (0,1)");
    std::vector<IncrementDist> by_state;
    by_state.reserve(n);
    for (int i = 0; i < n; ++i) {
      if (var(i) > 0.0)
        by_state.push_back(Gaussian{p * a(i), p * var(i)});
      else
        by_state.push_back(PointMass{p * a(i)});
    }
    const ProcessSpec spec = current_state_spec(pi, by_state, Vector::Constant(n, 1.0 - p));
    const double alpha_p = solve_exponent(spec, Side::Upper);
    rep.alpha.push_back(alpha_p);
    if (p < p_min) {
      p_min = p;
      rep.deviation = std::abs(alpha_p - rep.s_star);
    }
  }
  return rep;
}

namespace {

using cdouble = std::complex<double>;

cdouble base_log_mgf_c(const std::variant<Gaussian, FiniteDiscrete>& base, cdouble u) {
  if (const auto* gz = std::get_if<Gaussian>(&base)) return 0.5 * gz->variance * u * u;
  const auto& fd = std::get<FiniteDiscrete>(base);
  cdouble acc = 0.0;
  for (size_t k = 0; k < fd.values.size(); ++k) acc += fd.probs[k] * std::exp(u * fd.values[k]);
  return std::log(acc);
}

cdouble log_mgf_c(const IncrementDist& dist, cdouble s) {
  return std::visit(
      [&](const auto& v) -> cdouble {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return s * v.value;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return v.mean * s + 0.5 * v.variance * s * s;
        } else if constexpr (std::is_same_v<T, LognormalGrowth>) {
          return v.mu * s + 0.5 * v.sigma * v.sigma * s * s;
        } else if constexpr (std::is_same_v<T, FiniteDiscrete>) {
          cdouble acc = 0.0;
          for (size_t k = 0; k < v.values.size(); ++k)
            acc += v.probs[k] * std::exp(s * v.values[k]);
          return std::log(acc);
        } else {
          return v.location * s + base_log_mgf_c(v.base, v.scale * s);
        }
      },
      dist);
}

}  // namespace

std::vector<std::pair<double, double>> pencil_axis_scan(const ProcessSpec& spec, double alpha,
                                                        double t_max, int n_points) {
  if (!(t_max > 0.0) || n_points < 2)
    throw ValidationError("pencil_axis_scan: need t_max > 0 and at least two grid points");
  std::vector<std::pair<double, double>> out;
  out.reserve(n_points);
  const int n = spec.n_states;
  for (int k = 0; k < n_points; ++k) {
    const double t = t_max * k / (n_points - 1);
    const cdouble s(alpha, t);
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (spec.active(i, j))
          a(i, j) -= spec.v(i, j) * spec.pi(i, j) * std::exp(log_mgf_c(spec.dists[i][j], s));
    out.emplace_back(t, std::abs(a.determinant()));
  }
  return out;
}

}  // namespace stoptail

// Command-line front end. All numerics live in the library; this file only
// parses inputs, dispatches, and renders reports (text, JSON, CSV, SVG).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stoptail/aiyagari.hpp"
#include "stoptail/compstat.hpp"
#include "stoptail/errors.hpp"
#include "stoptail/io.hpp"
#include "stoptail/markov.hpp"
#include "stoptail/process.hpp"
#include "stoptail/regime.hpp"
#include "stoptail/sim.hpp"
#include "stoptail/solver.hpp"

namespace {

using namespace stoptail;

// ---------- rendering helpers ----------

std::string jesc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char b[8];
          std::snprintf(b, sizeof b, "\\u%04x", c);
          out += b;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// Non-finite doubles have no JSON literal; emit null.
std::string jnum(double x) { return std::isfinite(x) ? format_float(x) : "null"; }

struct JsonObj {
  std::string body;
  void raw(const std::string& k, const std::string& v) {
    if (!body.empty()) body += ", ";
    body += "\"" + jesc(k) + "\": " + v;
  }
  void num(const std::string& k, double x) { raw(k, jnum(x)); }
  void integer(const std::string& k, long long x) { raw(k, std::to_string(x)); }
  void boolean(const std::string& k, bool b) { raw(k, b ? "true" : "false"); }
  void str(const std::string& k, const std::string& s) { raw(k, "\"" + jesc(s) + "\""); }
  std::string done() const { return "{" + body + "}"; }
};

std::string jarray(const Vector& v) {
  std::string out = "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += jnum(v(i));
  }
  return out + "]";
}

std::string jmatrix(const Matrix& m) {
  std::string out = "[";
  for (int r = 0; r < m.rows(); ++r) {
    if (r) out += ", ";
    out += jarray(Vector(m.row(r)));
  }
  return out + "]";
}

std::string matrix_lines(const Matrix& m, const std::string& indent) {
  std::string out;
  for (int r = 0; r < m.rows(); ++r) {
    out += indent;
    for (int c = 0; c < m.cols(); ++c) {
      if (c) out += ' ';
      out += format_float(m(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ValidationError(path + ": cannot write");
  out << content;
}

// ---------- SVG ----------

struct Series {
  std::vector<double> x, y;
  std::string label;
};

std::string tick_label(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

std::string render_svg(const std::vector<Series>& series, const std::string& xlabel,
                       const std::string& ylabel, bool scatter) {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool any = false;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        any = true;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  if (!any) throw ValidationError("svg: nothing to plot");
  double dx = xmax - xmin, dy = ymax - ymin;
  if (dx <= 0) dx = std::max(1.0, std::abs(xmax));
  if (dy <= 0) dy = std::max(1.0, std::abs(ymax));
  xmin -= 0.05 * dx;
  xmax += 0.05 * dx;
  ymin -= 0.05 * dy;
  ymax += 0.05 * dy;

  const double W = 720, H = 480, L = 70, R = 24, T = 24, B = 54;
  auto X = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto Y = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
  // axes
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"#333\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    s << "<line x1=\"" << X(xv) << "\" y1=\"" << H - B << "\" x2=\"" << X(xv) << "\" y2=\""
      << H - B + 5 << "\" stroke=\"#333\"/>\n";
    s << "<text x=\"" << X(xv) << "\" y=\"" << H - B + 20 << "\" text-anchor=\"middle\">"
      << tick_label(xv) << "</text>\n";
    s << "<line x1=\"" << L - 5 << "\" y1=\"" << Y(yv) << "\" x2=\"" << L << "\" y2=\"" << Y(yv)
      << "\" stroke=\"#333\"/>\n";
    s << "<text x=\"" << L - 8 << "\" y=\"" << Y(yv) + 4 << "\" text-anchor=\"end\">"
      << tick_label(yv) << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << jesc(xlabel) << "</text>\n";
  s << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << jesc(ylabel) << "</text>\n";

  for (size_t k = 0; k < series.size(); ++k) {
    const char* color = colors[k % 6];
    const auto& sr = series[k];
    if (scatter) {
      for (size_t i = 0; i < sr.x.size(); ++i) {
        if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) continue;
        s << "<circle cx=\"" << X(sr.x[i]) << "\" cy=\"" << Y(sr.y[i])
          << "\" r=\"2\" fill=\"" << color << "\"/>\n";
      }
    } else {
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < sr.x.size(); ++i) {
        if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) continue;
        s << X(sr.x[i]) << ',' << Y(sr.y[i]) << ' ';
      }
      s << "\"/>\n";
    }
    if (!sr.label.empty())
      s << "<text x=\"" << W - R - 8 << "\" y=\"" << T + 16 + 16 * k
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << jesc(sr.label) << "</text>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

// ---------- solve ----------

struct SolveArgs {
  std::string model;
  std::string side = "both";
  bool bounds = false;
  bool as_json = false;
  std::string out;
};

std::string solve_json(const ExponentSolution& sol, bool bounds) {
  JsonObj j;
  if (sol.alpha) j.num("alpha", *sol.alpha);
  if (sol.beta_tail) j.num("beta", *sol.beta_tail);
  if (!sol.upper_note.empty()) j.str("upper_note", sol.upper_note);
  if (!sol.lower_note.empty()) j.str("lower_note", sol.lower_note);
  {
    JsonObj lat;
    lat.boolean("lattice", sol.lattice.lattice);
    if (sol.lattice.lattice) {
      lat.num("span", sol.lattice.span);
      lat.boolean("offset", sol.lattice.offset);
    }
    j.raw("lattice", lat.done());
  }
  if (sol.alpha) {
    JsonObj c;
    c.num("c", sol.constants.c);
    c.num("b", sol.constants.b);
    j.raw("constants", c.done());
    if (bounds) {
      JsonObj b;
      b.num("lower", sol.bounds.lower);
      b.num("upper", sol.bounds.upper);
      j.raw("bounds", b.done());
    }
    if (sol.prefactor) j.num("prefactor", *sol.prefactor);
  }
  return j.done() + "\n";
}

std::string solve_text(const ExponentSolution& sol, bool bounds) {
  std::string out;
  if (sol.lattice.lattice) {
    out += "lattice increments, span " + format_float(sol.lattice.span);
    if (sol.lattice.offset) out += " (offset; pole spacing is conservative)";
    out += '\n';
  } else {
    out += "nonlattice increments\n";
  }
  if (sol.alpha) {
    out += "upper exponent alpha = " + format_float(*sol.alpha) + '\n';
    out += "  residue constant c = " + format_float(sol.constants.c) + '\n';
    out += "  pole spacing b = " + format_float(sol.constants.b) + '\n';
    if (bounds)
      out += "  bounds on e^{alpha w} P(W > w): [" + format_float(sol.bounds.lower) + ", " +
             format_float(sol.bounds.upper) + "]\n";
    if (sol.prefactor)
      out += "  pareto prefactor (unit initial size): " + format_float(*sol.prefactor) + '\n';
  } else {
    out += "upper exponent: " + sol.upper_note + '\n';
  }
  if (sol.beta_tail)
    out += "lower exponent beta = " + format_float(*sol.beta_tail) + '\n';
  else
    out += "lower exponent: " + sol.lower_note + '\n';
  return out;
}

void cmd_solve(const SolveArgs& a) {
  const ProcessSpec spec = load_process_spec(a.model);
  const ExponentSolution sol = solve_process(spec);
  if (a.side == "upper" && !sol.alpha) throw NoSolutionError(sol.upper_note);
  if (a.side == "lower" && !sol.beta_tail) throw NoSolutionError(sol.lower_note);
  if (a.side == "both" && !sol.alpha && !sol.beta_tail)
    throw NoSolutionError(sol.upper_note + "; " + sol.lower_note);

  std::cout << (a.as_json ? solve_json(sol, a.bounds) : solve_text(sol, a.bounds));
  if (!a.out.empty()) {
    write_file(a.out, solve_json(sol, a.bounds));
    RunManifest m;
    m.command = "solve";
    m.inputs = {a.model};
    m.parameters = {{"side", a.side}, {"bounds", a.bounds ? "true" : "false"}};
    m.outputs = {a.out};
    write_manifest(m, a.out + ".manifest.json");
  }
}

// ---------- compstat ----------

struct CompstatArgs {
  std::string model;
  double tau = -1.0;  // < 0 means not supplied
  bool as_json = false;
  std::string out;
};

void cmd_compstat(const CompstatArgs& a) {
  const ProcessSpec spec = load_process_spec(a.model);
  std::optional<double> tau;
  if (a.tau >= 0.0) tau = a.tau;
  const SensitivityReport rep = sensitivities(spec, tau);

  JsonObj j;
  j.num("alpha", rep.alpha);
  j.raw("dalpha_dv", jmatrix(rep.dalpha_dv));
  j.raw("dalpha_dmu", jmatrix(rep.dalpha_dmu));
  j.raw("dalpha_dsigma", jmatrix(rep.dalpha_dsigma));
  if (rep.dalpha_dtau) j.num("dalpha_dtau", *rep.dalpha_dtau);
  const std::string json_report = j.done() + "\n";

  if (a.as_json) {
    std::cout << json_report;
  } else {
    std::cout << "alpha = " << format_float(rep.alpha) << '\n';
    std::cout << "d alpha / d v (per edge):\n" << matrix_lines(rep.dalpha_dv, "  ");
    std::cout << "d alpha / d mu (per edge):\n" << matrix_lines(rep.dalpha_dmu, "  ");
    std::cout << "d alpha / d sigma (per edge):\n" << matrix_lines(rep.dalpha_dsigma, "  ");
    if (rep.dalpha_dtau)
      std::cout << "d alpha / d tau = " << format_float(*rep.dalpha_dtau) << '\n';
  }
  if (!a.out.empty()) {
    write_file(a.out, json_report);
    RunManifest m;
    m.command = "compstat";
    m.inputs = {a.model};
    if (tau) m.parameters = {{"tau", format_float(*tau)}};
    m.outputs = {a.out};
    write_manifest(m, a.out + ".manifest.json");
  }
}

// ---------- simulate ----------

struct SimulateArgs {
  std::string model;
  int64_t paths = 100000;
  uint64_t seed = 1;
  int64_t max_steps = 1000000;
  int threads = 0;
  double s0 = 1.0;
  std::vector<double> s0_lognormal;  // mu, sd
  bool as_json = false;
  std::string out;
};

void cmd_simulate(const SimulateArgs& a) {
  const ProcessSpec spec = load_process_spec(a.model);
  SimConfig cfg;
  cfg.paths = a.paths;
  cfg.seed = a.seed;
  cfg.max_steps = a.max_steps;
  cfg.threads = a.threads;
  if (!a.s0_lognormal.empty()) {
    cfg.s0.kind = InitialSize::Kind::Lognormal;
    cfg.s0.log_mean = a.s0_lognormal[0];
    cfg.s0.log_sd = a.s0_lognormal[1];
  } else {
    cfg.s0.constant = a.s0;
  }
  const SimResult res = simulate_stopped(spec, cfg);

  double wsum = 0, wsq = 0, tsum = 0;
  int32_t tmax = 0;
  for (size_t i = 0; i < res.w.size(); ++i) {
    wsum += res.w[i];
    wsq += res.w[i] * res.w[i];
    tsum += res.steps[i];
    tmax = std::max(tmax, res.steps[i]);
  }
  const double n = static_cast<double>(res.w.size());
  const double wmean = wsum / n;
  const double wsd = std::sqrt(std::max(0.0, wsq / n - wmean * wmean));

  if (a.as_json) {
    JsonObj j;
    j.integer("paths", a.paths);
    j.integer("seed", static_cast<long long>(a.seed));
    j.num("mean_w", wmean);
    j.num("sd_w", wsd);
    j.num("mean_steps", tsum / n);
    j.integer("max_steps_seen", tmax);
    j.integer("censored", res.censored_count);
    if (!res.warning.empty()) j.str("warning", res.warning);
    std::cout << j.done() << "\n";
  } else {
    std::cout << "paths = " << a.paths << ", seed = " << a.seed << '\n';
    std::cout << "mean W_T = " << format_float(wmean) << ", sd W_T = " << format_float(wsd)
              << '\n';
    std::cout << "mean T = " << format_float(tsum / n) << ", max T = " << tmax << '\n';
    std::cout << "censored paths = " << res.censored_count << '\n';
    if (!res.warning.empty()) std::cout << res.warning << '\n';
  }

  if (!a.out.empty()) {
    std::ostringstream csv;
    csv << "path_id,W_T,T,final_state,censored\n";
    for (size_t i = 0; i < res.w.size(); ++i)
      csv << i << ',' << format_float(res.w[i]) << ',' << res.steps[i] << ','
          << res.final_state[i] << ',' << int(res.censored[i]) << '\n';
    write_file(a.out, csv.str());
    RunManifest m;
    m.command = "simulate";
    m.inputs = {a.model};
    m.parameters = {{"paths", std::to_string(a.paths)},
                    {"max_steps", std::to_string(a.max_steps)}};
    m.seed = a.seed;
    m.outputs = {a.out};
    write_manifest(m, a.out + ".manifest.json");
  }
}

// ---------- hill ----------

struct HillArgs {
  std::string csv;
  double tail_fraction = 0.10;
  bool as_json = false;
};

void cmd_hill(const HillArgs& a) {
  const std::vector<double> values = read_tail_values(a.csv);
  const TailEstimate est = hill_estimate(values, a.tail_fraction);
  if (a.as_json) {
    JsonObj j;
    j.integer("n", static_cast<long long>(values.size()));
    j.num("tail_fraction", a.tail_fraction);
    j.num("alpha_hat", est.alpha_hat);
    j.integer("k", est.k);
    j.num("threshold", est.threshold);
    j.num("std_error", est.std_error);
    std::cout << j.done() << "\n";
  } else {
    std::cout << "n = " << values.size() << " values, top fraction "
              << format_float(a.tail_fraction) << '\n';
    std::cout << "alpha_hat = " << format_float(est.alpha_hat) << '\n';
    std::cout << "tail count k = " << est.k << ", threshold = " << format_float(est.threshold)
              << '\n';
    std::cout << "std_error = " << format_float(est.std_error) << '\n';
  }
}

// ---------- fit ----------

struct FitArgs {
  std::string panel;
  int states = 2;
  std::vector<double> mean_ages = {400.0};
  bool relative = false;
  uint64_t seed = 1;
  bool as_json = false;
  std::string out;
};

std::string fit_json(const GrowthPanel& panel, const FitResult& fit, double aic, double bic,
                     const std::vector<double>& mean_ages) {
  JsonObj j;
  j.integer("units", panel.units);
  j.integer("dropped_units", panel.dropped_units);
  j.integer("observations", static_cast<long long>(fit.filtered.size()));
  j.num("loglik", fit.loglik);
  j.num("aic", aic);
  j.num("bic", bic);
  j.integer("iterations", fit.iterations);
  j.boolean("converged", fit.converged);
  j.boolean("degenerate_restart", fit.degenerate_restart);
  j.raw("mu", jarray(fit.model.mu));
  j.raw("sigma", jarray(fit.model.sigma));
  j.raw("pi", jmatrix(fit.model.pi));
  std::string implied = "[";
  for (size_t i = 0; i < mean_ages.size(); ++i) {
    if (i) implied += ", ";
    JsonObj row;
    row.num("t_bar", mean_ages[i]);
    row.num("p", 1.0 / mean_ages[i]);
    row.num("exponent", implied_exponent(fit.model, 1.0 / mean_ages[i]));
    implied += row.done();
  }
  j.raw("implied", implied + "]");
  return j.done() + "\n";
}

void cmd_fit(const FitArgs& a) {
  for (double t : a.mean_ages)
    if (!(t > 1.0))
      throw ValidationError("--mean-age must exceed 1 (it is the inverse stopping probability)");
  const GrowthPanel panel = read_panel_csv(a.panel, a.relative);
  EmOptions opt;
  opt.seed = a.seed;
  const FitResult fit = em_fit(panel.growth, a.states, opt);

  long long obs = 0;
  for (const auto& g : panel.growth) obs += static_cast<long long>(g.size());
  const int k = a.states * (a.states - 1) + 2 * a.states;
  const double aic = 2.0 * k - 2.0 * fit.loglik;
  const double bic = k * std::log(static_cast<double>(obs)) - 2.0 * fit.loglik;

  const std::string json_report = fit_json(panel, fit, aic, bic, a.mean_ages);
  if (a.as_json) {
    std::cout << json_report;
  } else {
    std::cout << "units = " << panel.units << " (dropped " << panel.dropped_units
              << "), observations = " << obs << '\n';
    std::cout << "loglik = " << format_float(fit.loglik) << ", aic = " << format_float(aic)
              << ", bic = " << format_float(bic) << '\n';
    std::cout << (fit.converged ? "converged" : "hit the iteration cap") << " after "
              << fit.iterations << " iterations\n";
    if (fit.degenerate_restart) std::cout << "note: some restart emptied a regime\n";
    for (int s = 0; s < a.states; ++s)
      std::cout << "regime " << s << ": mu = " << format_float(fit.model.mu(s))
                << ", sigma = " << format_float(fit.model.sigma(s)) << '\n';
    std::cout << "transition matrix:\n" << matrix_lines(fit.model.pi, "  ");
    std::cout << "implied tail exponents:\n";
    for (double t : a.mean_ages)
      std::cout << "  T_bar = " << format_float(t) << ", p = " << format_float(1.0 / t)
                << ", exponent = " << format_float(implied_exponent(fit.model, 1.0 / t)) << '\n';
  }
  if (!a.out.empty()) {
    write_file(a.out, json_report);
    RunManifest m;
    m.command = "fit";
    m.inputs = {a.panel};
    m.parameters = {{"states", std::to_string(a.states)},
                    {"relative", a.relative ? "true" : "false"}};
    for (double t : a.mean_ages) m.parameters.emplace_back("mean_age", format_float(t));
    m.seed = a.seed;
    m.outputs = {a.out};
    write_manifest(m, a.out + ".manifest.json");
  }
}

// ---------- aiyagari ----------

struct AiyagariArgs {
  std::string config;
  bool simulate = false;
  int64_t agents = 100000;
  int64_t periods = 1000;
  uint64_t seed = 1;
  int threads = 0;
  bool as_json = false;
  std::string out;
};

void cmd_aiyagari(const AiyagariArgs& a) {
  const AiyagariEconomy eco = load_economy(a.config);
  const AiyagariSolution sol = solve_economy(eco);
  std::optional<EconomySim> sim;
  if (a.simulate) sim = simulate_economy(eco, sol, a.agents, a.periods, a.seed, a.threads);

  if (a.as_json) {
    JsonObj j;
    j.num("omega_star", sol.omega_star);
    j.num("zeta", sol.zeta);
    j.raw("A", jarray(eco.A));
    j.raw("R", jarray(sol.R));
    j.raw("b", jarray(sol.b));
    j.raw("Gk", jarray(sol.Gk));
    j.raw("Gw", jmatrix(sol.Gw));
    if (sim) {
      JsonObj s;
      s.integer("agents", a.agents);
      s.integer("periods", a.periods);
      s.integer("upper_tail_count", sim->upper_tail_count);
      if (sim->hill) {
        JsonObj h;
        h.num("alpha_hat", sim->hill->alpha_hat);
        h.integer("k", sim->hill->k);
        h.num("threshold", sim->hill->threshold);
        h.num("std_error", sim->hill->std_error);
        s.raw("hill", h.done());
      }
      if (!sim->note.empty()) s.str("note", sim->note);
      j.raw("simulation", s.done());
    }
    std::cout << j.done() << "\n";
  } else {
    std::cout << "equilibrium wage omega_star = " << format_float(sol.omega_star) << '\n';
    std::cout << "wealth exponent zeta = " << format_float(sol.zeta) << '\n';
    for (int s = 0; s < eco.n_states; ++s)
      std::cout << "state " << s << ": A = " << format_float(eco.A(s))
                << ", R = " << format_float(sol.R(s)) << ", b = " << format_float(sol.b(s))
                << ", Gk = " << format_float(sol.Gk(s)) << '\n';
    if (sim) {
      std::cout << "simulation: agents = " << a.agents << ", periods = " << a.periods
                << ", seed = " << a.seed << '\n';
      std::cout << "  wealth above the newborn unit: " << sim->upper_tail_count << '\n';
      if (sim->hill)
        std::cout << "  hill alpha_hat = " << format_float(sim->hill->alpha_hat)
                  << " (k = " << sim->hill->k
                  << ", std_error = " << format_float(sim->hill->std_error) << ")\n";
      if (!sim->note.empty()) std::cout << "  " << sim->note << '\n';
    }
  }

  if (!a.out.empty()) {
    std::ostringstream summary;
    summary << "field,state,value\n";
    summary << "omega_star,," << format_float(sol.omega_star) << '\n';
    summary << "zeta,," << format_float(sol.zeta) << '\n';
    for (int s = 0; s < eco.n_states; ++s) {
      summary << "A," << s << ',' << format_float(eco.A(s)) << '\n';
      summary << "R," << s << ',' << format_float(sol.R(s)) << '\n';
      summary << "b," << s << ',' << format_float(sol.b(s)) << '\n';
      summary << "Gk," << s << ',' << format_float(sol.Gk(s)) << '\n';
    }
    const std::string summary_path = a.out + "_summary.csv";
    write_file(summary_path, summary.str());
    RunManifest m;
    m.command = "aiyagari";
    m.inputs = {a.config};
    m.parameters = {{"simulate", a.simulate ? "true" : "false"}};
    m.outputs = {summary_path};
    if (sim) {
      std::ostringstream panel;
      panel << "agent_id,wealth,state\n";
      for (size_t i = 0; i < sim->wealth.size(); ++i)
        panel << i << ',' << format_float(sim->wealth[i]) << ',' << sim->state[i] << '\n';
      const std::string panel_path = a.out + "_panel.csv";
      write_file(panel_path, panel.str());
      m.parameters.emplace_back("agents", std::to_string(a.agents));
      m.parameters.emplace_back("periods", std::to_string(a.periods));
      m.seed = a.seed;
      m.outputs.push_back(panel_path);
    }
    write_manifest(m, a.out + ".manifest.json");
  }
}

// ---------- plotdata ----------

struct PlotArgs {
  std::string kind;
  std::string model;
  std::string in;
  std::string panel;
  std::string out;
  std::string svg;
  int64_t paths = 200000;
  uint64_t seed = 1;
  int threads = 0;
  int points = 100;
  double tau_max = 0.999;
  double grid_lo = 0.0, grid_hi = 0.0;  // 0/0 means quantile defaults
  int64_t top = 0;
  std::vector<int> states = {1, 2, 3};
  std::vector<double> mean_ages = {150.0, 400.0, 1000.0};
  bool relative = false;
};

void require_input(const std::string& value, const std::string& flag, const std::string& kind) {
  if (value.empty()) throw ValidationError(kind + " needs " + flag);
}

double quantile(std::vector<double> sorted, double q) {
  const size_t n = sorted.size();
  return sorted[std::min(n - 1, static_cast<size_t>(q * static_cast<double>(n)))];
}

void plot_rank_size(const PlotArgs& a, RunManifest& m) {
  require_input(a.in, "--in", "rank_size");
  std::vector<double> values = read_tail_values(a.in);
  std::erase_if(values, [](double v) { return !(v > 0.0) || !std::isfinite(v); });
  if (values.empty()) throw ValidationError("rank_size: no positive values");
  std::sort(values.begin(), values.end(), std::greater<>());
  if (a.top > 0 && static_cast<int64_t>(values.size()) > a.top) values.resize(a.top);

  std::ostringstream csv;
  csv << "rank,value,log_rank,log_value\n";
  Series sr;
  for (size_t i = 0; i < values.size(); ++i) {
    const double lr = std::log(static_cast<double>(i + 1));
    const double lv = std::log(values[i]);
    csv << i + 1 << ',' << format_float(values[i]) << ',' << format_float(lr) << ','
        << format_float(lv) << '\n';
    sr.x.push_back(lv);
    sr.y.push_back(lr);
  }
  write_file(a.out, csv.str());
  m.inputs = {a.in};
  if (!a.svg.empty()) write_file(a.svg, render_svg({sr}, "log size", "log rank", true));
}

void plot_tail_curve(const PlotArgs& a, RunManifest& m) {
  require_input(a.model, "--model", "tail_curve");
  const ProcessSpec spec = load_process_spec(a.model);
  const double alpha = solve_exponent(spec, Side::Upper);
  SimConfig cfg;
  cfg.paths = a.paths;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  const SimResult res = simulate_stopped(spec, cfg);

  std::vector<double> sorted = res.w;
  std::sort(sorted.begin(), sorted.end());
  double lo = a.grid_lo, hi = a.grid_hi;
  if (lo == 0.0 && hi == 0.0) {
    lo = quantile(sorted, 0.90);
    hi = quantile(sorted, 0.999);
  }
  if (!(hi > lo)) throw ValidationError("tail_curve: empty grid range");
  const int npts = std::max(2, a.points);
  std::vector<double> grid(npts);
  for (int i = 0; i < npts; ++i) grid[i] = lo + (hi - lo) * i / (npts - 1);

  const TailCurve curve = empirical_tail_curve(res.w, alpha, grid);
  std::ostringstream csv;
  csv << "w,scaled,slope,count\n";
  Series sr;
  for (const auto& row : curve.rows) {
    csv << format_float(row.w) << ',' << format_float(row.scaled) << ','
        << format_float(row.slope) << ',' << row.count << '\n';
    sr.x.push_back(row.w);
    sr.y.push_back(row.scaled);
  }
  write_file(a.out, csv.str());
  m.inputs = {a.model};
  m.parameters.emplace_back("alpha", format_float(alpha));
  m.parameters.emplace_back("paths", std::to_string(a.paths));
  m.seed = a.seed;
  if (!a.svg.empty())
    write_file(a.svg, render_svg({sr}, "w", "e^{alpha w} P(W > w)", false));
}

void plot_exponent_vs_tau(const PlotArgs& a, RunManifest& m) {
  require_input(a.model, "--model", "exponent_vs_tau");
  const ProcessSpec base = load_process_spec(a.model);
  if (!(a.tau_max > 0.0 && a.tau_max < 1.0))
    throw ValidationError("exponent_vs_tau: --tau-max must lie in (0,1)");
  const int npts = std::max(2, a.points);

  std::ostringstream csv;
  csv << "tau,alpha\n";
  Series sr;
  for (int i = 0; i < npts; ++i) {
    const double tau = a.tau_max * i / (npts - 1);
    ProcessSpec spec = base;
    spec.pi = tau * Matrix::Identity(base.n_states, base.n_states) + (1.0 - tau) * base.pi;
    spec.finalize();
    const double alpha = solve_exponent(spec, Side::Upper);
    csv << format_float(tau) << ',' << format_float(alpha) << '\n';
    sr.x.push_back(tau);
    sr.y.push_back(alpha);
  }
  write_file(a.out, csv.str());
  m.inputs = {a.model};
  m.parameters.emplace_back("tau_max", format_float(a.tau_max));
  m.parameters.emplace_back("points", std::to_string(npts));
  if (!a.svg.empty()) write_file(a.svg, render_svg({sr}, "tau", "alpha", false));
}

void plot_implied_vs_n(const PlotArgs& a, RunManifest& m) {
  require_input(a.panel, "--panel", "implied_vs_N");
  for (double t : a.mean_ages)
    if (!(t > 1.0)) throw ValidationError("--mean-age must exceed 1");
  const GrowthPanel panel = read_panel_csv(a.panel, a.relative);
  long long obs = 0;
  for (const auto& g : panel.growth) obs += static_cast<long long>(g.size());

  std::ostringstream csv;
  csv << "n_states,t_bar,p,implied_exponent,loglik,aic,bic,converged\n";
  std::vector<Series> series(a.mean_ages.size());
  for (size_t t = 0; t < a.mean_ages.size(); ++t)
    series[t].label = "T_bar = " + tick_label(a.mean_ages[t]);
  for (int n : a.states) {
    EmOptions opt;
    opt.seed = a.seed;
    const FitResult fit = em_fit(panel.growth, n, opt);
    const int k = n * (n - 1) + 2 * n;
    const double aic = 2.0 * k - 2.0 * fit.loglik;
    const double bic = k * std::log(static_cast<double>(obs)) - 2.0 * fit.loglik;
    for (size_t t = 0; t < a.mean_ages.size(); ++t) {
      const double p = 1.0 / a.mean_ages[t];
      const double z = implied_exponent(fit.model, p);
      csv << n << ',' << format_float(a.mean_ages[t]) << ',' << format_float(p) << ','
          << format_float(z) << ',' << format_float(fit.loglik) << ',' << format_float(aic)
          << ',' << format_float(bic) << ',' << (fit.converged ? 1 : 0) << '\n';
      series[t].x.push_back(n);
      series[t].y.push_back(z);
    }
  }
  write_file(a.out, csv.str());
  m.inputs = {a.panel};
  m.parameters.emplace_back("relative", a.relative ? "true" : "false");
  m.seed = a.seed;
  if (!a.svg.empty())
    write_file(a.svg, render_svg(series, "number of regimes", "implied exponent", false));
}

void cmd_plotdata(const PlotArgs& a) {
  RunManifest m;
  m.command = "plotdata";
  m.parameters.emplace_back("kind", a.kind);
  if (a.kind == "rank_size")
    plot_rank_size(a, m);
  else if (a.kind == "tail_curve")
    plot_tail_curve(a, m);
  else if (a.kind == "exponent_vs_tau")
    plot_exponent_vs_tau(a, m);
  else if (a.kind == "implied_vs_N")
    plot_implied_vs_n(a, m);
  else
    throw ValidationError("unknown plot kind '" + a.kind + "'");
  m.outputs.insert(m.outputs.begin(), a.out);
  if (!a.svg.empty()) m.outputs.push_back(a.svg);
  write_manifest(m, a.out + ".manifest.json");
  std::cout << "wrote " << a.out;
  if (!a.svg.empty()) std::cout << " and " << a.svg;
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tail exponents of geometrically stopped Markov additive processes"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "exponents, constants, and tail bounds");
  solve_cmd->add_option("model", solve_args.model, "model spec (JSON)")->required();
  solve_cmd->add_option("--side", solve_args.side, "which exponent to require")
      ->check(CLI::IsMember({"upper", "lower", "both"}));
  solve_cmd->add_flag("--bounds", solve_args.bounds, "print the sharp oscillation bounds");
  solve_cmd->add_flag("--json", solve_args.as_json, "JSON report on stdout");
  solve_cmd->add_option("--out", solve_args.out, "also write the JSON report here");

  CompstatArgs comp_args;
  auto* comp_cmd = app.add_subcommand("compstat", "sensitivities of the upper exponent");
  comp_cmd->add_option("model", comp_args.model, "model spec (JSON)")->required();
  comp_cmd->add_option("--tau", comp_args.tau,
                       "persistence blend the spec's Pi was built with (current-state models)");
  comp_cmd->add_flag("--json", comp_args.as_json, "JSON report on stdout");
  comp_cmd->add_option("--out", comp_args.out, "also write the JSON report here");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo paths of the stopped process");
  sim_cmd->add_option("model", sim_args.model, "model spec (JSON)")->required();
  sim_cmd->add_option("--paths", sim_args.paths, "number of paths")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim_args.seed, "RNG seed");
  sim_cmd->add_option("--max-steps", sim_args.max_steps, "censoring cap per path")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--threads", sim_args.threads, "worker threads (0 = hardware)");
  sim_cmd->add_option("--s0", sim_args.s0, "constant initial size");
  sim_cmd->add_option("--s0-lognormal", sim_args.s0_lognormal,
                      "lognormal initial size: log mean, log sd")
      ->expected(2);
  sim_cmd->add_flag("--json", sim_args.as_json, "JSON summary on stdout");
  sim_cmd->add_option("--out", sim_args.out, "write the path sample CSV here");

  HillArgs hill_args;
  auto* hill_cmd = app.add_subcommand("hill", "tail-index estimate from a CSV sample");
  hill_cmd->add_option("csv", hill_args.csv, "value column or (unit_id, period, size) panel")
      ->required();
  hill_cmd->add_option("--tail-fraction", hill_args.tail_fraction, "top fraction used");
  hill_cmd->add_flag("--json", hill_args.as_json, "JSON report on stdout");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "regime model estimation from a size panel");
  fit_cmd->add_option("panel", fit_args.panel, "(unit_id, period, size) CSV")->required();
  fit_cmd->add_option("--states", fit_args.states, "number of regimes")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--mean-age", fit_args.mean_ages,
                      "mean unit ages T_bar; implied exponent uses p = 1/T_bar")
      ->delimiter(',');
  fit_cmd->add_flag("--relative", fit_args.relative,
                    "normalize sizes by the per-period cross-sectional sum");
  fit_cmd->add_option("--seed", fit_args.seed, "EM restart seed");
  fit_cmd->add_flag("--json", fit_args.as_json, "JSON report on stdout");
  fit_cmd->add_option("--out", fit_args.out, "also write the JSON report here");

  AiyagariArgs aiy_args;
  auto* aiy_cmd = app.add_subcommand("aiyagari", "heterogeneous-agent wealth equilibrium");
  aiy_cmd->add_option("config", aiy_args.config, "economy config (JSON)")->required();
  aiy_cmd->add_flag("--simulate", aiy_args.simulate, "run the agent panel simulation");
  aiy_cmd->add_option("--agents", aiy_args.agents, "agents")->check(CLI::PositiveNumber);
  aiy_cmd->add_option("--periods", aiy_args.periods, "periods")->check(CLI::PositiveNumber);
  aiy_cmd->add_option("--seed", aiy_args.seed, "RNG seed");
  aiy_cmd->add_option("--threads", aiy_args.threads, "worker threads (0 = hardware)");
  aiy_cmd->add_flag("--json", aiy_args.as_json, "JSON report on stdout");
  aiy_cmd->add_option("--out", aiy_args.out, "output base path for summary/panel CSVs");

  PlotArgs plot_args;
  auto* plot_cmd = app.add_subcommand("plotdata", "figure-ready CSV (and optional SVG)");
  plot_cmd->add_option("kind", plot_args.kind,
                       "rank_size | tail_curve | exponent_vs_tau | implied_vs_N")
      ->required();
  plot_cmd->add_option("--model", plot_args.model, "model spec (JSON)");
  plot_cmd->add_option("--in", plot_args.in, "value CSV (rank_size)");
  plot_cmd->add_option("--panel", plot_args.panel, "size panel CSV (implied_vs_N)");
  plot_cmd->add_option("--out", plot_args.out, "output CSV path")->required();
  plot_cmd->add_option("--svg", plot_args.svg, "also render a static SVG here");
  plot_cmd->add_option("--paths", plot_args.paths, "simulation paths (tail_curve)")
      ->check(CLI::PositiveNumber);
  plot_cmd->add_option("--seed", plot_args.seed, "RNG seed");
  plot_cmd->add_option("--threads", plot_args.threads, "worker threads");
  plot_cmd->add_option("--points", plot_args.points, "grid points");
  plot_cmd->add_option("--tau-max", plot_args.tau_max, "largest blend weight");
  plot_cmd->add_option("--grid-lo", plot_args.grid_lo, "tail grid start (tail_curve)");
  plot_cmd->add_option("--grid-hi", plot_args.grid_hi, "tail grid end (tail_curve)");
  plot_cmd->add_option("--top", plot_args.top, "keep only the largest N values (rank_size)");
  plot_cmd->add_option("--states", plot_args.states, "regime counts (implied_vs_N)")
      ->delimiter(',');
  plot_cmd->add_option("--mean-age", plot_args.mean_ages, "mean ages (implied_vs_N)")
      ->delimiter(',');
  plot_cmd->add_flag("--relative", plot_args.relative, "relative-size normalization");

  try {
    app.parse(argc, argv);
    if (*solve_cmd) cmd_solve(solve_args);
    if (*comp_cmd) cmd_compstat(comp_args);
    if (*sim_cmd) cmd_simulate(sim_args);
    if (*hill_cmd) cmd_hill(hill_args);
    if (*fit_cmd) cmd_fit(fit_args);
    if (*aiy_cmd) cmd_aiyagari(aiy_args);
    if (*plot_cmd) cmd_plotdata(plot_args);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NoSolutionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}

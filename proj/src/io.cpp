#include "stoptail/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "stoptail/errors.hpp"
#include "stoptail/markov.hpp"

namespace stoptail {

using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

Matrix to_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw ValidationError(name + " must be an array of rows");
  const auto rows = j.size();
  const auto cols = j.front().size();
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ValidationError(name + " row " + std::to_string(r) + " has a different length");
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Vector to_vector(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty())
    throw ValidationError(name + " must be a nonempty array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

std::variant<Gaussian, FiniteDiscrete> base_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "gaussian")
    return Gaussian{j.at("mean").get<double>(), j.at("variance").get<double>()};
  if (type == "discrete")
    return FiniteDiscrete{j.at("values").get<std::vector<double>>(),
                          j.at("probs").get<std::vector<double>>()};
  throw ValidationError("shifted_scaled base must be gaussian or discrete, not '" + type + "'");
}

IncrementDist dist_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("increment must be a tagged object");
  const std::string type = j.at("type").get<std::string>();
  if (type == "point") return PointMass{j.at("value").get<double>()};
  if (type == "gaussian")
    return Gaussian{j.at("mean").get<double>(), j.at("variance").get<double>()};
  if (type == "lognormal_growth")
    return LognormalGrowth{j.at("mu").get<double>(), j.at("sigma").get<double>()};
  if (type == "discrete")
    return FiniteDiscrete{j.at("values").get<std::vector<double>>(),
                          j.at("probs").get<std::vector<double>>()};
  if (type == "shifted_scaled")
    return make_shifted_scaled(base_from_json(j.at("base")), j.at("location").get<double>(),
                               j.at("scale").get<double>());
  throw ValidationError("unknown increment type '" + type + "'");
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": cannot parse number '" + s + "'");
  }
}

long long parse_int(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": cannot parse integer '" + s + "'");
  }
}

std::string line_ref(const std::string& path, size_t lineno) {
  return path + " line " + std::to_string(lineno);
}

struct PanelRow {
  std::string unit;
  long long period = 0;
  double size = 0.0;
};

std::vector<PanelRow> read_panel_rows(std::ifstream& in, const std::string& path) {
  std::vector<PanelRow> rows;
  std::string line;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3)
      throw ValidationError(line_ref(path, lineno) + ": expected 3 columns, got " +
                            std::to_string(cells.size()));
    PanelRow row;
    row.unit = cells[0];
    row.period = parse_int(cells[1], line_ref(path, lineno));
    row.size = parse_double(cells[2], line_ref(path, lineno));
    if (!(row.size > 0.0))
      throw ValidationError(line_ref(path, lineno) + ": size must be positive");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path + ": no data rows");
  return rows;
}

}  // namespace

std::string format_float(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ProcessSpec load_process_spec(const std::string& path) {
  const json j = load_json(path);
  try {
    ProcessSpec spec;
    const int n = j.at("N").get<int>();
    if (n < 1) throw ValidationError("N must be at least 1");
    spec.n_states = n;
    spec.pi = to_matrix(j.at("Pi"), "Pi");

    const json& vj = j.at("V");
    if (vj.is_number())
      spec.v = Matrix::Constant(n, n, vj.get<double>());
    else
      spec.v = to_matrix(vj, "V");

    const json& dj = j.at("dists");
    if (dj.is_object()) {
      spec.dists.assign(n, std::vector<IncrementDist>(n, dist_from_json(dj)));
    } else if (dj.is_array() && !dj.empty() && dj.front().is_object()) {
      if (static_cast<int>(dj.size()) != n)
        throw ValidationError("dists: need one increment per state, got " +
                              std::to_string(dj.size()));
      std::vector<IncrementDist> by_state;
      by_state.reserve(n);
      for (const auto& d : dj) by_state.push_back(dist_from_json(d));
      spec.dists.assign(n, by_state);
    } else if (dj.is_array() && !dj.empty() && dj.front().is_array()) {
      if (static_cast<int>(dj.size()) != n)
        throw ValidationError("dists: need one row per state");
      spec.dists.resize(n);
      for (int r = 0; r < n; ++r) {
        if (static_cast<int>(dj[r].size()) != n)
          throw ValidationError("dists row " + std::to_string(r) +
                                ": need one increment per destination");
        for (const auto& d : dj[r]) spec.dists[r].push_back(dist_from_json(d));
      }
    } else {
      throw ValidationError("dists must be an object, a state array, or a full matrix");
    }

    if (j.contains("omega0")) spec.omega0 = to_vector(j.at("omega0"), "omega0");
    spec.finalize();
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

AiyagariEconomy load_economy(const std::string& path) {
  const json j = load_json(path);
  try {
    AiyagariEconomy eco;
    eco.p_die = j.at("p").get<double>();
    eco.disc_beta = j.at("beta").get<double>();
    eco.eps_eis = j.value("eps", eco.eps_eis);
    eco.gamma_rra = j.value("gamma", eco.gamma_rra);
    eco.alpha_cap = j.value("alpha", eco.alpha_cap);
    eco.delta = j.value("delta", eco.delta);
    eco.kappa = j.value("kappa", eco.kappa);

    if (j.contains("ar1")) {
      const json& a = j.at("ar1");
      const double rho = a.at("rho").get<double>();
      const double sigma = a.at("sigma").get<double>();
      const int S = a.at("S").get<int>();
      const std::string method = a.value("method", std::string("rouwenhorst"));
      DiscretizedAr1 d;
      if (method == "rouwenhorst")
        d = rouwenhorst(rho, sigma, S);
      else if (method == "tauchen")
        d = tauchen(rho, sigma, S, a.value("m", 3.0));
      else
        throw ValidationError("unknown discretization method '" + method + "'");
      eco.P = d.P;
      eco.A = d.grid.array().exp();
    } else {
      eco.A = to_vector(j.at("A"), "A");
      eco.P = to_matrix(j.at("P"), "P");
    }

    if (j.contains("pi0")) eco.pi0 = to_vector(j.at("pi0"), "pi0");
    eco.finalize();
    return eco;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_manifest(const RunManifest& m, const std::string& path) {
  json j;
  j["command"] = m.command;
  j["tool_version"] = m.tool_version;
  j["inputs"] = m.inputs;
  json params = json::array();
  for (const auto& [key, value] : m.parameters) params.push_back(json::array({key, value}));
  j["parameters"] = params;
  j["seed"] = m.seed;
  j["outputs"] = m.outputs;
  std::ofstream out(path);
  if (!out) throw ValidationError(path + ": cannot write");
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
  const json j = load_json(path);
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    for (const auto& p : j.at("parameters"))
      m.parameters.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    m.seed = j.at("seed").get<uint64_t>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::vector<double> read_tail_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  const auto header = split_csv(line);

  if (header.size() == 1 && header[0] == "value") {
    std::vector<double> values;
    size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      values.push_back(parse_double(trim(line), line_ref(path, lineno)));
    }
    return values;
  }

  if (header == std::vector<std::string>{"unit_id", "period", "size"}) {
    const auto rows = read_panel_rows(in, path);
    long long last = rows.front().period;
    for (const auto& r : rows) last = std::max(last, r.period);
    std::vector<double> values;
    for (const auto& r : rows)
      if (r.period == last) values.push_back(r.size);
    return values;
  }

  throw ValidationError(path +
                        ": expected a single 'value' column or a (unit_id, period, size) panel");
}

GrowthPanel read_panel_csv(const std::string& path, bool relative_size) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  if (split_csv(line) != std::vector<std::string>{"unit_id", "period", "size"})
    throw ValidationError(path + ": expected header unit_id,period,size");
  auto rows = read_panel_rows(in, path);

  if (relative_size) {
    std::unordered_map<long long, double> period_sum;
    for (const auto& r : rows) period_sum[r.period] += r.size;
    for (auto& r : rows) r.size /= period_sum[r.period];
  }

  std::vector<std::string> unit_order;
  std::unordered_map<std::string, size_t> unit_idx;
  std::vector<std::vector<std::pair<long long, double>>> by_unit;
  for (const auto& r : rows) {
    auto it = unit_idx.find(r.unit);
    if (it == unit_idx.end()) {
      it = unit_idx.emplace(r.unit, by_unit.size()).first;
      unit_order.push_back(r.unit);
      by_unit.emplace_back();
    }
    by_unit[it->second].emplace_back(r.period, r.size);
  }

  GrowthPanel panel;
  panel.rows = static_cast<int64_t>(rows.size());
  for (size_t u = 0; u < by_unit.size(); ++u) {
    auto& obs = by_unit[u];
    std::sort(obs.begin(), obs.end());
    if (obs.size() < 2) {
      ++panel.dropped_units;
      continue;
    }
    std::vector<double> growth;
    growth.reserve(obs.size() - 1);
    for (size_t t = 1; t < obs.size(); ++t) {
      if (obs[t].first == obs[t - 1].first)
        throw ValidationError(path + ": duplicate period " + std::to_string(obs[t].first) +
                              " for unit " + unit_order[u]);
      if (obs[t].first != obs[t - 1].first + 1)
        throw ValidationError(path + ": periods " + std::to_string(obs[t - 1].first) + " and " +
                              std::to_string(obs[t].first) + " are not consecutive for unit " +
                              unit_order[u]);
      growth.push_back(std::log(obs[t].second / obs[t - 1].second));
    }
    panel.growth.push_back(std::move(growth));
    ++panel.units;
  }
  if (panel.growth.empty())
    throw ValidationError(path + ": no unit has two consecutive observations");
  return panel;
}

}  // namespace stoptail

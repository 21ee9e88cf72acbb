#pragma once

// File formats: JSON model and economy configs, run manifests, and the CSV
// readers for tail samples and size panels. All parsing errors surface as
// ValidationError with the file path in the message.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stoptail/aiyagari.hpp"
#include "stoptail/process.hpp"

namespace stoptail {

inline constexpr const char* kToolVersion = "0.1.0";

// 17 significant digits; round-trips any finite double.
std::string format_float(double x);

// Model spec: {"N": n, "Pi": [[...]], "V": s | [[...]], "dists": d,
// "omega0": [...]?}. A scalar V is the common survival probability on every
// transition. dists is one tagged object (shared by all edges), an N-array
// (keyed on the destination state), or an N x N array keyed on (from, to).
// Tags: point {value}, gaussian {mean, variance}, lognormal_growth {mu,
// sigma}, discrete {values, probs}, shifted_scaled {base, location, scale}.
ProcessSpec load_process_spec(const std::string& path);

// Economy config: {"p", "beta", "eps", "gamma", "alpha", "delta", "kappa",
// "pi0"?} plus either explicit {"A": [...], "P": [[...]]} or {"ar1": {"rho",
// "sigma", "S", "method"?}} with method rouwenhorst (default) or tauchen;
// productivities are then the exponentiated grid points. Omitted scalars keep
// the struct defaults.
AiyagariEconomy load_economy(const std::string& path);

struct RunManifest {
  std::string command;
  std::string tool_version = kToolVersion;
  std::vector<std::string> inputs;
  // resolved name/value pairs, in emission order
  std::vector<std::pair<std::string, std::string>> parameters;
  uint64_t seed = 0;
  std::vector<std::string> outputs;

  bool operator==(const RunManifest&) const = default;
};

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

// Sample for tail estimation. Accepts either a single `value` column or a
// (unit_id, period, size) panel; a panel yields the cross-section of sizes at
// its latest period.
std::vector<double> read_tail_values(const std::string& path);

struct GrowthPanel {
  std::vector<std::vector<double>> growth;  // log consecutive size ratios, per unit
  int64_t units = 0;          // units contributing at least one growth observation
  int64_t dropped_units = 0;  // units with a single observation
  int64_t rows = 0;           // data rows read
};

// (unit_id, period, size) panel -> per-unit log growth series. Periods must
// be consecutive within each unit. With relative_size, each size is first
// divided by its period's cross-sectional sum.
GrowthPanel read_panel_csv(const std::string& path, bool relative_size);

}  // namespace stoptail

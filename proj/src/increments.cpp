#include "stoptail/increments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stoptail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_finite_discrete(const FiniteDiscrete& d) {
  if (d.values.empty() || d.values.size() != d.probs.size())
    throw ValidationError("FiniteDiscrete: values/probs must be nonempty and equally sized");
  double total = 0.0;
  for (size_t i = 0; i < d.values.size(); ++i) {
    if (!std::isfinite(d.values[i])) throw ValidationError("FiniteDiscrete: nonfinite value");
    if (d.probs[i] < 0.0) throw ValidationError("FiniteDiscrete: negative probability");
    total += d.probs[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("FiniteDiscrete: probabilities sum to " + std::to_string(total));
}

double fd_mean(const FiniteDiscrete& d) {
  double m = 0.0;
  for (size_t i = 0; i < d.values.size(); ++i) m += d.probs[i] * d.values[i];
  return m;
}

// log sum_i p_i e^{s v_i}, stabilized
double fd_log_mgf(const FiniteDiscrete& d, double s) {
  double mx = -kInf;
  for (size_t i = 0; i < d.values.size(); ++i)
    if (d.probs[i] > 0.0) mx = std::max(mx, s * d.values[i]);
  double acc = 0.0;
  for (size_t i = 0; i < d.values.size(); ++i)
    if (d.probs[i] > 0.0) acc += d.probs[i] * std::exp(s * d.values[i] - mx);
  return mx + std::log(acc);
}

double fd_mgf_deriv(const FiniteDiscrete& d, double s) {
  double acc = 0.0;
  for (size_t i = 0; i < d.values.size(); ++i)
    acc += d.probs[i] * d.values[i] * std::exp(s * d.values[i]);
  return acc;
}

// tilted mean sum p v e^{sv} / sum p e^{sv}, max-shifted
double fd_log_mgf_deriv(const FiniteDiscrete& d, double s) {
  double mx = -kInf;
  for (size_t i = 0; i < d.values.size(); ++i)
    if (d.probs[i] > 0.0) mx = std::max(mx, s * d.values[i]);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < d.values.size(); ++i)
    if (d.probs[i] > 0.0) {
      const double w = d.probs[i] * std::exp(s * d.values[i] - mx);
      num += w * d.values[i];
      den += w;
    }
  return num / den;
}

}  // namespace

void validate(const IncrementDist& d) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          if (!std::isfinite(v.value)) throw ValidationError("PointMass: nonfinite value");
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          if (!std::isfinite(v.mean) || !(v.variance > 0.0))
            throw ValidationError("Gaussian: need finite mean and variance > 0");
        } else if constexpr (std::is_same_v<T, LognormalGrowth>) {
          if (!std::isfinite(v.mu) || !(v.sigma > 0.0))
            throw ValidationError("LognormalGrowth: need finite mu and sigma > 0");
        } else if constexpr (std::is_same_v<T, FiniteDiscrete>) {
          validate_finite_discrete(v);
        } else {
          if (!(v.scale > 0.0)) throw ValidationError("ShiftedScaled: scale must be > 0");
          if (!std::isfinite(v.location)) throw ValidationError("ShiftedScaled: nonfinite location");
          if (const auto* fd = std::get_if<FiniteDiscrete>(&v.base)) {
            validate_finite_discrete(*fd);
            if (std::abs(fd_mean(*fd)) > 1e-10)
              throw ValidationError("ShiftedScaled: base must have zero mean");
          } else {
            const auto& gz = std::get<Gaussian>(v.base);
            if (!(gz.variance > 0.0)) throw ValidationError("ShiftedScaled: base variance must be > 0");
            if (std::abs(gz.mean) > 1e-10)
              throw ValidationError("ShiftedScaled: base must have zero mean");
          }
        }
      },
      d);
}

ShiftedScaled make_shifted_scaled(std::variant<Gaussian, FiniteDiscrete> base, double location,
                                  double scale) {
  if (!(scale > 0.0)) throw ValidationError("make_shifted_scaled: scale must be > 0");
  if (auto* fd = std::get_if<FiniteDiscrete>(&base)) {
    validate_finite_discrete(*fd);
    const double m = fd_mean(*fd);
    for (auto& v : fd->values) v -= m;
  } else {
    std::get<Gaussian>(base).mean = 0.0;
  }
  return ShiftedScaled{std::move(base), location, scale};
}

double mean(const IncrementDist& d) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>) return v.value;
        else if constexpr (std::is_same_v<T, Gaussian>) return v.mean;
        else if constexpr (std::is_same_v<T, LognormalGrowth>) return v.mu;
        else if constexpr (std::is_same_v<T, FiniteDiscrete>) return fd_mean(v);
        else return v.location;
      },
      d);
}

MgfDomain mgf_domain(const IncrementDist&) {
  return {-kInf, kInf};
}

double log_mgf(const IncrementDist& d, double s) {
  return std::visit(
      [s](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return s * v.value;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return v.mean * s + 0.5 * v.variance * s * s;
        } else if constexpr (std::is_same_v<T, LognormalGrowth>) {
          return v.mu * s + 0.5 * v.sigma * v.sigma * s * s;
        } else if constexpr (std::is_same_v<T, FiniteDiscrete>) {
          return fd_log_mgf(v, s);
        } else {
          const double u = v.scale * s;
          if (const auto* gz = std::get_if<Gaussian>(&v.base))
            return v.location * s + 0.5 * gz->variance * u * u;
          return v.location * s + fd_log_mgf(std::get<FiniteDiscrete>(v.base), u);
        }
      },
      d);
}

double mgf(const IncrementDist& d, double s) {
  return std::exp(log_mgf(d, s));
}

double base_log_mgf_deriv(const std::variant<Gaussian, FiniteDiscrete>& base, double u) {
  if (const auto* gz = std::get_if<Gaussian>(&base)) return gz->variance * u;
  return fd_log_mgf_deriv(std::get<FiniteDiscrete>(base), u);
}

double log_mgf_deriv(const IncrementDist& d, double s) {
  return std::visit(
      [s](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return v.value;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return v.mean + v.variance * s;
        } else if constexpr (std::is_same_v<T, LognormalGrowth>) {
          return v.mu + v.sigma * v.sigma * s;
        } else if constexpr (std::is_same_v<T, FiniteDiscrete>) {
          return fd_log_mgf_deriv(v, s);
        } else {
          return v.location + v.scale * base_log_mgf_deriv(v.base, v.scale * s);
        }
      },
      d);
}

double mgf_deriv(const IncrementDist& d, double s) {
  return std::visit(
      [s, &d](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return v.value * std::exp(s * v.value);
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return (v.mean + v.variance * s) * mgf(d, s);
        } else if constexpr (std::is_same_v<T, LognormalGrowth>) {
          return (v.mu + v.sigma * v.sigma * s) * mgf(d, s);
        } else if constexpr (std::is_same_v<T, FiniteDiscrete>) {
          return fd_mgf_deriv(v, s);
        } else {
          // M(s) = exp(loc*s + g(scale*s)); M'(s) = (loc + scale*g'(scale*s)) M(s)
          const double u = v.scale * s;
          return (v.location + v.scale * base_log_mgf_deriv(v.base, u)) * mgf(d, s);
        }
      },
      d);
}

bool is_continuous(const IncrementDist& d) {
  return std::visit(
      [](const auto& v) -> bool {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Gaussian> || std::is_same_v<T, LognormalGrowth>)
          return true;
        else if constexpr (std::is_same_v<T, ShiftedScaled>)
          return std::holds_alternative<Gaussian>(v.base);
        else
          return false;
      },
      d);
}

std::optional<std::vector<double>> discrete_support(const IncrementDist& d) {
  if (is_continuous(d)) return std::nullopt;
  std::vector<double> pts;
  if (const auto* pm = std::get_if<PointMass>(&d)) {
    pts.push_back(pm->value);
  } else if (const auto* fd = std::get_if<FiniteDiscrete>(&d)) {
    for (size_t i = 0; i < fd->values.size(); ++i)
      if (fd->probs[i] > 0.0) pts.push_back(fd->values[i]);
  } else {
    const auto& ss = std::get<ShiftedScaled>(d);
    const auto& base = std::get<FiniteDiscrete>(ss.base);
    for (size_t i = 0; i < base.values.size(); ++i)
      if (base.probs[i] > 0.0) pts.push_back(ss.location + ss.scale * base.values[i]);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double sample(const IncrementDist& d, CounterRng& rng) {
  return std::visit(
      [&rng](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return v.value;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return v.mean + std::sqrt(v.variance) * rng.next_normal();
        } else if constexpr (std::is_same_v<T, LognormalGrowth>) {
          return v.mu + v.sigma * rng.next_normal();
        } else if constexpr (std::is_same_v<T, FiniteDiscrete>) {
          const int i = rng.next_discrete(v.probs.data(), static_cast<int>(v.probs.size()));
          return v.values[i];
        } else {
          double y;
          if (const auto* gz = std::get_if<Gaussian>(&v.base)) {
            y = std::sqrt(gz->variance) * rng.next_normal();
          } else {
            const auto& fd = std::get<FiniteDiscrete>(v.base);
            const int i = rng.next_discrete(fd.probs.data(), static_cast<int>(fd.probs.size()));
            y = fd.values[i];
          }
          return v.location + v.scale * y;
        }
      },
      d);
}

}  // namespace stoptail

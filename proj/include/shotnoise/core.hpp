#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shotnoise {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt2Pi = 2.5066282746310002;  // sqrt(2*pi)

/// Closed interval [lo, hi] on the time axis.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] constexpr double length() const { return hi - lo; }
  [[nodiscard]] constexpr bool contains(double t) const { return lo <= t && t <= hi; }
  [[nodiscard]] constexpr bool contains(const Interval& other) const {
    return lo <= other.lo && other.hi <= hi;
  }
  [[nodiscard]] constexpr Interval expanded(double by) const { return {lo - by, hi + by}; }
  [[nodiscard]] constexpr Interval hull(const Interval& other) const {
    return {std::min(lo, other.lo), std::max(hi, other.hi)};
  }
  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

// Error taxonomy. Every error carries a category so the CLI can map it to an
// exit code without string matching.
enum class ErrorCategory {
  parameter,     // bad input values (negative intensity, inverted window, ...)
  capability,    // operation not supported by this kernel / impulse law
  infeasible,    // rejection sampler acceptance below the floor
  window,        // configuration window too small for the requested certificate
  accuracy,      // quadrature did not reach tolerance
  degeneracy,    // stationary-phase hypotheses violated numerically
  resolution,    // spectral grid too coarse
  integrability, // moment request not integrable
  tracking,      // extrema tracking could not continue
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& w) : Error(ErrorCategory::parameter, w) {}
};

class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& w) : Error(ErrorCategory::capability, w) {}
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& w, double acceptance)
      : Error(ErrorCategory::infeasible, w), acceptance_(acceptance) {}
  [[nodiscard]] double acceptance_probability() const noexcept { return acceptance_; }

 private:
  double acceptance_;
};

class WindowError : public Error {
 public:
  explicit WindowError(const std::string& w) : Error(ErrorCategory::window, w) {}
};

class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& w, double achieved)
      : Error(ErrorCategory::accuracy, w), achieved_(achieved) {}
  [[nodiscard]] double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class DegeneracyError : public Error {
 public:
  explicit DegeneracyError(const std::string& w) : Error(ErrorCategory::degeneracy, w) {}
};

class ResolutionError : public Error {
 public:
  explicit ResolutionError(const std::string& w) : Error(ErrorCategory::resolution, w) {}
};

class IntegrabilityError : public Error {
 public:
  explicit IntegrabilityError(const std::string& w) : Error(ErrorCategory::integrability, w) {}
};

class TrackingError : public Error {
 public:
  explicit TrackingError(const std::string& w) : Error(ErrorCategory::tracking, w) {}
};

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ParameterError(message);
}

// Pairwise (tree) summation in a fixed order; deterministic for a given input.
inline double pairwise_sum(std::span<const double> x) {
  constexpr std::size_t kBlock = 8;
  if (x.size() <= kBlock) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

}  // namespace detail

/// Parsed "name:key=value,key=value" selector used for kernels and impulse laws.
struct SpecString {
  std::string name;
  std::map<std::string, double> params;

  [[nodiscard]] double get(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

inline SpecString parse_spec_string(const std::string& text) {
  SpecString out;
  const auto colon = text.find(':');
  out.name = text.substr(0, colon);
  if (out.name.empty()) throw ParameterError("empty selector: '" + text + "'");
  if (colon == std::string::npos) return out;
  std::string rest = text.substr(colon + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    const auto comma = rest.find(',', pos);
    const std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ParameterError("malformed parameter '" + item + "' in '" + text + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != val.size()) throw ParameterError("bad number '" + val + "' in '" + text + "'");
    out.params[key] = x;
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

/// Uniform grid of n+1 nodes spanning [lo, hi] exactly, with step <= max_step.
inline std::vector<double> uniform_grid(const Interval& iv, double max_step) {
  detail::require(max_step > 0.0, "grid step must be positive");
  detail::require(iv.lo <= iv.hi, "grid interval is inverted");
  const double len = iv.length();
  const auto n = len == 0.0
                     ? std::size_t{0}
                     : static_cast<std::size_t>(std::ceil(len / max_step - 1e-9));
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    t[i] = n == 0 ? iv.lo : iv.lo + len * static_cast<double>(i) / static_cast<double>(n);
  if (n > 0) t.back() = iv.hi;
  return t;
}

}  // namespace shotnoise

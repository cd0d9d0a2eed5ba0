#pragma once

// Flat key = value experiment configs and CSV emission.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crossings.hpp"
#include "paths.hpp"
#include "scalespace.hpp"
#include "spectral.hpp"

namespace shotnoise {

class IoError : public Error {
 public:
  explicit IoError(const std::string& w) : Error(ErrorCategory::io, w) {}
};

// Every known key with its default. Lists are comma separated; an empty value
// means "derive it" (levels from mean +- 4 sd, u_max from the variance).
inline const std::vector<std::pair<std::string, std::string>>& config_schema() {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"kernel", "gaussian:sigma=1"},
      {"impulses", "one"},
      {"lambda", "1"},
      {"a", "0"},
      {"b", "10"},
      {"h", "0"},  // 0: kernel scale / 20
      {"max_order", "2"},
      {"replications", "100"},
      {"seed", "2024"},
      {"threads", "0"},
      {"output", "shotnoise_out"},
      {"certificate", "1e-8"},
      {"levels", ""},
      {"level_count", "41"},
      {"normalize", "false"},
      {"length", "10"},      // L for C^(u)
      {"u_max", ""},
      {"u_points", "256"},
      {"phase_interval", "-1,2"},  // interval for the stationary-phase table
      {"sigma", "1"},
      {"sigma_grid", "0.25,0.5,1,2,4"},
      {"lambda_grid", "0.1,0.2,0.5,1,2,5,10"},
      {"rho_length", "100"},
      {"track_configs", "1"},
      {"profile", "quick"},
      {"criteria", ""},
  };
  return keys;
}

class ExperimentConfig {
 public:
  ExperimentConfig() {
    for (const auto& [k, v] : config_schema()) values_[k] = v;
  }

  /// Parses "key = value" lines; '#' starts a comment, "[section]" headers are ignored.
  static ExperimentConfig parse(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line = trim(line);
      if (line.empty() || line.front() == '[') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParameterError("config line " + std::to_string(no) + ": expected key = value");
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  /// Overrides one key; unknown keys are rejected.
  void set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ParameterError("unknown config key '" + key + "'");
    it->second = value;
  }

  /// "key=value" as given on a command line.
  void set_assignment(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParameterError("expected key=value, got '" + kv + "'");
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  /// Fully resolved text form in schema order; parse(to_text()) reproduces the config.
  [[nodiscard]] std::string to_text() const {
    std::string out;
    for (const auto& [k, _] : config_schema()) out += k + " = " + values_.at(k) + "\n";
    return out;
  }

  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }
  [[nodiscard]] const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ParameterError("unknown config key '" + key + "'");
    return it->second;
  }
  [[nodiscard]] bool empty(const std::string& key) const { return str(key).empty(); }

  [[nodiscard]] double num(const std::string& key) const { return to_double(key, str(key)); }

  [[nodiscard]] std::uint64_t u64(const std::string& key) const {
    const auto& s = str(key);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-')
      throw ParameterError("config key '" + key + "': expected a non-negative integer, got '" + s + "'");
    return v;
  }

  [[nodiscard]] bool flag(const std::string& key) const {
    const auto& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ParameterError("config key '" + key + "': expected true/false, got '" + s + "'");
  }

  [[nodiscard]] std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::string item;
    std::istringstream in(str(key));
    while (std::getline(in, item, ','))
      if (!trim(item).empty()) out.push_back(to_double(key, trim(item)));
    return out;
  }

  [[nodiscard]] Interval interval() const { return {num("a"), num("b")}; }

  [[nodiscard]] McOptions mc() const {
    McOptions m;
    m.master_seed = u64("seed");
    m.replications = u64("replications");
    m.threads = static_cast<unsigned>(u64("threads"));
    return m;
  }

  friend bool operator==(const ExperimentConfig& x, const ExperimentConfig& y) { return x.values_ == y.values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }
  static double to_double(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ParameterError("config key '" + key + "': bad number '" + s + "'");
    return v;
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// CSV

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw IoError("cannot write '" + path + "'");
    row_strings(header);
  }

  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  static std::string cell(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) { return std::to_string(v); }

  std::ofstream out_;
};

inline void write_path_csv(const std::string& file, const SamplePath& p) {
  detail::require(p.max_order >= 2, "path CSV needs derivatives up to order 2");
  std::vector<std::string> head{"t", "X", "dX", "d2X"};
  if (p.max_order >= 3) head.push_back("d3X");
  CsvWriter w(file, head);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.max_order >= 3)
      w.row(p.t[i], p.value(0, i), p.value(1, i), p.value(2, i), p.value(3, i));
    else
      w.row(p.t[i], p.value(0, i), p.value(1, i), p.value(2, i));
  }
}

inline void write_crossing_csv(const std::string& file, const CrossingCurve& c) {
  CsvWriter w(file, {"alpha", "C_mean", "C_se", "up_mean", "down_mean", "tangency_rate", "replications"});
  for (std::size_t i = 0; i < c.levels.size(); ++i)
    w.row(c.levels[i], c.mean[i], c.se[i], c.up_mean[i], c.down_mean[i], c.tangency_rate[i], c.replications);
}

inline void write_fourier_csv(const std::string& file, const SpectralCurve& c) {
  CsvWriter w(file, {"u", "re", "im", "quad_err"});
  for (std::size_t i = 0; i < c.size(); ++i) w.row(c.u[i], c.values[i].real(), c.values[i].imag(), c.error[i]);
}

inline const char* kind_name(RootKind k) {
  switch (k) {
    case RootKind::up: return "up";
    case RootKind::down: return "down";
    case RootKind::tangency: return "tangency";
    case RootKind::maximum: return "max";
    case RootKind::minimum: return "min";
    case RootKind::degenerate: return "degenerate";
  }
  return "?";
}

// One row per sample; event marks the first sample (initial / pair / entered)
// and the last one (end / exit).
inline void write_tracks_csv(const std::string& file, const TrackingResult& r) {
  CsvWriter w(file, {"track_id", "sigma", "t", "type", "event"});
  for (const auto& tr : r.tracks) {
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
      std::string ev;
      if (i == 0)
        ev = tr.birth == TrackBirth::initial ? "initial" : tr.birth == TrackBirth::pair ? "pair" : "entered";
      else if (i + 1 == tr.samples.size())
        ev = tr.end == TrackEnd::reached_min ? "end" : "exit";
      w.row(tr.id, tr.samples[i].sigma, tr.samples[i].t, std::string(kind_name(tr.type)), ev);
    }
  }
}

inline void write_rho_csv(const std::string& file, const RhoCurve& c, const std::string& axis) {
  CsvWriter w(file, {axis, "rho", "se", "n_reps"});
  for (std::size_t i = 0; i < c.axis.size(); ++i) w.row(c.axis[i], c.rho[i], c.se[i], c.replications);
}

}  // namespace shotnoise

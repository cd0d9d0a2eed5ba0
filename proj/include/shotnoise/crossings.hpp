#pragma once

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "core.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "paths.hpp"
#include "ppp.hpp"
#include "roots.hpp"
#include "stats.hpp"

namespace shotnoise {

inline constexpr double kRelTol = 1e-9;

enum class RootKind { up, down, tangency, maximum, minimum, degenerate };

struct RootLocation {
  double t = 0.0;
  RootKind kind = RootKind::up;
  double residual = 0.0;
};

/// Crossings of level alpha on [a,b].
struct CrossingTally {
  double level = 0.0;
  Interval interval;
  int up = 0;
  int down = 0;
  int tangency_suspect = 0;
  std::vector<RootLocation> locations;

  [[nodiscard]] int total() const { return up + down + tangency_suspect; }
};

struct ExtremaTally {
  int maxima = 0;
  int minima = 0;
  int degenerate = 0;
  std::vector<RootLocation> locations;

  [[nodiscard]] int total() const { return maxima + minima + degenerate; }
};

namespace detail {

// Function on the path used by the zero scanner: node values with their
// tolerances, and exact evaluation of the function and of its derivative.
// Node values may carry a positive per-node scale; only signs and the
// tolerance comparison are used at nodes.
struct ScanTarget {
  std::vector<double> f, ftol, df, dtol;
  std::function<double(double)> exact;
  std::function<double(double)> exact_d;
};

struct ScanRoot {
  double t;
  int slope;  // +1, -1, 0 for tangency-suspect runs
};

// Bracketed root by TOMS 748 (falls back to the bracket end when it is exact).
inline double bisect_to(const std::function<double(double)>& f, double lo, double hi, double flo, double fhi,
                        double tol) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  std::uintmax_t iters = 200;
  auto done = [tol](double a, double b) { return b - a <= tol; };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, done, iters);
  return 0.5 * (r.first + r.second);
}

inline std::vector<ScanRoot> scan_zeros(const std::vector<double>& t, const ScanTarget& s, double refine_tol) {
  const std::size_t n = t.size();
  std::vector<ScanRoot> roots;
  if (n == 0) return roots;
  std::vector<char> tang(n);
  for (std::size_t i = 0; i < n; ++i) tang[i] = std::abs(s.f[i]) <= s.ftol[i] && std::abs(s.df[i]) <= s.dtol[i];
  auto sgn = [](double v) { return (v > 0.0) - (v < 0.0); };
  for (std::size_t i = 0; i < n; ++i) {
    if (tang[i]) {
      if (i == 0 || !tang[i - 1]) roots.push_back({t[i], 0});
      continue;
    }
    if (s.f[i] == 0.0) {
      int sl = sgn(s.df[i]);
      if (sl == 0) sl = sgn(s.exact_d(t[i]));
      roots.push_back({t[i], sl});
    }
    if (i + 1 >= n || tang[i + 1]) continue;
    const double f0 = s.f[i], f1 = s.f[i + 1];
    if (f0 == 0.0 || f1 == 0.0) continue;
    if ((f0 > 0.0) != (f1 > 0.0)) {
      const double r = bisect_to(s.exact, t[i], t[i + 1], f0, f1, refine_tol);
      int sl = sgn(s.exact_d(r));
      if (sl == 0) sl = f1 > f0 ? 1 : -1;
      roots.push_back({r, sl});
      continue;
    }
    // same sign at both ends but the derivative changes sign: look for a
    // hidden pair of roots around the interior extremum
    const double d0 = s.df[i], d1 = s.df[i + 1];
    if (d0 == 0.0 || d1 == 0.0 || (d0 > 0.0) == (d1 > 0.0)) continue;
    const double tm = bisect_to(s.exact_d, t[i], t[i + 1], d0, d1, refine_tol);
    const double fm = s.exact(tm);
    if (fm == 0.0 || (fm > 0.0) == (f0 > 0.0)) continue;
    const double r1 = bisect_to(s.exact, t[i], tm, f0, fm, refine_tol);
    const double r2 = bisect_to(s.exact, tm, t[i + 1], fm, f1, refine_tol);
    roots.push_back({r1, f0 > 0.0 ? -1 : 1});
    roots.push_back({r2, f0 > 0.0 ? 1 : -1});
  }
  std::stable_sort(roots.begin(), roots.end(), [](const ScanRoot& a, const ScanRoot& b) { return a.t < b.t; });
  return roots;
}

}  // namespace detail

// Crossings of level alpha: sign changes of X - alpha on the grid, refined by
// bisection on the exact path to refine_tol and classified by the sign of X'.
// Maximal runs of nodes with |X - alpha| and |X'| both below 1e-9 of the local
// magnitude (sum of absolute terms) count once as tangency-suspect.
inline CrossingTally count_crossings(const SamplePath& path, double alpha, double refine_tol = -1.0) {
  CrossingTally tally;
  tally.level = alpha;
  tally.interval = path.interval;
  const std::size_t n = path.size();
  if (n == 0) return tally;
  if (path.max_order < 1) throw CapabilityError("crossing classification needs X'");
  if (refine_tol <= 0.0) refine_tol = path.h * 1e-6;
  const bool raw = alpha == 0.0 && !path.normalized;
  detail::ScanTarget s;
  s.f.resize(n);
  s.ftol.resize(n);
  s.df.resize(n);
  s.dtol.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (raw) {
      s.f[i] = path.d[0][i];
      s.ftol[i] = kRelTol * path.scaled_magnitude(0, i);
    } else {
      s.f[i] = path.value(0, i) - alpha;
      s.ftol[i] = kRelTol * path.magnitude(0, i);
    }
    s.df[i] = path.d[1][i];
    s.dtol[i] = kRelTol * path.scaled_magnitude(1, i);
  }
  std::array<double, kMaxOrder + 1> buf{};
  s.exact = [&](double x) {
    const double sh = path.eval(x, 1, buf.data());
    return raw ? buf[0] : (sh == 0.0 ? buf[0] : buf[0] * std::exp(-sh)) - alpha;
  };
  s.exact_d = [&](double x) {
    path.eval(x, 1, buf.data());
    return buf[1];
  };
  for (const auto& r : detail::scan_zeros(path.t, s, refine_tol)) {
    RootLocation loc{r.t, r.slope > 0 ? RootKind::up : r.slope < 0 ? RootKind::down : RootKind::tangency, 0.0};
    const double sh = path.eval(r.t, 0, buf.data());
    loc.residual = std::abs((sh == 0.0 ? buf[0] : buf[0] * std::exp(-sh)) - alpha);
    if (r.slope > 0)
      ++tally.up;
    else if (r.slope < 0)
      ++tally.down;
    else
      ++tally.tangency_suspect;
    tally.locations.push_back(loc);
  }
  return tally;
}

// Zeros of X' classified by the sign of X''; near-degenerate runs (|X'| and
// |X''| both below tolerance) are counted separately.
inline ExtremaTally count_extrema(const SamplePath& path, double refine_tol = -1.0) {
  ExtremaTally tally;
  const std::size_t n = path.size();
  if (n == 0) return tally;
  if (path.max_order < 2) throw CapabilityError("extrema classification needs X''");
  if (refine_tol <= 0.0) refine_tol = path.h * 1e-6;
  detail::ScanTarget s;
  s.f.resize(n);
  s.ftol.resize(n);
  s.df.resize(n);
  s.dtol.resize(n);
  const bool shifted_offset = path.normalized && path.offset[1] != 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.f[i] = shifted_offset ? path.value(1, i) : path.d[1][i];
    s.ftol[i] = kRelTol * (shifted_offset ? path.magnitude(1, i) : path.scaled_magnitude(1, i));
    s.df[i] = path.d[2][i];
    s.dtol[i] = kRelTol * path.scaled_magnitude(2, i);
  }
  std::array<double, kMaxOrder + 1> buf{};
  s.exact = [&](double x) {
    path.eval(x, 2, buf.data());
    return buf[1];
  };
  s.exact_d = [&](double x) {
    path.eval(x, 2, buf.data());
    return buf[2];
  };
  for (const auto& r : detail::scan_zeros(path.t, s, refine_tol)) {
    RootKind k = RootKind::degenerate;
    if (r.slope < 0) {
      k = RootKind::maximum;
      ++tally.maxima;
    } else if (r.slope > 0) {
      k = RootKind::minimum;
      ++tally.minima;
    } else {
      ++tally.degenerate;
    }
    const double sh = path.eval(r.t, 1, buf.data());
    tally.locations.push_back({r.t, k, std::abs(sh == 0.0 ? buf[1] : buf[1] * std::exp(-sh))});
  }
  return tally;
}

/// True when consecutive classified roots alternate (up/down or max/min); tangency runs break the check.
inline bool alternates(const std::vector<RootLocation>& locs) {
  for (std::size_t i = 1; i < locs.size(); ++i) {
    const auto a = locs[i - 1].kind, b = locs[i].kind;
    if (a == RootKind::tangency || a == RootKind::degenerate || b == RootKind::tangency || b == RootKind::degenerate)
      return false;
    if (a == b) return false;
  }
  return true;
}

// Kac's smoothed count (1/2 delta) int 1{|X - alpha| < delta} |X'| dt, taken
// exactly over the piecewise-linear interpolant of X: on each cell the
// integral equals the length of [min, max] intersected with the band.
inline double kac_estimate(const SamplePath& path, double alpha, double delta) {
  detail::require(delta > 0.0, "Kac half-width must be positive");
  const double lo = alpha - delta, hi = alpha + delta;
  std::vector<double> piece(path.size() > 0 ? path.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double x0 = path.value(0, i), x1 = path.value(0, i + 1);
    const double a = std::max(std::min(x0, x1), lo);
    const double b = std::min(std::max(x0, x1), hi);
    piece[i] = b > a ? b - a : 0.0;
  }
  return detail::pairwise_sum(piece) / (2.0 * delta);
}

namespace detail {

// Monotone pieces of the path: each cell contributes [x_i, x_{i+1}], split at
// an interior extremum when X' changes sign inside the cell (extremum value
// from the cubic Hermite interpolant).
struct Piece {
  double from, to;
};

inline std::vector<Piece> monotone_pieces(const SamplePath& path) {
  std::vector<Piece> out;
  const std::size_t n = path.size();
  out.reserve(n + n / 8);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double x0 = path.value(0, i), x1 = path.value(0, i + 1);
    const double s0 = path.d[1][i], s1 = path.d[1][i + 1];
    if (s0 != 0.0 && s1 != 0.0 && (s0 > 0.0) != (s1 > 0.0)) {
      const double v0 = path.value(1, i), v1 = path.value(1, i + 1);
      // derivative of the Hermite cubic is quadratic in u; find its root in (0,1)
      const double h = path.h;
      const double a = 3.0 * (2.0 * x0 + h * v0 - 2.0 * x1 + h * v1);
      const double b = 2.0 * (-3.0 * x0 - 2.0 * h * v0 + 3.0 * x1 - h * v1);
      const double c = h * v0;
      double u = 0.5;
      if (std::abs(a) > 1e-300) {
        const double disc = std::max(b * b - 4.0 * a * c, 0.0);
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        const double r1 = q / a;
        const double r2 = q != 0.0 ? c / q : r1;
        u = (r1 > 0.0 && r1 < 1.0) ? r1 : r2;
      } else if (b != 0.0) {
        u = -c / b;
      }
      u = std::clamp(u, 0.0, 1.0);
      const double xm = hermite_interp(x0, x1, v0, v1, h, u * h);
      out.push_back({x0, xm});
      out.push_back({xm, x1});
    } else {
      out.push_back({x0, x1});
    }
  }
  return out;
}

}  // namespace detail

// Trapezoid quadrature of |X'| over the grid. Cells where X' changes sign
// contain an extremum, where |X'| has a kink; there the cell contributes
// |X(tm) - X(t0)| + |X(t1) - X(tm)| with tm from the cubic Hermite interpolant.
inline double total_variation(const SamplePath& path) {
  if (path.size() < 2) return 0.0;
  const auto pieces = detail::monotone_pieces(path);
  std::vector<double> piece;
  piece.reserve(path.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double s0 = path.d[1][i], s1 = path.d[1][i + 1];
    if (s0 != 0.0 && s1 != 0.0 && (s0 > 0.0) != (s1 > 0.0)) {
      piece.push_back(std::abs(pieces[j].to - pieces[j].from));
      piece.push_back(std::abs(pieces[j + 1].to - pieces[j + 1].from));
      j += 2;
    } else {
      piece.push_back(0.5 * path.h * (std::abs(path.value(1, i)) + std::abs(path.value(1, i + 1))));
      ++j;
    }
  }
  return detail::pairwise_sum(piece);
}

struct LevelCounts {
  std::vector<int> total, up, down;
};

// Counts for many levels at once from the monotone pieces: a piece from x to
// y crosses every level in (min, max].
inline LevelCounts tally_levels(const SamplePath& path, const std::vector<double>& levels,
                                double offset = 0.0, double gain = 1.0) {
  const std::size_t m = levels.size();
  LevelCounts out{std::vector<int>(m, 0), std::vector<int>(m, 0), std::vector<int>(m, 0)};
  if (m == 0) return out;
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  std::vector<double> sorted(m);
  for (std::size_t i = 0; i < m; ++i) sorted[i] = levels[order[i]];
  std::vector<int> dup(m + 1, 0), ddown(m + 1, 0);
  for (const auto& p : detail::monotone_pieces(path)) {
    const double a = (p.from - offset) * gain, b = (p.to - offset) * gain;
    if (a == b) continue;
    const double lo = std::min(a, b), hi = std::max(a, b);
    const auto i0 = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), lo) - sorted.begin());
    const auto i1 = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), hi) - sorted.begin());
    if (i0 >= i1) continue;
    auto& d = b > a ? dup : ddown;
    d[i0] += 1;
    d[i1] -= 1;
  }
  int cu = 0, cd = 0;
  for (std::size_t i = 0; i < m; ++i) {
    cu += dup[i];
    cd += ddown[i];
    out.up[order[i]] = cu;
    out.down[order[i]] = cd;
    out.total[order[i]] = cu + cd;
  }
  return out;
}

struct Conditioning {
  double T = 0.0;
  std::uint64_t k0 = 0;
};

struct CrossingCurve {
  std::vector<double> levels;
  std::vector<double> mean, se;           // crossings in [a,b] per replication
  std::vector<double> up_mean, down_mean;
  std::vector<double> tangency_rate;
  std::vector<double> second_moment;      // empirical E N^2 (reported only)
  std::size_t replications = 0;
  double length = 0.0;
  Estimate total_variation;               // mean of int_a^b |X'| per replication
  double max_abs_level = 0.0;             // largest |X| seen (in the reported units)
  bool normalized = false;

  /// Per-unit-length rate and its standard error.
  [[nodiscard]] double rate(std::size_t i) const { return mean[i] / length; }
  [[nodiscard]] double rate_se(std::size_t i) const { return se[i] / length; }
};

struct CurveOptions {
  double h = 0.0;                       // grid step (default scale/20)
  bool normalize = false;               // levels refer to Z = (X - EX)/sqrt(lambda)
  std::optional<Conditioning> conditioning;
  double eps = kDefaultCertificate;
};

// Monte Carlo mean-crossings curve on [a,b] over a level grid, with per-level
// standard errors. When conditioning is set, points in [-T,T] are drawn from
// the count-conditioned law and the rest of the window unconditionally.
inline CrossingCurve mc_crossing_curve(double lambda, const KernelModel& kernel, const ImpulseSpec& impulses,
                                       const std::vector<double>& levels, const Interval& iv, const McOptions& mc,
                                       const CurveOptions& opt = {}) {
  detail::require(mc.replications >= 1, "need at least one replication");
  const double h = opt.h > 0.0 ? opt.h : kernel.scale() / 20.0;
  const double T = detail::certified_radius(kernel, 1, lambda, impulses.mean_abs(), opt.eps);
  Interval window = iv.expanded(T);
  if (opt.conditioning) window = window.hull({-opt.conditioning->T, opt.conditioning->T});
  const double offset = opt.normalize ? lambda * impulses.mean() * kernel.integral(0) : 0.0;
  const double gain = opt.normalize ? 1.0 / std::sqrt(lambda) : 1.0;
  struct Rep {
    LevelCounts counts;
    double tv = 0.0;
    double max_abs = 0.0;
  };
  auto reps = parallel_map(mc.replications, mc.threads, [&](std::size_t r) {
    auto rng = mc.stream(r);
    PointConfiguration cfg;
    if (opt.conditioning) {
      const Interval inner{-opt.conditioning->T, opt.conditioning->T};
      auto crng = rng.child(1);
      auto in = sample_conditional(lambda, inner, opt.conditioning->k0, impulses, crng);
      auto out = sample_ppp(lambda, window, impulses, rng);
      cfg = splice(in, out);
    } else {
      cfg = sample_ppp(lambda, window, impulses, rng);
    }
    auto path = evaluate_path(std::make_shared<const PointConfiguration>(std::move(cfg)), kernel, iv, h, 1, opt.eps);
    Rep rep;
    rep.counts = tally_levels(path, levels, offset, gain);
    rep.tv = total_variation(path) * gain;
    for (std::size_t i = 0; i < path.size(); ++i)
      rep.max_abs = std::max(rep.max_abs, std::abs((path.value(0, i) - offset) * gain));
    return rep;
  });
  CrossingCurve c;
  c.levels = levels;
  c.replications = mc.replications;
  c.length = iv.length();
  c.normalized = opt.normalize;
  const std::size_t m = levels.size();
  c.mean.resize(m);
  c.se.resize(m);
  c.up_mean.resize(m);
  c.down_mean.resize(m);
  c.tangency_rate.assign(m, 0.0);
  c.second_moment.resize(m);
  std::vector<double> col(reps.size()), sq(reps.size()), tv(reps.size());
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t r = 0; r < reps.size(); ++r) {
      col[r] = reps[r].counts.total[l];
      sq[r] = col[r] * col[r];
    }
    const auto e = mean_se(col);
    c.mean[l] = e.value;
    c.se[l] = e.se;
    c.second_moment[l] = mean_se(sq).value;
    for (std::size_t r = 0; r < reps.size(); ++r) col[r] = reps[r].counts.up[l];
    c.up_mean[l] = mean_se(col).value;
    for (std::size_t r = 0; r < reps.size(); ++r) col[r] = reps[r].counts.down[l];
    c.down_mean[l] = mean_se(col).value;
  }
  for (std::size_t r = 0; r < reps.size(); ++r) {
    tv[r] = reps[r].tv;
    c.max_abs_level = std::max(c.max_abs_level, reps[r].max_abs);
  }
  c.total_variation = mean_se(tv);
  return c;
}

/// Trapezoid integral of the mean count over the level grid.
inline double integrate_over_levels(const std::vector<double>& levels, const std::vector<double>& values) {
  double s = 0.0;
  for (std::size_t i = 1; i < levels.size(); ++i) s += 0.5 * (levels[i] - levels[i - 1]) * (values[i] + values[i - 1]);
  return s;
}

struct RolleReport {
  bool pass = true;
  int extrema = 0;
  std::vector<double> violating_levels;
  std::vector<int> crossings;
};

/// Checks N_X(alpha) <= N_X'(0) + 1 for each level on the path.
inline RolleReport rolle_check(const SamplePath& path, const std::vector<double>& levels) {
  RolleReport rep;
  rep.extrema = count_extrema(path).total();
  for (double a : levels) {
    const int c = count_crossings(path, a).total();
    rep.crossings.push_back(c);
    if (c > rep.extrema + 1) {
      rep.pass = false;
      rep.violating_levels.push_back(a);
    }
  }
  return rep;
}

/// Root bound sum(deg P_i) + n - 1 for sum_i P_i(t) e^{a_i t} with distinct a_i.
inline long exp_poly_root_bound(const std::vector<int>& degrees) {
  if (degrees.empty()) return 0;
  long s = 0;
  for (int d : degrees) {
    detail::require(d >= 0, "polynomial degrees must be non-negative");
    s += d;
  }
  return s + static_cast<long>(degrees.size()) - 1;
}

/// Zeros of X' for n unit Gaussian bumps: 2n - 1.
inline long exp_poly_extrema_bound(std::size_t n) { return n == 0 ? 0 : exp_poly_root_bound(std::vector<int>(n, 1)); }

/// Zeros of X'' for n unit Gaussian bumps: 3n - 1.
inline long exp_poly_inflection_bound(std::size_t n) {
  return n == 0 ? 0 : exp_poly_root_bound(std::vector<int>(n, 2));
}

}  // namespace shotnoise

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "crossings.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "paths.hpp"
#include "ppp.hpp"
#include "stats.hpp"

namespace shotnoise {

/// Upper bound on the extrema rate for unit impulses, (3 lambda (2 + 2 sigma) + 1) e^lambda.
inline double extrema_rate_bound(double lambda, double sigma) {
  return (3.0 * lambda * (2.0 + 2.0 * sigma) + 1.0) * std::exp(lambda);
}

/// (1/(sigma pi)) sqrt(3/2): high-intensity limit of the extrema rate.
inline double extrema_rate_limit(double sigma) { return std::sqrt(1.5) / (sigma * kPi); }

struct RhoEstimate {
  double rho = 0.0;
  double se = 0.0;
  std::size_t replications = 0;
  double length = 0.0;
  double max_rate = 0.0;       // largest per-replication count / length
  double bound = 0.0;          // extrema_rate_bound(lambda, sigma)
  std::size_t bound_violations = 0;
  std::size_t degenerate = 0;  // extrema flagged |X''| ~ 0
};

struct RhoCurve {
  std::vector<double> axis;  // sigma or lambda values
  std::vector<double> rho;
  std::vector<double> se;
  std::size_t replications = 0;
  double length = 0.0;
};

namespace detail {

inline Interval buffered_window(const KernelModel& g, double lambda, const Interval& iv) {
  return iv.expanded(certified_radius(g, 2, lambda, 1.0, kDefaultCertificate) + g.scale());
}

inline int extrema_on(const PointConfiguration& cfg, const KernelModel& g, const Interval& iv, std::size_t* degenerate,
                      double refine_tol = -1.0) {
  auto p = evaluate_path(cfg, g, iv, g.scale() / 20.0, 2);
  const auto e = count_extrema(p, refine_tol);
  if (degenerate) *degenerate += static_cast<std::size_t>(e.degenerate);
  return e.total();
}

}  // namespace detail

// Mean number of local extrema per unit length for unit impulses and a Gaussian
// kernel of width sigma, from counts on [a,b] (window buffered by the certified radius).
inline RhoEstimate rho_estimate(double lambda, double sigma, const Interval& iv, const McOptions& mc) {
  detail::require(lambda > 0.0 && sigma > 0.0, "rho needs lambda, sigma > 0");
  detail::require(iv.length() > 0.0, "rho needs an interval of positive length");
  const auto g = gaussian_kernel(sigma);
  const Interval window = detail::buffered_window(g, lambda, iv);
  struct Rep {
    double count = 0.0;
    std::size_t degenerate = 0;
  };
  auto reps = parallel_map(mc.replications, mc.threads, [&](std::size_t r) {
    auto rng = mc.stream(r);
    const auto cfg = sample_ppp(lambda, window, ImpulseSpec::one(), rng);
    Rep out;
    out.count = detail::extrema_on(cfg, g, iv, &out.degenerate);
    return out;
  });
  RhoEstimate est;
  est.replications = mc.replications;
  est.length = iv.length();
  est.bound = extrema_rate_bound(lambda, sigma);
  std::vector<double> rates;
  rates.reserve(reps.size());
  for (const auto& r : reps) {
    const double rate = r.count / iv.length();
    rates.push_back(rate);
    est.max_rate = std::max(est.max_rate, rate);
    if (rate > est.bound) ++est.bound_violations;
    est.degenerate += r.degenerate;
  }
  const auto m = mean_se(rates);
  est.rho = m.value;
  est.se = m.se;
  return est;
}

/// rho over a lambda grid at fixed sigma. Each point uses its own seed block.
inline RhoCurve rho_lambda_sweep(const std::vector<double>& lambdas, double sigma, double L, const McOptions& mc) {
  RhoCurve c;
  c.replications = mc.replications;
  c.length = L;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    McOptions m = mc;
    m.master_seed = mc.master_seed + 7919 * i;
    const auto e = rho_estimate(lambdas[i], sigma, {0.0, L}, m);
    c.axis.push_back(lambdas[i]);
    c.rho.push_back(e.rho);
    c.se.push_back(e.se);
  }
  return c;
}

struct ScalingCheck {
  double lhs = 0.0;  // c rho(lambda, c sigma)
  double rhs = 0.0;  // rho(c lambda, sigma)
  double combined_se = 0.0;
  bool pass = false;
};

// c rho(lambda, c sigma) against rho(c lambda, sigma), independent seeds per side.
// Each side counts on [0, L] with L = max(L_min, 50 x its sigma), rescaled to unit length.
inline ScalingCheck scaling_check(double lambda, double sigma, double c, const McOptions& mc, double L_min = 0.0) {
  detail::require(c > 0.0, "scaling factor must be positive");
  McOptions a = mc, b = mc;
  b.master_seed = mc.master_seed ^ 0x5bd1e995u;
  const auto left = rho_estimate(lambda, c * sigma, {0.0, std::max(L_min, 50.0 * c * sigma)}, a);
  const auto right = rho_estimate(c * lambda, sigma, {0.0, std::max(L_min, 50.0 * sigma)}, b);
  ScalingCheck s;
  s.lhs = c * left.rho;
  s.rhs = right.rho;
  s.combined_se = std::hypot(c * left.se, right.se);
  s.pass = std::abs(s.lhs - s.rhs) <= 3.0 * s.combined_se;
  return s;
}

struct SemigroupCheck {
  double deviation = 0.0;  // sup |direct - convolved| over the grid
  double peak = 0.0;       // sup |direct|
  std::size_t points = 0;
};

// X at width sqrt(s1^2 + s2^2) evaluated directly, against the width-s1 path
// convolved with g_{s2} by the trapezoid rule on a grid of step h. The s1-path is
// evaluated on [a - R, b + R], R = 12 s2, so the configuration window must cover
// that plus the certified radius.
inline SemigroupCheck semigroup_check(const PointConfiguration& cfg, double s1, double s2, const Interval& iv,
                                      double h) {
  detail::require(s1 > 0.0 && s2 > 0.0 && h > 0.0, "semigroup check needs positive widths and step");
  const auto g1 = gaussian_kernel(s1);
  const auto g2 = gaussian_kernel(s2);
  const auto g12 = gaussian_kernel(std::hypot(s1, s2));
  const auto m = static_cast<std::size_t>(std::ceil(12.0 * s2 / h));
  const double R = static_cast<double>(m) * h;
  const std::size_t n = static_cast<std::size_t>(std::llround(iv.length() / h));
  const Interval wide{iv.lo - R, iv.lo + static_cast<double>(n) * h + R};
  auto base = evaluate_path(cfg, g1, wide, h, 0);
  auto direct = evaluate_path(cfg, g12, {iv.lo, iv.lo + static_cast<double>(n) * h}, h, 0);
  detail::require(base.size() == n + 2 * m + 1 && direct.size() == n + 1, "semigroup grid mismatch");
  std::vector<double> w(2 * m + 1);
  for (std::size_t k = 0; k <= 2 * m; ++k) {
    const double s = (static_cast<double>(k) - static_cast<double>(m)) * h;
    w[k] = h * g2(0, s) * (k == 0 || k == 2 * m ? 0.5 : 1.0);
  }
  SemigroupCheck out;
  out.points = n + 1;
  for (std::size_t i = 0; i <= n; ++i) {
    double conv = 0.0;
    for (std::size_t k = 0; k <= 2 * m; ++k) conv += w[k] * base.value(0, i + 2 * m - k);
    const double d = direct.value(0, i);
    out.deviation = std::max(out.deviation, std::abs(conv - d));
    out.peak = std::max(out.peak, std::abs(d));
  }
  return out;
}

/// Samples of X_{lambda/c, c sigma}(0) and (1/c) X_{lambda, sigma}(0) with a two-sample KS test.
inline KsResult scaling_law_ks(double lambda, double sigma, double c, const McOptions& mc) {
  detail::require(lambda > 0.0 && sigma > 0.0 && c > 0.0, "scaling law needs positive parameters");
  auto draw = [&](double lam, double sig, double factor, std::uint64_t salt) {
    const auto g = gaussian_kernel(sig);
    const Interval w = detail::buffered_window(g, lam, {0.0, 0.0});
    McOptions m = mc;
    m.master_seed = mc.master_seed ^ salt;
    return parallel_map(mc.replications, mc.threads, [&](std::size_t r) {
      auto rng = m.stream(r);
      const auto cfg = sample_ppp(lam, w, ImpulseSpec::one(), rng);
      return factor * evaluate_path(cfg, g, {0.0, 0.0}, 1.0, 0).value(0, 0);
    });
  };
  return ks_two_sample(draw(lambda / c, c * sigma, 1.0, 0x1234567u), draw(lambda, sigma, 1.0 / c, 0x7654321u));
}

// ---------------------------------------------------------------------------
// Extrema tracking across scales

struct TrackSample {
  double sigma = 0.0;
  double t = 0.0;
};

enum class TrackBirth { initial, pair, entered };
enum class TrackEnd { reached_min, left_interval };

struct ExtremaTrack {
  int id = 0;
  RootKind type = RootKind::maximum;
  std::vector<TrackSample> samples;  // sigma strictly decreasing
  double birth_sigma = 0.0;          // largest sigma where the track exists
  TrackBirth birth = TrackBirth::initial;
  int partner = -1;                  // the other track of a pair birth
  TrackEnd end = TrackEnd::reached_min;
  double end_sigma = 0.0;
};

struct TrackingOptions {
  double rel_step = 1.0 / 50.0;  // d sigma = rel_step * sigma
  int max_halvings = 8;
  double refine_tol = 1e-9;
  double grid_rel = 1.0 / 20.0;  // path grid step = grid_rel * sigma
  std::vector<double> levels;    // sigma values the stepping must land on
  std::optional<double> probe;   // t whose sigma-crossings X'_sigma(t) = 0 are counted
};

struct TrackingResult {
  std::vector<ExtremaTrack> tracks;
  std::vector<double> sigma;  // every visited level, decreasing
  std::vector<int> live;      // live track count at each visited level
  int halvings = 0;
  int pair_births = 0;
  int branch_points = 0;      // tracks continued past a pair born beside them
  double max_speed = 0.0;     // max |dt| / d sigma over all steps (continuity constant)
  int probe_crossings = 0;

  /// Live count at a visited level (exact match of sigma), or -1.
  [[nodiscard]] int live_at(double s) const {
    for (std::size_t i = 0; i < sigma.size(); ++i)
      if (sigma[i] == s) return live[i];
    return -1;
  }
};

namespace detail {

struct Level {
  double sigma = 0.0;
  SamplePath path;
  std::vector<RootLocation> zeros;
};

inline Level scan_level(const PointConfiguration& cfg, const Interval& iv, double sigma, const TrackingOptions& opt) {
  Level l;
  l.sigma = sigma;
  l.path = evaluate_path(cfg, gaussian_kernel(sigma), iv, opt.grid_rel * sigma, 2);
  l.zeros = count_extrema(l.path, opt.refine_tol).locations;
  return l;
}

// dt/d sigma along X'_sigma(t) = 0, from the heat equation d X'/d sigma = sigma X'''.
inline double track_speed(const SamplePath& p, double t, double sigma) {
  std::array<double, kMaxOrder + 1> j{};
  p.evaluator->eval(t, 3, j.data());
  return j[2] == 0.0 ? std::numeric_limits<double>::infinity() : -sigma * j[3] / j[2];
}

inline std::string fmt(double x) { return std::to_string(x); }

}  // namespace detail

// Follows every zero of X' on [a,b] from sigma_max down to sigma_min for a fixed
// configuration (unit kernel weights as given by the configuration's impulses).
// Each step predicts t - (dt/d sigma) d sigma, rescans the path at the new sigma and
// matches zeros to predictions by nearest neighbour within 3 v d sigma + 10 refine_tol
// (same type required), v the larger |dt/d sigma| of the track and the candidate:
// where dt/d sigma passes through 0 the one-sided radius collapses to the tolerance. Unmatched zeros become pair births (adjacent,
// opposite types) or boundary entries (outermost zeros); a failed match halves
// d sigma down to d sigma / 2^max_halvings, then throws TrackingError.
inline TrackingResult track_extrema(const PointConfiguration& cfg, double sigma_min, double sigma_max,
                                    const Interval& iv, const TrackingOptions& opt = {}) {
  detail::require(sigma_min > 0.0 && sigma_min <= sigma_max, "need 0 < sigma_min <= sigma_max");
  detail::require(opt.rel_step > 0.0 && opt.rel_step < 1.0, "rel_step must lie in (0,1)");
  std::vector<double> levels;
  for (double s : opt.levels)
    if (s > sigma_min && s < sigma_max) levels.push_back(s);
  levels.push_back(sigma_min);
  std::sort(levels.rbegin(), levels.rend());

  TrackingResult res;
  auto cur = detail::scan_level(cfg, iv, sigma_max, opt);
  std::vector<int> live;  // track indices, ordered by t
  std::vector<double> speed;
  for (const auto& z : cur.zeros) {
    if (z.kind == RootKind::degenerate)
      throw TrackingError("degenerate extremum at the starting scale sigma=" + detail::fmt(sigma_max));
    ExtremaTrack tr;
    tr.id = static_cast<int>(res.tracks.size());
    tr.type = z.kind;
    tr.birth_sigma = sigma_max;
    tr.samples.push_back({sigma_max, z.t});
    live.push_back(tr.id);
    speed.push_back(detail::track_speed(cur.path, z.t, sigma_max));
    res.tracks.push_back(std::move(tr));
  }
  res.sigma.push_back(sigma_max);
  res.live.push_back(static_cast<int>(live.size()));

  std::size_t next_level = 0;
  while (cur.sigma > sigma_min) {
    const double target = levels[next_level];
    const double full = std::max(opt.rel_step * cur.sigma, 0.0);
    double ds = std::min(full, cur.sigma - target);
    const double ds_full = ds;
    const double ds_min = ds / std::ldexp(1.0, opt.max_halvings);
    bool last_try = false;
    for (int attempt = 0;; ++attempt) {
      const double sn = std::max(cur.sigma - ds, target);
      auto next = detail::scan_level(cfg, iv, sn, opt);
      const double step = cur.sigma - sn;
      const auto& zs = next.zeros;
      std::vector<double> vz(zs.size());
      for (std::size_t i = 0; i < zs.size(); ++i) vz[i] = detail::track_speed(next.path, zs[i].t, sn);
      std::vector<int> owner(zs.size(), -1);  // zero -> live slot
      std::vector<int> match(live.size(), -1);
      std::vector<bool> leaves(live.size(), false);
      std::vector<std::tuple<std::size_t, double, double>> lost;  // slot, prediction, radius
      bool ok = true;
      std::string why;
      for (const auto& z : zs)
        if (z.kind == RootKind::degenerate) {
          ok = false;
          why = "degenerate extremum near t=" + detail::fmt(z.t);
        }
      for (std::size_t k = 0; ok && k < live.size(); ++k) {
        const auto& tr = res.tracks[static_cast<std::size_t>(live[k])];
        const double t0 = tr.samples.back().t;
        const double v = speed[k];
        if (!std::isfinite(v)) {
          ok = false;
          why = "near-turning-point (X'' = 0) at t=" + detail::fmt(t0);
          break;
        }
        const double pred = t0 - v * step;
        const double radius = 3.0 * std::abs(v) * step + 10.0 * opt.refine_tol;
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < zs.size(); ++i) {
          const double d = std::abs(zs[i].t - pred);
          const double r = 3.0 * std::max(std::abs(v), std::abs(vz[i])) * step + 10.0 * opt.refine_tol;
          if (zs[i].kind == tr.type && d <= r && d < bd) {
            bd = d;
            best = static_cast<int>(i);
          }
        }
        if (best < 0) {
          if (pred - radius < iv.lo || pred + radius > iv.hi) {
            leaves[k] = true;
            continue;
          }
          lost.emplace_back(k, pred, radius);
          continue;
        }
        if (owner[static_cast<std::size_t>(best)] >= 0) {
          ok = false;
          why = "two tracks predicted onto one zero near t=" + detail::fmt(zs[static_cast<std::size_t>(best)].t);
          break;
        }
        owner[static_cast<std::size_t>(best)] = static_cast<int>(k);
        match[k] = best;
      }
      // A track with no zero in reach is continued through a branch point when an odd
      // run of new zeros of alternating type, starting and ending with its own type,
      // surrounds its last position: near a fold the new pair appears beside the track
      // and the linear predictor overshoots. The track takes the zero of its type
      // nearest its last position; the rest of the run is born in pairs. Exactly
      // symmetric pairs (a pitchfork) leave the three zeros inside one grid cell for a
      // while, so a failure after the halvings gets one final full-size step.
      for (const auto& [k, pred, radius] : lost) {
        if (!ok) break;
        const auto& tr = res.tracks[static_cast<std::size_t>(live[k])];
        const double t0 = tr.samples.back().t;
        const double lo_t = std::min(t0, pred) - radius, hi_t = std::max(t0, pred) + radius;
        std::size_t a = 0, b = 0;
        for (std::size_t i = 0; i < zs.size();) {
          if (owner[i] >= 0) {
            ++i;
            continue;
          }
          std::size_t j = i;
          while (j < zs.size() && owner[j] < 0) ++j;
          if (zs[i].t <= hi_t && lo_t <= zs[j - 1].t) {
            a = i;
            b = j;
            break;
          }
          i = j;
        }
        int best = -1;
        if (b > a && (b - a) % 2 == 1 && zs[a].kind == tr.type && zs[b - 1].kind == tr.type) {
          double bd = std::numeric_limits<double>::infinity();
          for (std::size_t i = a; i < b; ++i)
            if (zs[i].kind == tr.type && std::abs(zs[i].t - t0) < bd) {
              bd = std::abs(zs[i].t - t0);
              best = static_cast<int>(i);
            }
        }
        if (best < 0) {
          ok = false;
          why = "no zero within the trust radius of the track at t=" + detail::fmt(t0);
          break;
        }
        owner[static_cast<std::size_t>(best)] = static_cast<int>(k);
        match[k] = best;
        ++res.branch_points;
      }
      // classify unmatched zeros: adjacent opposite-type pairs are births, lone outermost zeros entries
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      std::vector<std::size_t> entries;
      for (std::size_t i = 0; ok && i < zs.size(); ++i) {
        if (owner[i] >= 0) continue;
        if (i + 1 < zs.size() && owner[i + 1] < 0 && zs[i].kind != zs[i + 1].kind) {
          pairs.emplace_back(i, i + 1);
          ++i;
        } else if (i == 0 || i + 1 == zs.size()) {
          entries.push_back(i);
        } else {
          ok = false;
          why = "unpaired new zero at t=" + detail::fmt(zs[i].t);
        }
      }
      // order preservation: matched tracks keep their t-order (non-intersection)
      for (std::size_t k = 0, prev = 0, seen = 0; ok && k < live.size(); ++k) {
        if (match[k] < 0) continue;
        if (seen++ > 0 && static_cast<std::size_t>(match[k]) <= prev) {
          ok = false;
          why = "tracks crossed near t=" + detail::fmt(zs[static_cast<std::size_t>(match[k])].t);
        }
        prev = static_cast<std::size_t>(match[k]);
      }
      if (!ok) {
        if (last_try)
          throw TrackingError(why + " at sigma=" + detail::fmt(sn) + " after " + std::to_string(attempt - 1) +
                              " step halvings");
        if (ds <= ds_min * 1.0000001 || attempt >= opt.max_halvings) {
          last_try = true;
          ds = ds_full;
          continue;
        }
        ds *= 0.5;
        ++res.halvings;
        continue;
      }

      // commit
      std::vector<int> slot(zs.size(), -1);
      for (std::size_t k = 0; k < live.size(); ++k) {
        auto& tr = res.tracks[static_cast<std::size_t>(live[k])];
        if (leaves[k]) {
          tr.end = TrackEnd::left_interval;
          tr.end_sigma = cur.sigma;
          continue;
        }
        const double t_new = zs[static_cast<std::size_t>(match[k])].t;
        const double t_old = tr.samples.back().t;
        if (opt.probe && (t_old - *opt.probe) * (t_new - *opt.probe) < 0.0) ++res.probe_crossings;
        res.max_speed = std::max(res.max_speed, std::abs(t_new - t_old) / step);
        tr.samples.push_back({sn, t_new});
        slot[static_cast<std::size_t>(match[k])] = tr.id;
      }
      auto open = [&](std::size_t i, TrackBirth b) {
        ExtremaTrack tr;
        tr.id = static_cast<int>(res.tracks.size());
        tr.type = zs[i].kind;
        tr.birth = b;
        tr.birth_sigma = sn;
        tr.samples.push_back({sn, zs[i].t});
        slot[i] = tr.id;
        res.tracks.push_back(std::move(tr));
        return slot[i];
      };
      for (auto [i, j] : pairs) {
        const int a = open(i, TrackBirth::pair);
        const int b = open(j, TrackBirth::pair);
        res.tracks[static_cast<std::size_t>(a)].partner = b;
        res.tracks[static_cast<std::size_t>(b)].partner = a;
        if (opt.probe && (zs[i].t - *opt.probe) * (zs[j].t - *opt.probe) < 0.0) ++res.probe_crossings;
        ++res.pair_births;
      }
      for (auto i : entries) open(i, TrackBirth::entered);
      live.clear();
      speed.clear();
      for (std::size_t i = 0; i < zs.size(); ++i) {
        live.push_back(slot[i]);
        speed.push_back(vz[i]);
      }
      cur = std::move(next);
      break;
    }
    res.sigma.push_back(cur.sigma);
    res.live.push_back(static_cast<int>(live.size()));
    if (cur.sigma <= target) ++next_level;
  }
  for (int id : live) res.tracks[static_cast<std::size_t>(id)].end_sigma = cur.sigma;
  for (auto& tr : res.tracks)
    if (tr.end == TrackEnd::reached_min && tr.samples.back().sigma > sigma_min) tr.end = TrackEnd::left_interval;
  return res;
}

/// Refines the birth scale of a pair by bisection on sigma over a local interval around it.
inline double refine_birth_sigma(const PointConfiguration& cfg, const ExtremaTrack& a, const ExtremaTrack& b,
                                 double sigma_hi, int iterations = 40, const TrackingOptions& opt = {}) {
  const double t0 = std::min(a.samples.front().t, b.samples.front().t);
  const double t1 = std::max(a.samples.front().t, b.samples.front().t);
  double lo = a.birth_sigma, hi = sigma_hi;
  const double pad = std::max(t1 - t0, hi);
  const Interval local{t0 - pad, t1 + pad};
  const auto base = detail::scan_level(cfg, local, lo, opt).zeros.size();
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::scan_level(cfg, local, mid, opt).zeros.size() >= base)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

struct MonotonicityReport {
  RhoCurve curve;                    // rho on [0, L] at each sigma (common configurations)
  std::vector<std::vector<int>> counts;  // per replication, tracked whole-configuration counts per sigma
  std::size_t monotone = 0;          // replications whose counts are non-increasing in sigma
  std::size_t tracking_failures = 0;
  std::vector<std::string> diagnostics;
  bool per_config_pass = false;
  bool rho_pass = false;
  double max_speed = 0.0;
  double mean_probe_crossings = 0.0;  // sigma-crossings X'_sigma(L/2) = 0 per configuration
  std::size_t halvings = 0;
};

// For each replication one configuration on [0, L] buffered for the largest sigma
// (L defaults to 50 sigma_max). rho(sigma) counts extrema on [0, L]; the strong form
// tracks every extremum of the whole configuration (interval = hull of the points
// padded by sigma_max), which for positive impulses contains all zeros of X'.
inline MonotonicityReport rho_monotonicity_report(double lambda, const std::vector<double>& sigma_grid,
                                                  const McOptions& mc, double L = 0.0,
                                                  const TrackingOptions& topt = {}) {
  detail::require(!sigma_grid.empty() && std::is_sorted(sigma_grid.begin(), sigma_grid.end()) &&
                      sigma_grid.front() > 0.0,
                  "sigma grid must be positive and increasing");
  const double smax = sigma_grid.back(), smin = sigma_grid.front();
  if (L <= 0.0) L = 50.0 * smax;
  const Interval iv{0.0, L};
  const Interval window = detail::buffered_window(gaussian_kernel(smax), lambda, iv);
  struct Rep {
    std::vector<int> rho_counts;
    std::vector<int> tracked;
    std::string error;
    double speed = 0.0;
    int probe = 0;
    int halvings = 0;
  };
  auto reps = parallel_map(mc.replications, mc.threads, [&](std::size_t r) {
    auto rng = mc.stream(r);
    auto cfg = sample_ppp(lambda, window, ImpulseSpec::one(), rng);
    Rep out;
    for (double s : sigma_grid) out.rho_counts.push_back(detail::extrema_on(cfg, gaussian_kernel(s), iv, nullptr));
    if (cfg.empty()) {
      out.tracked.assign(sigma_grid.size(), 0);
      return out;
    }
    PointConfiguration whole = cfg;
    const Interval hull{cfg.points.front() - smax, cfg.points.back() + smax};
    whole.window = detail::buffered_window(gaussian_kernel(smax), lambda, hull).hull(cfg.window);
    TrackingOptions o = topt;
    o.levels = sigma_grid;
    o.probe = 0.5 * L;
    try {
      const auto tr = track_extrema(whole, smin, smax, hull, o);
      for (double s : sigma_grid) out.tracked.push_back(tr.live_at(s));
      out.speed = tr.max_speed;
      out.probe = tr.probe_crossings;
      out.halvings = tr.halvings;
    } catch (const TrackingError& e) {
      out.error = "replication " + std::to_string(r) + ": " + e.what();
    }
    return out;
  });
  MonotonicityReport rep;
  rep.curve.axis = sigma_grid;
  rep.curve.replications = mc.replications;
  rep.curve.length = L;
  for (std::size_t k = 0; k < sigma_grid.size(); ++k) {
    std::vector<double> rates;
    for (const auto& r : reps) rates.push_back(r.rho_counts[k] / L);
    const auto m = mean_se(rates);
    rep.curve.rho.push_back(m.value);
    rep.curve.se.push_back(m.se);
  }
  double probes = 0.0;
  for (const auto& r : reps) {
    if (!r.error.empty()) {
      ++rep.tracking_failures;
      rep.diagnostics.push_back(r.error);
      rep.counts.emplace_back();
      continue;
    }
    rep.counts.push_back(r.tracked);
    bool mono = true;
    for (std::size_t k = 0; k + 1 < r.tracked.size(); ++k) mono = mono && r.tracked[k + 1] <= r.tracked[k];
    if (mono) ++rep.monotone;
    rep.max_speed = std::max(rep.max_speed, r.speed);
    rep.halvings += static_cast<std::size_t>(r.halvings);
    probes += r.probe;
  }
  rep.mean_probe_crossings = reps.empty() ? 0.0 : probes / static_cast<double>(reps.size());
  rep.per_config_pass = rep.monotone == mc.replications;
  rep.rho_pass = true;
  for (std::size_t k = 0; k + 1 < sigma_grid.size(); ++k) {
    const double slack = 2.0 * std::hypot(rep.curve.se[k], rep.curve.se[k + 1]);
    rep.rho_pass = rep.rho_pass && rep.curve.rho[k + 1] <= rep.curve.rho[k] + slack;
  }
  return rep;
}

}  // namespace shotnoise

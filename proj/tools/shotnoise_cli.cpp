// shotnoise: simulate paths, crossing curves, spectral tables, scale-space
// sweeps and the verification suite from a flat key = value config.
//
// Exit codes: 0 pass, 1 property failure (or I/O), 2 usage, 3 numerical accuracy failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include <shotnoise/io.hpp>
#include <shotnoise/verification.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace shotnoise;

namespace {

enum Exit { kPass = 0, kProperty = 1, kUsage = 2, kAccuracy = 3 };

int exit_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::parameter:
    case ErrorCategory::capability:
    case ErrorCategory::infeasible:
    case ErrorCategory::window: return kUsage;
    case ErrorCategory::io: return kProperty;
    default: return kAccuracy;
  }
}

std::string version_string() {
#ifdef SHOTNOISE_GIT_DESCRIBE
  return std::string("shotnoise ") + SHOTNOISE_VERSION + "-" + SHOTNOISE_GIT_DESCRIBE;
#else
  return std::string("shotnoise ") + SHOTNOISE_VERSION;
#endif
}

struct Run {
  ExperimentConfig cfg;
  fs::path out;
  json manifest;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  std::string file(const std::string& name) {
    manifest["files"].push_back(name);
    return (out / name).string();
  }

  void finish(const std::string& command, int status) {
    manifest["command"] = command;
    manifest["version"] = version_string();
    manifest["seed"] = cfg.u64("seed");
    manifest["config"] = cfg.values();
    manifest["status"] = status;
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream f(out / "manifest.json");
    if (!f) throw IoError("cannot write manifest in '" + out.string() + "'");
    f << manifest.dump(2) << '\n';
  }
};

json seed_json(const SeedInfo& s) { return {{"master", s.master}, {"replication", s.replication}}; }

// Levels from the config, or mean +- 4 sd of the (possibly normalized) process.
std::vector<double> resolve_levels(const ExperimentConfig& cfg, double lambda, const KernelModel& g,
                                   const ImpulseSpec& law, bool normalize) {
  if (!cfg.empty("levels")) return cfg.list("levels");
  const double m0 = moments(g).m0();
  const double sd = normalize ? std::sqrt(law.second_moment() * m0) : std::sqrt(lambda * law.second_moment() * m0);
  const double mean = normalize ? 0.0 : lambda * law.mean() * g.integral(0);
  const auto n = static_cast<std::size_t>(cfg.u64("level_count"));
  detail::require(n >= 2, "level_count must be at least 2");
  std::vector<double> lv(n);
  for (std::size_t i = 0; i < n; ++i)
    lv[i] = mean - 4.0 * sd + 8.0 * sd * static_cast<double>(i) / static_cast<double>(n - 1);
  return lv;
}

double step_for(const ExperimentConfig& cfg, const KernelModel& g) {
  const double h = cfg.num("h");
  return h > 0.0 ? h : g.scale() / 20.0;
}

int cmd_simulate(Run& run) {
  const auto& cfg = run.cfg;
  const auto g = kernel_from_string(cfg.str("kernel"));
  const auto law = impulses_from_string(cfg.str("impulses"));
  const int order = static_cast<int>(cfg.u64("max_order"));
  detail::require(order >= 2 && order <= 3, "max_order must be 2 or 3");
  const auto paths = simulate_paths(cfg.num("lambda"), g, law, cfg.interval(), step_for(cfg, g), order, cfg.mc(),
                                    cfg.num("certificate"));
  json list = json::array();
  for (std::size_t r = 0; r < paths.size(); ++r) {
    char name[32];
    std::snprintf(name, sizeof name, "path_%05zu.csv", r);
    write_path_csv(run.file(name), paths[r]);
    const auto& p = paths[r];
    std::vector<double> cert(p.certificate.begin(), p.certificate.begin() + p.max_order + 1);
    list.push_back({{"file", name},
                    {"seed", seed_json(p.seed)},
                    {"points", p.evaluator ? p.evaluator->config().size() : 0},
                    {"kernel", p.kernel_id},
                    {"lambda", p.lambda},
                    {"radius", p.radius},
                    {"truncation_certificate", cert}});
  }
  run.manifest["paths"] = list;
  std::cout << "wrote " << paths.size() << " paths to " << run.out.string() << "\n";
  return kPass;
}

int cmd_crossings(Run& run) {
  const auto& cfg = run.cfg;
  const auto g = kernel_from_string(cfg.str("kernel"));
  const auto law = impulses_from_string(cfg.str("impulses"));
  const double lambda = cfg.num("lambda");
  const bool normalize = cfg.flag("normalize");
  const auto levels = resolve_levels(cfg, lambda, g, law, normalize);
  CurveOptions opt;
  opt.h = step_for(cfg, g);
  opt.normalize = normalize;
  opt.eps = cfg.num("certificate");
  const auto curve = mc_crossing_curve(lambda, g, law, levels, cfg.interval(), cfg.mc(), opt);
  write_crossing_csv(run.file("crossings.csv"), curve);

  // Rolle bound on a subset of the same replications
  auto mc = cfg.mc();
  mc.replications = std::min<std::size_t>(mc.replications, 100);
  const auto paths = simulate_paths(lambda, g, law, cfg.interval(), opt.h, 2, mc, opt.eps);
  std::size_t violations = 0, cases = 0;
  for (const auto& p : paths) {
    std::vector<double> lv = levels;
    if (normalize)
      for (auto& a : lv) a = lambda * law.mean() * g.integral(0) + std::sqrt(lambda) * a;
    const auto rep = rolle_check(p, lv);
    cases += lv.size();
    violations += rep.violating_levels.size();
  }
  const double integral = integrate_over_levels(levels, curve.mean);
  run.manifest["results"] = {
      {"rolle", {{"cases", cases}, {"violations", violations}, {"pass", violations == 0}}},
      {"coarea",
       {{"integral_over_levels", integral},
        {"mean_total_variation", curve.total_variation.value},
        {"se", curve.total_variation.se},
        {"max_abs_level", curve.max_abs_level}}},
  };
  std::printf("%zu levels, %zu replications; Rolle %zu/%zu violations; int C = %.6g, E TV = %.6g (se %.3g)\n",
              levels.size(), curve.replications, violations, cases, integral, curve.total_variation.value,
              curve.total_variation.se);
  return violations == 0 ? kPass : kProperty;
}

int cmd_spectral(Run& run) {
  const auto& cfg = run.cfg;
  const auto g = kernel_from_string(cfg.str("kernel"));
  const auto law = impulses_from_string(cfg.str("impulses"));
  const double lambda = cfg.num("lambda");
  const double L = cfg.num("length");
  SpectralOptions sopt;
  sopt.threads = static_cast<unsigned>(cfg.u64("threads"));
  CharacteristicEngine e(lambda, g, law, false, sopt);
  const double umax = cfg.empty("u_max") ? 0.0 : cfg.num("u_max");
  const auto curve = crossing_fourier_curve(e, L, umax, cfg.u64("u_points"), sopt);
  write_fourier_csv(run.file("fourier.csv"), curve);

  const auto levels = resolve_levels(cfg, lambda, g, law, false);
  const auto inv = invert_crossing_curve(curve, levels);
  auto mc = cfg.mc();
  const auto mcc = mc_crossing_curve(lambda, g, law, levels, {0.0, L}, mc);
  const auto m = moments(g);
  const GaussianLimit lim{lambda * law.second_moment() * m.m0(), lambda * law.second_moment() * m.m2(), 0.0};
  {
    CsvWriter w(run.file("spectral_crossings.csv"),
                {"alpha", "C_spectral", "C_spectral_err", "C_mc", "C_mc_se", "C_rice"});
    for (std::size_t i = 0; i < levels.size(); ++i)
      w.row(levels[i], inv.value[i], inv.error[i], mcc.mean[i], mcc.se[i], rice_gaussian(lim, levels[i] - e.mean(), L));
  }

  int status = kPass;
  json results;
  if (law.mean() == 1.0 && law.second_moment() == 1.0) {
    const auto k = convergence_constants(g);
    std::vector<double> us;
    for (int j = 0; j < 16; ++j) us.push_back(k.a1 * std::sqrt(lambda) * j / 16.0);
    const auto rows = convergence_bound_check(lambda, g, us, sopt);
    CsvWriter w(run.file("convergence_bound.csv"), {"u", "lhs", "rhs", "rhs_over_pi", "pass"});
    bool ok = true;
    for (const auto& r : rows) {
      w.row(r.u, r.lhs, r.rhs, r.tight, static_cast<int>(r.pass));
      ok = ok && r.pass;
    }
    const Estimate per_unit{mcc.total_variation.value / L, mcc.total_variation.se / L};
    const auto tv = total_variation_bound_check(lambda, g, per_unit);
    CsvWriter t(run.file("total_variation_bound.csv"), {"lambda", "mc", "mc_se", "limit", "lhs", "rhs", "slack", "pass"});
    t.row(lambda, per_unit.value, per_unit.se, tv.limit, tv.lhs, tv.rhs, tv.slack, static_cast<int>(tv.pass));
    results["convergence_bound"] = {{"rows", rows.size()}, {"pass", ok}, {"a1", k.a1}, {"a2", k.a2}, {"a3", k.a3}};
    results["total_variation_bound"] = {{"lhs", tv.lhs}, {"rhs", tv.rhs}, {"slack", tv.slack}, {"pass", tv.pass}};
    if (!ok || !tv.pass) status = kProperty;
  } else {
    results["convergence_bound"] = "skipped: needs unit impulses";
  }

  try {
    const auto pi = cfg.list("phase_interval");
    detail::require(pi.size() == 2, "phase_interval needs two numbers");
    std::vector<std::pair<double, double>> uv;
    for (double u : {1e1, 1e2, 1e3, 1e4}) uv.emplace_back(u, 0.0);
    const auto rows = stationary_phase_certify(g, {pi[0], pi[1]}, uv, PhaseMode::level_1d);
    CsvWriter w(run.file("stationary_phase.csv"), {"u", "v", "r", "magnitude", "quad_err", "bound", "applicable", "pass"});
    bool ok = true;
    for (const auto& r : rows) {
      w.row(r.u, r.v, r.r, r.magnitude, r.error, r.bound, static_cast<int>(r.applicable), static_cast<int>(r.pass));
      ok = ok && r.pass;
    }
    results["stationary_phase"] = {{"pass", ok}};
    if (!ok) status = kProperty;
  } catch (const DegeneracyError& e) {
    results["stationary_phase"] = {{"pass", false}, {"error", e.what()}};
    status = kAccuracy;
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double tol = 3.0 * (std::max(mcc.se[i], 1.0 / static_cast<double>(mc.replications)) + inv.error[i]);
    worst = std::max(worst, std::abs(inv.value[i] - mcc.mean[i]) / tol);
  }
  results["route_agreement"] = {{"worst_ratio", worst}, {"pass", worst <= 1.0}, {"truncation", curve.truncation}};
  if (worst > 1.0 && status == kPass) status = kAccuracy;
  run.manifest["results"] = results;
  std::printf("C^(0) = %.6g, route agreement worst |d|/tol = %.3g\n", inv.dc, worst);
  return status;
}

int cmd_scalespace(Run& run) {
  const auto& cfg = run.cfg;
  const auto spec = parse_spec_string(cfg.str("kernel"));
  if (spec.name != "gaussian") throw CapabilityError("scale-space sweeps need the Gaussian kernel");
  const double sigma = cfg.num("sigma");
  const double lambda = cfg.num("lambda");
  const auto mc = cfg.mc();
  json results;
  int status = kPass;

  const auto lam = cfg.list("lambda_grid");
  if (!lam.empty()) {
    const auto c = rho_lambda_sweep(lam, sigma, cfg.num("rho_length"), mc);
    write_rho_csv(run.file("rho_lambda.csv"), c, "lambda");
    bool cap = true;
    for (std::size_t i = 0; i < lam.size(); ++i) cap = cap && c.rho[i] <= 2.0 * lam[i] + 2.0 * c.se[i];
    results["lambda_sweep"] = {{"cap_2lambda_pass", cap}, {"limit", extrema_rate_limit(sigma)}};
    if (!cap) status = kProperty;
  }

  const auto sig = cfg.list("sigma_grid");
  if (!sig.empty()) {
    const auto rep = rho_monotonicity_report(lambda, sig, mc);
    write_rho_csv(run.file("rho_sigma.csv"), rep.curve, "sigma");
    results["sigma_sweep"] = {{"monotone", rep.monotone},
                              {"tracking_failures", rep.tracking_failures},
                              {"per_config_pass", rep.per_config_pass},
                              {"rho_pass", rep.rho_pass},
                              {"max_speed", rep.max_speed},
                              {"mean_probe_sigma_crossings", rep.mean_probe_crossings},
                              {"diagnostics", rep.diagnostics}};
    if (!rep.per_config_pass || !rep.rho_pass) status = kProperty;

    const auto iv = cfg.interval();
    const double smax = sig.back(), smin = sig.front();
    for (std::size_t k = 0; k < cfg.u64("track_configs"); ++k) {
      auto rng = mc.stream(k);
      const auto g = gaussian_kernel(smax);
      const auto cfgp = sample_ppp(lambda, detail::buffered_window(g, lambda, iv.expanded(smax)), ImpulseSpec::one(), rng);
      TrackingOptions topt;
      topt.levels = sig;
      const auto tr = track_extrema(cfgp, smin, smax, iv, topt);
      char name[32];
      std::snprintf(name, sizeof name, "tracks_%03zu.csv", k);
      write_tracks_csv(run.file(name), tr);
    }
  }

  McOptions sc = mc;
  const auto scale = scaling_check(lambda, sigma, 2.0, sc, cfg.num("rho_length"));
  results["scaling_check"] = {{"c", 2.0}, {"lhs", scale.lhs}, {"rhs", scale.rhs}, {"combined_se", scale.combined_se},
                              {"pass", scale.pass}};
  auto rng = mc.stream(0);
  const auto semi_cfg = sample_ppp(2.0, {-40.0, 60.0}, ImpulseSpec::one(), rng);
  const auto semi = semigroup_check(semi_cfg, 0.5, 0.5, {0.0, 20.0}, 0.01);
  results["semigroup_check"] = {{"deviation", semi.deviation}, {"peak", semi.peak},
                                {"pass", semi.deviation <= 1e-4 * semi.peak}};
  if (!scale.pass) status = kProperty;
  if (semi.deviation > 1e-4 * semi.peak) status = kAccuracy;
  run.manifest["results"] = results;
  std::cout << results.dump(2) << "\n";
  return status;
}

int cmd_verify(Run& run) {
  const auto& cfg = run.cfg;
  auto profile = cfg.str("profile") == "full" ? VerifyProfile::full() : VerifyProfile::quick();
  if (cfg.str("profile") != "full" && cfg.str("profile") != "quick")
    throw ParameterError("profile must be 'quick' or 'full'");
  profile.seed = cfg.u64("seed");
  profile.threads = static_cast<unsigned>(cfg.u64("threads"));
  std::vector<int> ids;
  for (double x : cfg.list("criteria")) ids.push_back(static_cast<int>(x));
  if (ids.empty())
    for (int i = 1; i <= kCriterionCount; ++i) ids.push_back(i);

  json suites = json::array();
  bool any_fail = false, accuracy = false;
  for (int id : ids) {
    const auto r = run_criterion(id, profile);
    std::cout << summary_line(r) << std::endl;
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"pass", c.pass}});
    suites.push_back({{"criterion", id}, {"title", r.title}, {"attempted", r.attempted}, {"pass", r.pass},
                      {"error", r.error}, {"seconds", r.seconds}, {"checks", checks}});
    if (!r.pass) {
      any_fail = true;
      if (!r.error.empty() && exit_for(r.error_category) == kAccuracy) accuracy = true;
    }
  }
  run.manifest["results"] = suites;
  run.manifest["profile"] = profile.name;
  return !any_fail ? kPass : accuracy ? kAccuracy : kProperty;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smooth shot noise toolkit"};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> sets;
  std::string output;
  std::optional<std::uint64_t> seed, reps, threads;
  std::optional<double> lambda;
  std::optional<std::string> kernel;
  app.add_option("-c,--config", config_file, "key = value config file");
  app.add_option("-s,--set", sets, "override a config key (key=value), repeatable");
  app.add_option("-o,--output", output, "output directory");
  app.add_option("--seed", seed, "master seed");
  app.add_option("-n,--replications", reps, "number of replications");
  app.add_option("-j,--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--lambda", lambda, "intensity");
  app.add_option("-k,--kernel", kernel, "kernel, e.g. gaussian:sigma=1");

  auto* sim = app.add_subcommand("simulate", "sample paths to CSV");
  auto* cross = app.add_subcommand("crossings", "Monte Carlo mean crossings curve");
  auto* spec = app.add_subcommand("spectral", "Fourier route, inversion and bound tables");
  auto* scale = app.add_subcommand("scalespace", "extrema rate sweeps, tracks, scaling and semigroup checks");
  auto* ver = app.add_subcommand("verify", "run the reproduction criteria");
  auto* show = app.add_subcommand("config", "print the fully resolved config");
  for (auto* s : {sim, cross, spec, scale, ver, show}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kUsage;
  }

  Run run;
  try {
    if (!config_file.empty()) run.cfg = ExperimentConfig::load(config_file);
    for (const auto& kv : sets) run.cfg.set_assignment(kv);
    if (!output.empty()) run.cfg.set("output", output);
    if (seed) run.cfg.set("seed", std::to_string(*seed));
    if (reps) run.cfg.set("replications", std::to_string(*reps));
    if (threads) run.cfg.set("threads", std::to_string(*threads));
    if (lambda) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", *lambda);
      run.cfg.set("lambda", buf);
    }
    if (kernel) run.cfg.set("kernel", *kernel);
    // fail early on malformed values
    (void)kernel_from_string(run.cfg.str("kernel"));
    (void)impulses_from_string(run.cfg.str("impulses"));
    (void)run.cfg.mc();
  } catch (const Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_for(e.category()) == kProperty ? kUsage : exit_for(e.category());
  }

  if (show->parsed()) {
    std::cout << run.cfg.to_text();
    return kPass;
  }

  std::string command;
  try {
    run.out = run.cfg.str("output");
    std::error_code ec;
    fs::create_directories(run.out, ec);
    if (ec) throw IoError("cannot create '" + run.out.string() + "': " + ec.message());
    int status = kPass;
    if (sim->parsed()) status = cmd_simulate(run), command = "simulate";
    else if (cross->parsed()) status = cmd_crossings(run), command = "crossings";
    else if (spec->parsed()) status = cmd_spectral(run), command = "spectral";
    else if (scale->parsed()) status = cmd_scalespace(run), command = "scalespace";
    else if (ver->parsed()) status = cmd_verify(run), command = "verify";
    run.finish(command, status);
    return status;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kProperty;
  }
}

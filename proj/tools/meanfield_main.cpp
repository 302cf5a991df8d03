// Command-line front end: config-driven experiment runs, limit-law export,
// and the built-in verification suites.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "meanfield/config.hpp"
#include "meanfield/report_io.hpp"

namespace fs = std::filesystem;
using namespace meanfield;

namespace {

std::uint64_t env_seed_or(std::uint64_t fallback) {
  const char* env = std::getenv("MEANFIELD_SEED");
  if (!env || !*env) return fallback;
  return detail::parse_u64(env, 0, "MEANFIELD_SEED");
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  auto f = detail::open_out(path);
  f << j.dump(2) << '\n';
}

int cmd_run(const std::string& config_path, int jobs, const std::string& profile_flag,
            const std::string& out_flag) {
  RunConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw config_error(0, "config", "cannot open '" + config_path + "'");
    cfg = parse_run_config(in);
    resolve_step(cfg, profile_flag);
    cfg.base_seed = env_seed_or(cfg.base_seed);
    if (!out_flag.empty()) cfg.out_dir = out_flag;
    validate_run_config(cfg);
  } catch (const config_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }

  try {
    const ExperimentPlan plan = to_plan(cfg);
    const auto samples = run_experiment(plan, jobs);

    const fs::path root(cfg.out_dir);
    fs::create_directories(root);
    const bool multi = samples.size() > 1;

    std::printf("experiment %s: model=%s mode=%s dt=%g t*=%g seed=%llu\n", cfg.experiment.c_str(),
                cfg.model_id.c_str(), to_string(cfg.mode), cfg.dt, cfg.t_star,
                (unsigned long long)cfg.base_seed);
    std::printf("  %-8s %-6s %-12s %-12s %-10s %-10s %-10s\n", "N", "R", "a", "b", "KS", "crit5%",
                "crit1%");

    nlohmann::json runs = nlohmann::json::array();
    std::vector<std::pair<std::uint64_t, HistogramReport>> table;
    for (const auto& [n, sample] : samples) {
      const HistogramReport rep = uniformity_report(sample, cfg.bin_width);
      const fs::path dir = multi ? root / ("N" + std::to_string(n)) : root;
      fs::create_directories(dir);
      write_maxima_csv(dir / "maxima.csv", sample);
      write_histogram_csv(dir / "histogram.csv", rep);
      nlohmann::json j = sample_report_json(sample, rep);
      j["schema_version"] = report_schema_version;
      j["experiment"] = cfg.experiment;
      j["generator"] = cfg.generator;
      write_json_file(dir / "report.json", j);
      const std::string title = cfg.experiment + "  N=" + std::to_string(n) +
                                "  R=" + std::to_string(sample.replications);
      {
        auto f = detail::open_out(dir / "chart.svg");
        f << render_chart_svg(rep, sample.replications, title);
      }
      runs.push_back(std::move(j));
      table.emplace_back(n, rep);

      std::printf("  %-8llu %-6llu %-12.6g %-12.6g %-10.4g %-10.4g %-10.4g\n",
                  (unsigned long long)n, (unsigned long long)sample.replications,
                  sample.det_normalizers.a, sample.det_normalizers.b, rep.ks, rep.ks_critical_5pct,
                  rep.ks_critical_1pct);
    }

    if (multi) {
      auto f = detail::open_out(root / "summary.csv");
      f << "N,ks,ks_critical_5pct,ks_critical_1pct\n";
      for (const auto& [n, rep] : table)
        f << n << ',' << detail::fmt_g17(rep.ks) << ',' << detail::fmt_g17(rep.ks_critical_5pct)
          << ',' << detail::fmt_g17(rep.ks_critical_1pct) << '\n';
      nlohmann::json top;
      top["schema_version"] = report_schema_version;
      top["experiment"] = cfg.experiment;
      top["generator"] = cfg.generator;
      top["runs"] = std::move(runs);
      write_json_file(root / "report.json", top);
    }
    std::printf("wrote %s\n", root.string().c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

int cmd_law(const RunConfig& model_cfg, double horizon, double h, int quad_order,
            const std::string& out_path) {
  ModelSpec model;
  try {
    if (!(horizon >= 0.0)) throw config_error(0, "T", "horizon must be nonnegative");
    if (!(h > 0.0)) throw config_error(0, "h", "ode step must be positive");
    if (quad_order < 2) throw config_error(0, "quad_order", "quadrature order too small");
    if (!(model_cfg.sigma0_sq > 0.0))
      throw config_error(0, "sigma0_sq", "initial variance must be positive");
    model = build_model(model_cfg);
  } catch (const config_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  try {
    const LimitLawPath law = solve_limit_law(model, horizon, h, quad_order);
    write_law_csv(out_path, law);
    std::printf("wrote %s (%zu rows)\n", out_path.c_str(), law.t.size());
    std::printf("final: t=%.10g m=%.10g sigma2=%.10g tau=%.10g\n", law.t.back(), law.mean.back(),
                law.var.back(), law.tau.back());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

int verify_tau(double dt, std::uint64_t seed, int jobs) {
  const auto study = tau_convergence_study(make_tanh_vol(1.0), {50, 200, 800, 3200}, 200, 1.0, dt,
                                           seed, jobs);
  std::printf("time-change convergence, tanh_vol r0=1, R=200, dt=%g, seed=%llu\n", dt,
              (unsigned long long)seed);
  std::printf("  %-8s %-16s %-16s\n", "N", "mean|tauN-tau|", "stdev");
  for (const auto& row : study.rows)
    std::printf("  %-8llu %-16.6g %-16.6g\n", (unsigned long long)row.n, row.mean_abs_err,
                row.stdev);
  std::printf("  tau(1) = %.10g, log-log slope = %.4f, pass band [-0.65, -0.35]\n", study.tau_ref,
              study.slope);
  const bool pass = study.has_slope && study.slope >= -0.65 && study.slope <= -0.35;
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int verify_moments(std::uint64_t seed, int jobs) {
  const auto check = moment_bound_check(make_tanh_vol(1.0), 200, 4000, 1.0, 3, seed, jobs);
  std::printf("moment bounds, tanh_vol r0=1, N=200, R=4000, seed=%llu\n",
              (unsigned long long)seed);
  if (check.status != "ok") {
    std::printf("  status: %s\nFAIL\n", check.status.c_str());
    return 1;
  }
  std::printf("  %-4s %-16s %-16s %-8s\n", "p", "E[dev^{2p}]", "std_error", "bounded");
  bool all_bounded = true;
  for (const auto& row : check.rows) {
    std::printf("  %-4d %-16.6g %-16.6g %-8s\n", row.p, row.moment, row.std_error,
                row.within_fitted_bound ? "yes" : "no");
    all_bounded = all_bounded && row.within_fitted_bound;
  }
  std::printf("  fitted K = %.6g, p=1 oracle Var(g)/N = %.6g, consistent = %s\n", check.fitted_k,
              check.oracle_p1, check.p1_consistent ? "yes" : "no");
  const bool pass = all_bounded && check.p1_consistent;
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int verify_ratio(double dt, std::uint64_t seed, int jobs) {
  const auto rows = proposition_ratio_study(make_tanh_vol(1.0), {50, 200, 800, 3200}, 200, 1.0, dt,
                                            seed, jobs);
  std::printf("normalizer ratio discrepancy, tanh_vol r0=1, R=200, dt=%g, seed=%llu\n", dt,
              (unsigned long long)seed);
  std::printf("  %-8s %-18s %-18s\n", "N", "mean|a_s/a_d - 1|", "mean|b_s-b_d|/a_d");
  for (const auto& row : rows)
    std::printf("  %-8llu %-18.6g %-18.6g\n", (unsigned long long)row.n, row.mean_a_disc,
                row.mean_b_disc);
  bool decreasing = true;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    decreasing = decreasing && rows[i + 1].mean_a_disc <= rows[i].mean_a_disc;
  const bool pass = decreasing && !rows.empty() && rows.back().mean_a_disc < 0.02;
  std::printf("  pass: decreasing in N and final < 0.02\n%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int verify_strong_order(std::uint64_t seed) {
  const auto study = strong_order_study(1000, seed);
  std::printf("Euler-Maruyama strong order on geometric Brownian motion, 1000 paths, seed=%llu\n",
              (unsigned long long)seed);
  std::printf("  %-12s %-16s\n", "dt", "rms error");
  for (const auto& row : study.rows) std::printf("  %-12.6g %-16.6g\n", row.dt, row.rms_error);
  bool pass = !study.ratios.empty();
  std::printf("  halving ratios:");
  for (const double r : study.ratios) {
    std::printf(" %.4f", r);
    pass = pass && r >= 1.2 && r <= 1.7;
  }
  std::printf(" (pass band [1.2, 1.7])\n%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int cmd_verify(const std::string& suite, int jobs, const std::string& profile_flag) {
  double dt = 1e-3;
  try {
    if (profile_flag == "paper")
      dt = 1e-4;
    else if (!profile_flag.empty() && profile_flag != "fast")
      throw config_error(0, "profile", "unknown profile '" + profile_flag + "' (use fast or paper)");
    if (suite != "tau" && suite != "moments" && suite != "ratio" && suite != "strong-order")
      throw config_error(0, "suite",
                         "unknown suite '" + suite + "' (use tau, moments, ratio, strong-order)");
  } catch (const config_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  try {
    if (suite == "tau") return verify_tau(dt, env_seed_or(11), jobs);
    if (suite == "moments") return verify_moments(env_seed_or(11), jobs);
    if (suite == "ratio") return verify_ratio(dt, env_seed_or(11), jobs);
    return verify_strong_order(env_seed_or(7));
  } catch (const config_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field particle systems: maxima, time changes, Gumbel diagnostics"};
  app.require_subcommand(1);

  std::string config_path, profile, out_flag;
  int jobs = 0;

  auto* run = app.add_subcommand("run", "run a config-driven experiment");
  run->add_option("--config", config_path, "config file path")->required();
  run->add_option("--jobs", jobs, "worker threads (default: hardware)");
  run->add_option("--profile", profile, "fast (dt 1e-3) or paper (dt 1e-4)");
  run->add_option("--out", out_flag, "output directory (overrides config)");

  std::string law_model = "bank", law_out = "law.csv";
  double law_T = 1.0, law_h = 1e-4;
  int law_quad = 64;
  RunConfig law_cfg;
  auto* law = app.add_subcommand("law", "solve and export the limit law (t, m, sigma2, tau)");
  law->add_option("--model", law_model, "bank, hybrid_bank, tanh_vol or gaussian_const_vol");
  law->add_option("--T", law_T, "horizon");
  law->add_option("--step", law_h, "ode step");
  law->add_option("--r0", law_cfg.r0, "drift rate (tanh_vol, gaussian_const_vol)");
  law->add_option("--m0", law_cfg.m0, "initial mean");
  law->add_option("--sigma0-sq", law_cfg.sigma0_sq, "initial variance");
  law->add_option("--sigma-const", law_cfg.sigma_const, "constant volatility");
  law->add_option("--kappa", law_cfg.kappa, "bank drift rate");
  law->add_option("--quad-order", law_quad, "Gauss-Hermite order");
  law->add_option("--out", law_out, "output csv path");

  std::string suite;
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("suite", suite, "tau, moments, ratio or strong-order")->required();
  verify->add_option("--jobs", jobs, "worker threads (default: hardware)");
  verify->add_option("--profile", profile, "fast (dt 1e-3) or paper (dt 1e-4)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, jobs, profile, out_flag);
    if (law->parsed()) {
      law_cfg.model_id = law_model;
      return cmd_law(law_cfg, law_T, law_h, law_quad, law_out);
    }
    return cmd_verify(suite, jobs, profile);
  } catch (const config_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "meanfield/config.hpp"

using namespace meanfield;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

const std::string base =
    "experiment = demo\n"
    "[model]\n"
    "id = bank\n"
    "[run]\n"
    "particles = 200\n"
    "replications = 100\n";

}  // namespace

TEST_CASE("a minimal config parses with documented defaults") {
  const auto cfg = parse(base + "dt = 1e-3\n");
  CHECK(cfg.experiment == "demo");
  CHECK(cfg.model_id == "bank");
  CHECK(cfg.particle_counts == std::vector<std::uint64_t>{200});
  CHECK(cfg.replications == 100);
  CHECK(cfg.dt == 1e-3);
  CHECK(cfg.has_dt);
  CHECK(cfg.t_star == 1.0);
  CHECK(cfg.bin_width == 0.1);
  CHECK(cfg.base_seed == 1);
  CHECK(cfg.mode == Mode::interacting);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.kappa == 1.0);
  CHECK_NOTHROW(validate_run_config(cfg));
}

TEST_CASE("comments, blank lines and spacing are tolerated") {
  const auto cfg = parse(
      "# top note\n"
      "experiment = spaced   \n"
      "\n"
      "[model]\n"
      "  id   =   tanh_vol  # trailing comment\n"
      "r0 = 2.5\n"
      "[run]\n"
      "particles = 50, 100 , 200\n"
      "replications = 10\n"
      "dt = 0.01\n"
      "mode = iid_limit\n");
  CHECK(cfg.model_id == "tanh_vol");
  CHECK(cfg.r0 == 2.5);
  CHECK(cfg.particle_counts == std::vector<std::uint64_t>{50, 100, 200});
  CHECK(cfg.mode == Mode::iid_limit);
}

TEST_CASE("a profile pins the step over any explicit dt key") {
  const auto fast = parse("profile = fast\n" + base + "dt = 0.5\n");
  CHECK(fast.dt == 1e-3);
  const auto paper = parse("profile = paper\n" + base + "dt = 0.5\n");
  CHECK(paper.dt == 1e-4);
  const auto plain = parse(base + "dt = 0.5\n");
  CHECK(plain.dt == 0.5);
}

TEST_CASE("the profile flag outranks the config profile") {
  auto cfg = parse("profile = paper\n" + base);
  CHECK(cfg.dt == 1e-4);
  resolve_step(cfg, "fast");
  CHECK(cfg.dt == 1e-3);
  resolve_step(cfg, "paper");
  CHECK(cfg.dt == 1e-4);
  CHECK_THROWS_AS(resolve_step(cfg, "turbo"), config_error);
}

TEST_CASE("a config without step information fails validation") {
  const auto cfg = parse(base);
  CHECK_FALSE(cfg.has_dt);
  try {
    validate_run_config(cfg);
    FAIL("expected a config error");
  } catch (const config_error& e) {
    CHECK(e.field == "dt");
  }
}

TEST_CASE("an explicit horizon must agree with the evaluation time") {
  CHECK_NOTHROW(validate_run_config(parse(base + "dt = 1e-3\nT = 1\n")));
  CHECK_NOTHROW(validate_run_config(parse(base + "dt = 1e-3\nT = 2\nt_star = 2\n")));
  try {
    validate_run_config(parse(base + "dt = 1e-3\nT = 2\n"));
    FAIL("expected a config error");
  } catch (const config_error& e) {
    CHECK(e.field == "T");
    CHECK(std::string(e.what()).find("horizon") != std::string::npos);
  }
}

TEST_CASE("parse errors carry the line number and field") {
  try {
    parse("experiment = x\n[model]\nid = bank\n[run]\nparticles = banana\n");
    FAIL("expected a config error");
  } catch (const config_error& e) {
    CHECK(e.line == 5);
    CHECK(e.field == "particles");
    CHECK(std::string(e.what()).find("config error at line 5") != std::string::npos);
  }

  try {
    parse("experiment = x\nwhatever = 1\n");
    FAIL("expected a config error");
  } catch (const config_error& e) {
    CHECK(e.line == 2);
    CHECK(e.field == "whatever");
  }

  CHECK_THROWS_AS(parse("[something]\n"), config_error);
  CHECK_THROWS_AS(parse("[run\n"), config_error);
  CHECK_THROWS_AS(parse("[run]\nnot a pair\n"), config_error);
  CHECK_THROWS_AS(parse("[run]\n= 3\n"), config_error);
  CHECK_THROWS_AS(parse("[run]\ndt =\n"), config_error);
  CHECK_THROWS_AS(parse("[run]\ndt = 1e-3 junk\n"), config_error);
  CHECK_THROWS_AS(parse("[run]\nreplications = -5\n"), config_error);
  CHECK_THROWS_AS(parse("[run]\nparticles = 10,,20\n"), config_error);
  CHECK_THROWS_AS(parse("[run]\nmode = sideways\n"), config_error);
  CHECK_THROWS_AS(parse("[model]\nr0 = fast\n"), config_error);
  CHECK_THROWS_AS(parse("profile = turbo\n"), config_error);
}

TEST_CASE("the generator key is pinned to the built-in stream") {
  CHECK_NOTHROW(parse(std::string("generator = ") + generator_id + "\n" + base + "dt = 1e-3\n"));
  try {
    parse("generator = mt19937:box-muller\n");
    FAIL("expected a config error");
  } catch (const config_error& e) {
    CHECK(e.field == "generator");
    CHECK(std::string(e.what()).find(generator_id) != std::string::npos);
  }
}

TEST_CASE("validation walks every numeric precondition") {
  CHECK_THROWS_AS(validate_run_config(parse("[run]\ndt = 1e-3\n")), config_error);  // no model
  CHECK_THROWS_AS(
      validate_run_config(parse("[model]\nid = bank\n[run]\ndt = 1e-3\nreplications = 5\n")),
      config_error);  // no particles
  CHECK_THROWS_AS(validate_run_config(parse(
                      "[model]\nid = bank\n[run]\ndt = 1e-3\nparticles = 4\nreplications = 5\n")),
                  config_error);  // N below the normalizer threshold
  CHECK_THROWS_AS(
      validate_run_config(parse("[model]\nid = bank\n[run]\ndt = 1e-3\nparticles = 10\n")),
      config_error);  // replications missing
  CHECK_THROWS_AS(validate_run_config(parse(base + "dt = 1e-3\nbin_width = 0.3\n")), config_error);
  CHECK_NOTHROW(validate_run_config(parse(base + "dt = 1e-3\nbin_width = 0.05\n")));
  CHECK_THROWS_AS(validate_run_config(parse(base + "dt = 1e-3\nt_star = -1\n")), config_error);
  CHECK_THROWS_AS(validate_run_config(parse(base + "dt = 1e-3\nlaw_h = 0\n")), config_error);
  CHECK_THROWS_AS(validate_run_config(parse(base + "dt = 1e-3\nquad_order = 1\n")), config_error);
  CHECK_THROWS_AS(
      validate_run_config(parse(
          "[model]\nid = tanh_vol\nsigma0_sq = -2\n[run]\nparticles = "
          "10\nreplications = 5\ndt = 1e-3\n")),
      config_error);
}

TEST_CASE("stochastic normalization is rejected outside the bounded class") {
  const std::string runs =
      "[run]\nparticles = 10\nreplications = 5\ndt = 1e-3\nmode = stochastic_norm\n";
  CHECK_THROWS_AS(validate_run_config(parse("[model]\nid = bank\n" + runs)), config_error);
  CHECK_THROWS_AS(validate_run_config(parse("[model]\nid = hybrid_bank\n" + runs)), config_error);
  CHECK_NOTHROW(validate_run_config(parse("[model]\nid = tanh_vol\n" + runs)));
  CHECK_NOTHROW(validate_run_config(parse("[model]\nid = gaussian_const_vol\n" + runs)));
}

TEST_CASE("model blocks build the matching specifications") {
  const auto bank = build_model(parse("[model]\nid = bank\nkappa = -0.5\n"));
  CHECK(bank.cls == ModelClass::bank);
  CHECK(bank.kappa == -0.5);

  const auto hybrid = build_model(parse("[model]\nid = hybrid_bank\n"));
  CHECK(hybrid.cls == ModelClass::hybrid_bank);

  const auto tanh_m = build_model(parse("[model]\nid = tanh_vol\nr0 = 2\nm0 = 1\nsigma0_sq = 9\n"));
  CHECK(tanh_m.cls == ModelClass::bounded_vol);
  CHECK(tanh_m.drift_rate == 2.0);
  CHECK(tanh_m.initial_mean == 1.0);
  CHECK(tanh_m.initial_variance == 9.0);

  const auto flat = build_model(parse("[model]\nid = gaussian_const_vol\nsigma_const = 0.5\n"));
  CHECK(flat.vol_lo == 0.5);
  CHECK(flat.vol_hi == 0.5);

  CHECK_THROWS_AS(build_model(parse("[model]\nid = brownian_zoo\n")), config_error);
}

TEST_CASE("plans inherit the resolved run parameters") {
  auto cfg = parse(base +
                   "dt = 1e-3\nmode = iid_limit\nseed = 99\nt_star = 0.5\nlaw_h = "
                   "1e-3\nquad_order = 32\nout = results\n");
  validate_run_config(cfg);
  const auto plan = to_plan(cfg);
  CHECK(plan.model.id == "bank");
  CHECK(plan.mode == Mode::iid_limit);
  CHECK(plan.particle_counts == cfg.particle_counts);
  CHECK(plan.replications == 100);
  CHECK(plan.t_star == 0.5);
  CHECK(plan.dt == 1e-3);
  CHECK(plan.base_seed == 99);
  CHECK(plan.law_h == 1e-3);
  CHECK(plan.quad_order == 32);
  CHECK(cfg.out_dir == "results");
}

#pragma once

// Flat key = value config files with one level of [section] grouping.
// Example:
//
//   experiment = bank_gumbel
//   profile = paper
//
//   [model]
//   id = bank
//
//   [run]
//   mode = interacting
//   particles = 200
//   replications = 1000
//   t_star = 1
//   bin_width = 0.1
//   seed = 94

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "models.hpp"
#include "rng.hpp"

namespace meanfield {

struct config_error : std::runtime_error {
  int line;
  std::string field;
  config_error(int line_, std::string field_, const std::string& msg)
      : std::runtime_error("config error at line " + std::to_string(line_) +
                          (field_.empty() ? "" : " (field " + field_ + ")") + ": " + msg),
        line(line_), field(std::move(field_)) {}
};

struct RunConfig {
  std::string experiment = "experiment";
  std::string profile;  // "", "fast" (dt 1e-3) or "paper" (dt 1e-4)
  std::string generator = generator_id;

  std::string model_id;
  double r0 = 1.0;
  double m0 = 0.0;
  double sigma0_sq = 1.0;
  double sigma_const = 1.0;
  double kappa = 1.0;

  Mode mode = Mode::interacting;
  std::string out_dir = "out";
  std::vector<std::uint64_t> particle_counts;
  std::uint64_t replications = 0;
  double dt = 0.0;
  double t_star = 1.0;
  double bin_width = 0.1;
  std::uint64_t base_seed = 1;
  double law_h = 1e-4;
  int quad_order = 64;

  bool has_dt = false;
  bool has_replications = false;
  double dt_key = 0.0;
  bool has_dt_key = false;
  double horizon_key = 0.0;
  bool has_horizon_key = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_real(const std::string& v, int line, const std::string& field) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw config_error(line, field, "expected a real number, got '" + v + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& v, int line, const std::string& field) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw config_error(line, field, "expected a nonnegative integer, got '" + v + "'");
  return x;
}

inline std::vector<std::uint64_t> parse_u64_list(const std::string& v, int line,
                                                 const std::string& field) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw config_error(line, field, "empty entry in list");
    out.push_back(parse_u64(item, line, field));
  }
  if (out.empty()) throw config_error(line, field, "empty list");
  return out;
}

}  // namespace detail

// A profile pins the step (fast: dt 1e-3 for CI, paper: dt 1e-4) and takes
// precedence over an explicit dt key; the --profile flag takes precedence
// over the config's profile line.
inline void resolve_step(RunConfig& cfg, const std::string& profile_override = "") {
  const std::string profile = profile_override.empty() ? cfg.profile : profile_override;
  if (!profile.empty() && profile != "fast" && profile != "paper")
    throw config_error(0, "profile", "unknown profile '" + profile + "' (use fast or paper)");
  cfg.profile = profile;
  if (profile == "fast") {
    cfg.dt = 1e-3;
    cfg.has_dt = true;
  } else if (profile == "paper") {
    cfg.dt = 1e-4;
    cfg.has_dt = true;
  } else if (cfg.has_dt_key) {
    cfg.dt = cfg.dt_key;
    cfg.has_dt = true;
  } else {
    cfg.has_dt = false;
  }
}

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error(lineno, "", "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "run")
        throw config_error(lineno, section, "unknown section (use [model] or [run])");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error(lineno, "", "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw config_error(lineno, "", "missing key before '='");
    if (val.empty()) throw config_error(lineno, key, "missing value");

    if (section.empty()) {
      if (key == "experiment")
        cfg.experiment = val;
      else if (key == "profile") {
        if (val != "fast" && val != "paper")
          throw config_error(lineno, key, "unknown profile '" + val + "' (use fast or paper)");
        cfg.profile = val;
      } else if (key == "generator") {
        if (val != generator_id)
          throw config_error(lineno, key, "generator must be '" + std::string(generator_id) +
                                              "' (pinned for reproducibility)");
        cfg.generator = val;
      } else
        throw config_error(lineno, key, "unknown top-level key");
    } else if (section == "model") {
      if (key == "id")
        cfg.model_id = val;
      else if (key == "r0")
        cfg.r0 = detail::parse_real(val, lineno, key);
      else if (key == "m0")
        cfg.m0 = detail::parse_real(val, lineno, key);
      else if (key == "sigma0_sq")
        cfg.sigma0_sq = detail::parse_real(val, lineno, key);
      else if (key == "sigma_const")
        cfg.sigma_const = detail::parse_real(val, lineno, key);
      else if (key == "kappa")
        cfg.kappa = detail::parse_real(val, lineno, key);
      else
        throw config_error(lineno, key, "unknown model key");
    } else {  // run
      if (key == "mode") {
        if (val == "interacting")
          cfg.mode = Mode::interacting;
        else if (val == "iid_limit")
          cfg.mode = Mode::iid_limit;
        else if (val == "stochastic_norm")
          cfg.mode = Mode::stochastic_norm;
        else
          throw config_error(lineno, key, "unknown mode '" + val + "'");
      } else if (key == "particles")
        cfg.particle_counts = detail::parse_u64_list(val, lineno, key);
      else if (key == "replications") {
        cfg.replications = detail::parse_u64(val, lineno, key);
        cfg.has_replications = true;
      } else if (key == "dt") {
        cfg.dt_key = detail::parse_real(val, lineno, key);
        cfg.has_dt_key = true;
      } else if (key == "t_star")
        cfg.t_star = detail::parse_real(val, lineno, key);
      else if (key == "T") {
        cfg.horizon_key = detail::parse_real(val, lineno, key);
        cfg.has_horizon_key = true;
      } else if (key == "bin_width")
        cfg.bin_width = detail::parse_real(val, lineno, key);
      else if (key == "seed")
        cfg.base_seed = detail::parse_u64(val, lineno, key);
      else if (key == "out")
        cfg.out_dir = val;
      else if (key == "law_h")
        cfg.law_h = detail::parse_real(val, lineno, key);
      else if (key == "quad_order")
        cfg.quad_order = int(detail::parse_u64(val, lineno, key));
      else
        throw config_error(lineno, key, "unknown run key");
    }
  }
  resolve_step(cfg);
  return cfg;
}

inline ModelSpec build_model(const RunConfig& cfg) {
  if (cfg.model_id == "bank") return make_bank(cfg.kappa);
  if (cfg.model_id == "hybrid_bank") return make_hybrid_bank();
  if (cfg.model_id == "tanh_vol") return make_tanh_vol(cfg.r0, cfg.m0, cfg.sigma0_sq);
  if (cfg.model_id == "gaussian_const_vol")
    return make_const_vol(cfg.r0, cfg.sigma_const, cfg.m0, cfg.sigma0_sq);
  throw config_error(0, "id", "unknown model '" + cfg.model_id + "'");
}

// Full validation before anything runs or writes; throws config_error.
inline void validate_run_config(const RunConfig& cfg) {
  if (cfg.model_id.empty()) throw config_error(0, "id", "missing model id");
  if (cfg.particle_counts.empty()) throw config_error(0, "particles", "missing particle counts");
  for (const auto n : cfg.particle_counts)
    if (n < 5) throw config_error(0, "particles", "particle counts must be at least 5");
  if (!cfg.has_replications) throw config_error(0, "replications", "missing replication count");
  if (cfg.replications < 1) throw config_error(0, "replications", "must be at least 1");
  if (!cfg.has_dt || !(cfg.dt > 0.0))
    throw config_error(0, "dt", "missing or nonpositive step (set dt or a profile)");
  if (!(cfg.t_star >= 0.0)) throw config_error(0, "t_star", "evaluation time must be nonnegative");
  if (cfg.has_horizon_key && cfg.horizon_key != cfg.t_star)
    throw config_error(0, "T", "horizon must equal the evaluation time t_star");
  if (!(cfg.bin_width > 0.0) ||
      std::abs(std::round(1.0 / cfg.bin_width) * cfg.bin_width - 1.0) > 1e-9)
    throw config_error(0, "bin_width", "bin width must divide 1 evenly");
  if (!(cfg.sigma0_sq > 0.0)) throw config_error(0, "sigma0_sq", "initial variance must be positive");
  if (cfg.law_h <= 0.0) throw config_error(0, "law_h", "ode step must be positive");
  if (cfg.quad_order < 2) throw config_error(0, "quad_order", "quadrature order too small");
  const auto model = build_model(cfg);
  if (cfg.mode == Mode::stochastic_norm && model.cls != ModelClass::bounded_vol)
    throw config_error(0, "mode",
                       "stochastic_norm requires a bounded-volatility model (tanh_vol or "
                       "gaussian_const_vol)");
}

inline ExperimentPlan to_plan(const RunConfig& cfg) {
  ExperimentPlan plan;
  plan.model = build_model(cfg);
  plan.mode = cfg.mode;
  plan.particle_counts = cfg.particle_counts;
  plan.replications = cfg.replications;
  plan.t_star = cfg.t_star;
  plan.dt = cfg.dt;
  plan.base_seed = cfg.base_seed;
  plan.law_h = cfg.law_h;
  plan.quad_order = cfg.quad_order;
  return plan;
}

}  // namespace meanfield

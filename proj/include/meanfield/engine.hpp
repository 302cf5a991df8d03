#pragma once

// Euler-Maruyama time stepping of the N-particle system. Both empirical
// statistics are frozen at the step's left endpoint before any position
// moves, and the empirical time change tau_N accumulates the squared
// diffusion coefficient with the same left-endpoint convention:
//   x_i <- x_i + r(x_i, z_r) dt + sigma(x_i, z_s) sqrt(dt) Z_i
//   tau_N <- tau_N + sigma(., z_s)^2 dt.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "limitlaw.hpp"
#include "models.hpp"
#include "rng.hpp"

namespace meanfield {

struct SimulationConfig {
  std::uint64_t particle_count = 1;
  double step = 1e-3;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  bool store_trajectory = false;

  std::uint64_t step_count() const { return std::uint64_t(std::llround(horizon / step)); }

  void validate() const {
    if (particle_count < 1) throw std::invalid_argument("particle count must be at least 1");
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
  }
};

struct ParticleEnsemble {
  std::vector<double> positions;
  double t = 0.0;
  double tau_n = 0.0;
};

struct TrajectoryRow {
  double t;
  double tau_n;
  std::vector<double> positions;
};

struct SimulationResult {
  ParticleEnsemble terminal;
  std::vector<TrajectoryRow> trajectory;  // empty unless store_trajectory
};

inline ParticleEnsemble initialize(const ModelSpec& model, const SimulationConfig& config,
                                   NormalStream& rng) {
  config.validate();
  detail::check_initial_variance(model.initial_variance);
  ParticleEnsemble e;
  e.positions.resize(config.particle_count);
  const double sd = std::sqrt(model.initial_variance);
  for (auto& x : e.positions) x = model.initial_mean + sd * rng.normal();
  return e;
}

namespace detail {

inline double compensated_mean(std::span<const double> xs) {
  double acc = 0.0, comp = 0.0;
  for (const double x : xs) {
    const double t = acc + x;
    comp += std::abs(acc) >= std::abs(x) ? (acc - t) + x : (x - t) + acc;
    acc = t;
  }
  return (acc + comp) / double(xs.size());
}

inline double compensated_mean_sq(std::span<const double> xs) {
  double acc = 0.0, comp = 0.0;
  for (const double x : xs) {
    const double y = x * x;
    const double t = acc + y;
    comp += std::abs(acc) >= std::abs(y) ? (acc - t) + y : (y - t) + acc;
    acc = t;
  }
  return (acc + comp) / double(xs.size());
}

inline double statistic_for(KernelKind kind, const std::function<double(double)>& kernel,
                            std::span<const double> xs) {
  switch (kind) {
    case KernelKind::identity: return compensated_mean(xs);
    case KernelKind::square: return compensated_mean_sq(xs);
    default: return empirical_statistic(kernel, xs);
  }
}

}  // namespace detail

inline void em_step(ParticleEnsemble& e, const ModelSpec& model, double dt, NormalStream& rng) {
  auto& x = e.positions;
  if (x.empty()) throw std::invalid_argument("empty ensemble");

  const double z_r = detail::statistic_for(model.kernel_drift_kind, model.kernel_drift, x);
  const double z_s = detail::statistic_for(model.kernel_diffusion_kind, model.kernel_diffusion, x);
  if (!std::isfinite(z_r)) throw blow_up_error(e.t, z_r);
  if (!std::isfinite(z_s)) throw blow_up_error(e.t, z_s);

  const double sqdt = std::sqrt(dt);
  double sig0;  // diffusion with the x slot pinned at 0, for the tau increment

  switch (model.cls) {
    case ModelClass::bank: {
      const double sig = std::sqrt(z_s);
      if (!std::isfinite(sig)) throw blow_up_error(e.t, sig);
      const double kdt = model.kappa * dt;
      const double ssq = sig * sqdt;
      for (auto& xi : x) xi += (xi - z_r) * kdt + ssq * rng.normal();
      sig0 = sig;
      break;
    }
    case ModelClass::hybrid_bank: {
      const double sig = std::exp(1.5 * e.t);
      if (!std::isfinite(sig)) throw blow_up_error(e.t, sig);
      const double ssq = sig * sqdt;
      for (auto& xi : x) xi += (xi - z_r) * dt + ssq * rng.normal();
      sig0 = sig;
      break;
    }
    case ModelClass::bounded_vol: {
      const double sig = model.vol(z_s);
      if (!std::isfinite(sig)) throw blow_up_error(e.t, sig);
      const double rdt = model.drift_rate * dt;
      const double ssq = sig * sqdt;
      for (auto& xi : x) xi += rdt + ssq * rng.normal();
      sig0 = sig;
      break;
    }
    default: {
      for (auto& xi : x) {
        const double dr = model.drift(xi, z_r);
        const double df = model.diffusion(xi, z_s);
        if (!std::isfinite(dr)) throw blow_up_error(e.t, dr);
        if (!std::isfinite(df)) throw blow_up_error(e.t, df);
        xi += dr * dt + (df * sqdt) * rng.normal();
      }
      sig0 = model.diffusion(0.0, z_s);
      if (!std::isfinite(sig0)) throw blow_up_error(e.t, sig0);
      break;
    }
  }

  e.tau_n += sig0 * sig0 * dt;
  e.t += dt;
}

inline SimulationResult simulate(const ModelSpec& model, const SimulationConfig& config) {
  config.validate();
  NormalStream rng = make_stream(config.seed, config.particle_count, 0);
  SimulationResult out;
  out.terminal = initialize(model, config, rng);
  auto& e = out.terminal;
  const std::uint64_t steps = config.step_count();
  if (config.store_trajectory) out.trajectory.push_back({e.t, e.tau_n, e.positions});
  for (std::uint64_t k = 0; k < steps; ++k) {
    try {
      em_step(e, model, config.step, rng);
    } catch (const blow_up_error& err) {
      throw blow_up_error(err.t, err.value, long(k));
    }
    if (config.store_trajectory) out.trajectory.push_back({e.t, e.tau_n, e.positions});
  }
  for (const double xi : e.positions)
    if (!std::isfinite(xi)) throw blow_up_error(e.t, xi, long(steps) - 1);
  return out;
}

// The i.i.d. baseline draws straight from the limiting Gaussian law; no time
// stepping is involved.
inline std::vector<double> sample_iid_limit(const LimitLawPath& law, double t, std::uint64_t n,
                                            NormalStream& rng) {
  const double m = mean_at(law, t);
  const double sd = std::sqrt(var_at(law, t));
  std::vector<double> xs(n);
  for (auto& x : xs) x = m + sd * rng.normal();
  return xs;
}

}  // namespace meanfield

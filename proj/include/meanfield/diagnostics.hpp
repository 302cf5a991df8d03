#pragma once

// Replicated experiments and their statistical summaries: PIT histograms, KS
// uniformity scores, the discretization/LLN error budget, and the convergence
// studies for the empirical time change and the corrected normalizers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "engine.hpp"
#include "extremes.hpp"
#include "limitlaw.hpp"
#include "models.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace meanfield {

enum class Mode { interacting, iid_limit, stochastic_norm };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::interacting: return "interacting";
    case Mode::iid_limit: return "iid_limit";
    default: return "stochastic_norm";
  }
}

struct ExperimentPlan {
  ModelSpec model;
  Mode mode = Mode::interacting;
  std::vector<std::uint64_t> particle_counts;
  std::uint64_t replications = 1;
  double t_star = 1.0;
  double dt = 1e-3;
  std::uint64_t base_seed = 1;
  double law_h = 1e-4;
  int quad_order = 64;

  void validate() const {
    if (replications < 1) throw std::invalid_argument("replications must be at least 1");
    if (particle_counts.empty()) throw std::invalid_argument("particle count list must be nonempty");
    for (const auto n : particle_counts)
      if (n < 5) throw std::invalid_argument("particle counts must be at least 5");
    if (!(dt > 0.0)) throw std::invalid_argument("step must be positive");
    if (!(t_star >= 0.0)) throw std::invalid_argument("evaluation time must be nonnegative");
  }
};

// One replicated run at a fixed particle count, with enough provenance to
// reproduce any single replication standalone.
struct MaximaSample {
  std::uint64_t n = 0;
  std::uint64_t replications = 0;
  Mode mode = Mode::interacting;
  double dt = 0.0;
  double t_star = 0.0;
  std::uint64_t base_seed = 0;
  std::string model_id;
  NormalizingConstants det_normalizers{1.0, 0.0, 5, NormalizerSource::deterministic};

  std::vector<double> m_values;
  std::vector<double> u_values;
  std::vector<std::uint64_t> seeds;
  std::vector<double> tau_n;  // empty in iid_limit mode
};

namespace detail {

template <class Body>
void parallel_for(std::uint64_t count, int jobs, Body&& body) {
  if (jobs <= 0) jobs = int(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  jobs = int(std::min<std::uint64_t>(std::uint64_t(jobs), count));
  if (jobs <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::uint64_t first_error_index = ~std::uint64_t(0);
  std::vector<std::thread> workers;
  workers.reserve(std::size_t(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (i < first_error_index) {
            first_error_index = i;
            first_error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Horizon for the solved law: stochastic normalizers evaluate tau^{-1} at the
// realized tau_N, which can exceed tau(t*), so cover the worst case
// vol_hi^2 t* reachable inside the bounded class.
inline double law_horizon(const ModelSpec& model, double t_star) {
  if (model.cls == ModelClass::bounded_vol && model.vol_lo > 0.0) {
    const double stretch = (model.vol_hi / model.vol_lo) * (model.vol_hi / model.vol_lo);
    return t_star * std::max(1.0, stretch) + 1e-9;
  }
  return t_star;
}

}  // namespace detail

inline std::map<std::uint64_t, MaximaSample> run_experiment(const ExperimentPlan& plan,
                                                            int jobs = 0) {
  plan.validate();
  if (plan.mode == Mode::stochastic_norm && plan.model.cls != ModelClass::bounded_vol)
    throw std::invalid_argument("stochastic normalizers require the bounded-volatility class");

  const LimitLawPath law =
      solve_limit_law(plan.model, detail::law_horizon(plan.model, plan.t_star), plan.law_h,
                      plan.quad_order);

  std::map<std::uint64_t, MaximaSample> out;
  for (const std::uint64_t n : plan.particle_counts) {
    MaximaSample s;
    s.n = n;
    s.replications = plan.replications;
    s.mode = plan.mode;
    s.dt = plan.dt;
    s.t_star = plan.t_star;
    s.base_seed = plan.base_seed;
    s.model_id = plan.model.id;
    s.det_normalizers =
        normalizers(n, mean_at(law, plan.t_star), std::sqrt(var_at(law, plan.t_star)));
    s.m_values.resize(plan.replications);
    s.u_values.resize(plan.replications);
    s.seeds.resize(plan.replications);
    if (plan.mode != Mode::iid_limit) s.tau_n.resize(plan.replications);

    detail::parallel_for(plan.replications, jobs, [&](std::uint64_t j) {
      const std::uint64_t rep_seed = derive_replication_seed(plan.base_seed, n, j);
      s.seeds[j] = rep_seed;
      try {
        PitResult pit{};
        if (plan.mode == Mode::iid_limit) {
          NormalStream rng = make_stream(rep_seed, n, 0);
          const auto xs = sample_iid_limit(law, plan.t_star, n, rng);
          pit = normalize_and_pit(xs, s.det_normalizers);
        } else {
          SimulationConfig cfg;
          cfg.particle_count = n;
          cfg.step = plan.dt;
          cfg.horizon = plan.t_star;
          cfg.seed = rep_seed;
          const auto res = simulate(plan.model, cfg);
          s.tau_n[j] = res.terminal.tau_n;
          if (plan.mode == Mode::stochastic_norm) {
            const auto nc = stochastic_normalizers(res.terminal.tau_n, law, plan.model, n);
            pit = normalize_and_pit(res.terminal.positions, nc);
          } else {
            pit = normalize_and_pit(res.terminal.positions, s.det_normalizers);
          }
        }
        s.m_values[j] = pit.m;
        s.u_values[j] = pit.u;
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string(e.what()) + " (N=" + std::to_string(n) +
                                 ", replication=" + std::to_string(j) + ")");
      }
    });
    out.emplace(n, std::move(s));
  }
  return out;
}

// ---- uniformity summaries ----

// Exact sup distance of the empirical CDF from the uniform, computed from the
// sorted sample: D = max_i max(i/R - U_(i), U_(i) - (i-1)/R).
inline double ks_statistic(std::vector<double> u) {
  if (u.empty()) throw std::invalid_argument("empty ensemble");
  std::sort(u.begin(), u.end());
  const double r = double(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, double(i + 1) / r - u[i]);
    d = std::max(d, u[i] - double(i) / r);
  }
  return d;
}

struct ErrorBudget {
  double discretization;  // sqrt(dt) sqrt(2 ln N)
  double lln_per_bin;     // 0.5 / sqrt(R), worst case p = 1/2
};

inline ErrorBudget error_budget(double dt, std::uint64_t n, std::uint64_t r) {
  return {std::sqrt(dt) * std::sqrt(2.0 * std::log(double(n))), 0.5 / std::sqrt(double(r))};
}

struct HistogramReport {
  double bin_width = 0.1;
  std::vector<std::uint64_t> counts;
  double ks = 0.0;
  double ks_critical_5pct = 0.0;
  double ks_critical_1pct = 0.0;
  ErrorBudget budget{0.0, 0.0};
};

inline HistogramReport uniformity_report(const MaximaSample& sample, double bin_width = 0.1) {
  if (sample.u_values.empty()) throw std::invalid_argument("empty ensemble");
  const double bins_real = 1.0 / bin_width;
  const std::size_t bins = std::size_t(std::llround(bins_real));
  if (!(bin_width > 0.0) || std::abs(double(bins) * bin_width - 1.0) > 1e-9)
    throw std::invalid_argument("bin width must divide 1 evenly");

  HistogramReport rep;
  rep.bin_width = bin_width;
  rep.counts.assign(bins, 0);
  for (const double u : sample.u_values) {
    // half-open bins, except U = 1 lands in the last (saturated maxima are
    // legitimate samples)
    std::size_t k = std::size_t(u / bin_width);
    if (k >= bins) k = bins - 1;
    ++rep.counts[k];
  }
  const std::uint64_t r = sample.u_values.size();
  rep.ks = ks_statistic(sample.u_values);
  rep.ks_critical_5pct = 1.358 / std::sqrt(double(r));
  rep.ks_critical_1pct = 1.628 / std::sqrt(double(r));
  rep.budget = error_budget(sample.dt, std::max<std::uint64_t>(sample.n, 1), r);
  if (sample.mode == Mode::iid_limit) rep.budget.discretization = 0.0;
  return rep;
}

// ---- convergence studies ----

struct TauStudyRow {
  std::uint64_t n;
  double mean_abs_err;
  double stdev;
};

struct TauStudy {
  std::vector<TauStudyRow> rows;
  double tau_ref = 0.0;
  double slope = 0.0;
  bool has_slope = false;
};

inline double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t k = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (double(k) * sxy - sx * sy) / (double(k) * sxx - sx * sx);
}

inline TauStudy tau_convergence_study(const ModelSpec& model,
                                      const std::vector<std::uint64_t>& particle_counts,
                                      std::uint64_t replications, double t_star, double dt,
                                      std::uint64_t base_seed, int jobs = 0, double law_h = 1e-4) {
  if (model.cls != ModelClass::bounded_vol)
    throw std::invalid_argument("time-change study requires the bounded-volatility class");
  const LimitLawPath law = solve_limit_law(model, t_star, law_h);
  TauStudy study;
  study.tau_ref = tau_of(law, t_star);
  for (const std::uint64_t n : particle_counts) {
    std::vector<double> errs(replications);
    detail::parallel_for(replications, jobs, [&](std::uint64_t j) {
      SimulationConfig cfg;
      cfg.particle_count = n;
      cfg.step = dt;
      cfg.horizon = t_star;
      cfg.seed = derive_replication_seed(base_seed, n, j);
      const auto res = simulate(model, cfg);
      errs[j] = std::abs(res.terminal.tau_n - study.tau_ref);
    });
    double mean = 0.0;
    for (const double e : errs) mean += e;
    mean /= double(replications);
    double var = 0.0;
    for (const double e : errs) var += (e - mean) * (e - mean);
    var = replications > 1 ? var / double(replications - 1) : 0.0;
    study.rows.push_back({n, mean, std::sqrt(var)});
  }
  if (study.rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& row : study.rows) {
      xs.push_back(double(row.n));
      ys.push_back(row.mean_abs_err);
    }
    study.slope = fit_loglog_slope(xs, ys);
    study.has_slope = true;
  }
  return study;
}

struct RatioStudyRow {
  std::uint64_t n;
  double mean_a_disc;  // mean |a_stoch / a_det - 1|
  double mean_b_disc;  // mean |(b_stoch - b_det) / a_det|
};

inline std::vector<RatioStudyRow> proposition_ratio_study(
    const ModelSpec& model, const std::vector<std::uint64_t>& particle_counts,
    std::uint64_t replications, double t_star, double dt, std::uint64_t base_seed, int jobs = 0,
    double law_h = 1e-4) {
  if (model.cls != ModelClass::bounded_vol)
    throw std::invalid_argument("normalizer ratio study requires the bounded-volatility class");
  const LimitLawPath law =
      solve_limit_law(model, detail::law_horizon(model, t_star), law_h);
  std::vector<RatioStudyRow> rows;
  for (const std::uint64_t n : particle_counts) {
    const auto det = normalizers(n, mean_at(law, t_star), std::sqrt(var_at(law, t_star)));
    std::vector<double> a_disc(replications), b_disc(replications);
    detail::parallel_for(replications, jobs, [&](std::uint64_t j) {
      SimulationConfig cfg;
      cfg.particle_count = n;
      cfg.step = dt;
      cfg.horizon = t_star;
      cfg.seed = derive_replication_seed(base_seed, n, j);
      const auto res = simulate(model, cfg);
      const auto sto = stochastic_normalizers(res.terminal.tau_n, law, model, n);
      a_disc[j] = std::abs(sto.a / det.a - 1.0);
      b_disc[j] = std::abs((sto.b - det.b) / det.a);
    });
    double ma = 0.0, mb = 0.0;
    for (std::uint64_t j = 0; j < replications; ++j) {
      ma += a_disc[j];
      mb += b_disc[j];
    }
    rows.push_back({n, ma / double(replications), mb / double(replications)});
  }
  return rows;
}

// ---- empirical moment bounds ----

struct MomentRow {
  int p;
  double moment;  // empirical E[(mean g(X_i) - E g(X))^{2p}]
  double std_error;
  bool within_fitted_bound;
};

struct MomentCheck {
  std::vector<MomentRow> rows;
  double fitted_k = 0.0;
  double oracle_p1 = 0.0;  // Var(g(X)) / N, exact for the Gaussian limit law
  bool p1_consistent = false;
  std::string status;  // "ok" or "insufficient replications"
};

inline MomentCheck moment_bound_check(const ModelSpec& model, std::uint64_t n,
                                      std::uint64_t replications, double t_star, int p_max,
                                      std::uint64_t base_seed, int jobs = 0, double law_h = 1e-4) {
  if (model.cls != ModelClass::bounded_vol)
    throw std::invalid_argument("moment bound check requires the bounded-volatility class");
  if (p_max < 1 || p_max > 3)
    throw std::invalid_argument("moment order must be between 1 and 3");
  MomentCheck out;
  if (replications < 2) {
    out.status = "insufficient replications";
    return out;
  }
  const LimitLawPath law = solve_limit_law(model, std::max(t_star, law_h), law_h);
  const double m_star = mean_at(law, t_star);
  const double v_star = var_at(law, t_star);
  const auto& g = model.kernel_diffusion;
  const double e_star = expect_gaussian(g, m_star, v_star);
  const double e2_star = expect_gaussian([&](double x) { const double y = g(x); return y * y; },
                                         m_star, v_star);
  const double var_g = e2_star - e_star * e_star;

  std::vector<double> dev(replications);
  detail::parallel_for(replications, jobs, [&](std::uint64_t j) {
    NormalStream rng = make_stream(derive_replication_seed(base_seed, n, j), n, 0);
    const auto xs = sample_iid_limit(law, t_star, n, rng);
    dev[j] = empirical_statistic(g, xs) - e_star;
  });

  double factorial = 1.0;
  for (int p = 1; p <= p_max; ++p) {
    factorial *= double(p);
    double mean = 0.0;
    for (const double d : dev) mean += std::pow(d, 2 * p);
    mean /= double(replications);
    double var = 0.0;
    for (const double d : dev) {
      const double y = std::pow(d, 2 * p) - mean;
      var += y * y;
    }
    var /= double(replications - 1);
    out.rows.push_back({p, mean, std::sqrt(var / double(replications)), false});
    const double k_p = std::pow(mean * std::pow(double(n), double(p)) / factorial, 1.0 / double(p));
    out.fitted_k = std::max(out.fitted_k, k_p);
  }
  factorial = 1.0;
  for (auto& row : out.rows) {
    factorial *= double(row.p);
    const double bound = factorial * std::pow(out.fitted_k / double(n), double(row.p));
    row.within_fitted_bound = row.moment <= bound * (1.0 + 1e-9);
  }
  out.oracle_p1 = var_g / double(n);
  const auto& p1 = out.rows.front();
  out.p1_consistent = p1.moment <= out.oracle_p1 + 3.0 * p1.std_error;
  out.status = "ok";
  return out;
}

// ---- scheme order sanity ----

struct StrongOrderRow {
  double dt;
  double rms_error;
};

struct StrongOrderStudy {
  std::vector<StrongOrderRow> rows;
  std::vector<double> ratios;  // rms(dt) / rms(dt/2) per halving
};

// Euler-Maruyama against the closed-form geometric Brownian motion
// dX = X dt + X dB, X_T = exp(T/2 + B_T), sharing one fine Brownian path
// across all levels.
inline StrongOrderStudy strong_order_study(std::uint64_t paths = 1000, std::uint64_t seed = 7,
                                           double horizon = 1.0) {
  constexpr int kLevels = 4;
  const std::uint64_t fine_steps = 128;
  StrongOrderStudy study;
  std::vector<double> sumsq(kLevels, 0.0);
  std::vector<double> dw(fine_steps);
  for (std::uint64_t p = 0; p < paths; ++p) {
    NormalStream rng = make_stream(seed, fine_steps, p);
    const double sq = std::sqrt(horizon / double(fine_steps));
    double b_total = 0.0;
    for (auto& w : dw) {
      w = sq * rng.normal();
      b_total += w;
    }
    const double exact = std::exp(0.5 * horizon + b_total);
    for (int level = 0; level < kLevels; ++level) {
      const std::uint64_t agg = fine_steps / (16ull << level);  // fine increments per coarse step
      const std::uint64_t steps = 16ull << level;
      const double dt = horizon / double(steps);
      double x = 1.0;
      for (std::uint64_t k = 0; k < steps; ++k) {
        double inc = 0.0;
        for (std::uint64_t i = 0; i < agg; ++i) inc += dw[k * agg + i];
        x += x * dt + x * inc;
      }
      const double err = x - exact;
      sumsq[std::size_t(level)] += err * err;
    }
  }
  // rows ordered coarse to fine; ratios compare each dt against dt/2
  for (int level = 0; level < kLevels; ++level) {
    const double dt = horizon / double(16ull << level);
    study.rows.push_back({dt, std::sqrt(sumsq[std::size_t(level)] / double(paths))});
  }
  for (std::size_t i = 0; i + 1 < study.rows.size(); ++i)
    study.ratios.push_back(study.rows[i].rms_error / study.rows[i + 1].rms_error);
  return study;
}

}  // namespace meanfield

#pragma once

// Mean-field model descriptors. A model couples each particle to the others
// only through two empirical statistics, one feeding the drift and one the
// diffusion: dX_i = r(X_i, <g_r, mu>) dt + sigma(X_i, <g_s, mu>) dB_i.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include "errors.hpp"

namespace meanfield {

// bounded_vol: constant drift rate and z-only volatility with declared bounds
// 0 < vol_lo <= sigma(z) <= vol_hi. This is the class the Gumbel limit and the
// time-change theory cover. The bank models fall outside it (unbounded
// diffusion); general carries arbitrary user coefficients.
enum class ModelClass { bounded_vol, bank, hybrid_bank, general };

inline const char* to_string(ModelClass c) {
  switch (c) {
    case ModelClass::bounded_vol: return "bounded_vol";
    case ModelClass::bank: return "bank";
    case ModelClass::hybrid_bank: return "hybrid_bank";
    default: return "general";
  }
}

// Fast paths in the engine key off these so the built-in kernels avoid
// per-particle std::function calls.
enum class KernelKind { identity, square, custom };

struct ModelSpec {
  std::function<double(double, double)> drift;      // r(x, z)
  std::function<double(double, double)> diffusion;  // sigma(x, z); unused by hybrid_bank
  std::function<double(double)> kernel_drift;       // g_r
  std::function<double(double)> kernel_diffusion;   // g_s
  KernelKind kernel_drift_kind = KernelKind::custom;
  KernelKind kernel_diffusion_kind = KernelKind::custom;
  double initial_mean = 0.0;
  double initial_variance = 1.0;
  ModelClass cls = ModelClass::general;
  std::string id = "general";

  // bounded_vol extras: constant drift rate and the z-only volatility shape
  // (also what the limit-law solver integrates).
  double drift_rate = 0.0;
  std::function<double(double)> vol;
  double vol_lo = 0.0;
  double vol_hi = 0.0;

  // bank mean-reversion coefficient; the modelling literature argues for
  // negative values (borrowing pulls reserves toward the mean) but the
  // simulated equation uses +1, which is the default here.
  double kappa = 1.0;

  // sigma(x, z) with time passed explicitly; only the hybrid model reads t
  // (its volatility is the deterministic limit e^{3t/2}).
  double diffusion_at(double x, double z, double t) const {
    if (cls == ModelClass::hybrid_bank) return std::exp(1.5 * t);
    return diffusion(x, z);
  }

  double drift_at(double x, double z) const { return drift(x, z); }
};

namespace detail {
inline void check_initial_variance(double s0sq) {
  if (!(s0sq > 0.0)) throw std::invalid_argument("initial variance must be positive");
}
}  // namespace detail

inline ModelSpec make_bank(double kappa = 1.0) {
  ModelSpec m;
  m.drift = [kappa](double x, double z) { return kappa * (x - z); };
  m.diffusion = [](double, double z) { return std::sqrt(z); };
  m.kernel_drift = [](double x) { return x; };
  m.kernel_diffusion = [](double x) { return x * x; };
  m.kernel_drift_kind = KernelKind::identity;
  m.kernel_diffusion_kind = KernelKind::square;
  m.initial_mean = 0.0;
  m.initial_variance = 1.0;
  m.cls = ModelClass::bank;
  m.id = "bank";
  m.kappa = kappa;
  return m;
}

inline ModelSpec make_hybrid_bank() {
  ModelSpec m;
  m.drift = [](double x, double z) { return x - z; };
  m.diffusion = nullptr;  // deterministic in time; see diffusion_at
  m.kernel_drift = [](double x) { return x; };
  m.kernel_diffusion = [](double x) { return x * x; };
  m.kernel_drift_kind = KernelKind::identity;
  m.kernel_diffusion_kind = KernelKind::square;
  m.initial_mean = 0.0;
  m.initial_variance = 1.0;
  m.cls = ModelClass::hybrid_bank;
  m.id = "hybrid_bank";
  return m;
}

// General member of the bounded class: constant drift r0, volatility sigma(z)
// with bounds [lo, hi] on the sampled range, interaction kernel g for the
// diffusion statistic. The drift statistic is never consumed (drift constant)
// but g_r = identity keeps the interface uniform.
inline ModelSpec make_bounded_vol(double r0, std::function<double(double)> vol,
                                  std::function<double(double)> kernel, double lo, double hi,
                                  double m0, double s0sq, std::string id = "bounded_vol") {
  detail::check_initial_variance(s0sq);
  if (!(0.0 < lo && lo <= hi)) throw std::invalid_argument("volatility bounds must satisfy 0 < lo <= hi");
  ModelSpec m;
  auto v = vol;
  m.drift = [r0](double, double) { return r0; };
  m.diffusion = [v](double, double z) { return v(z); };
  m.kernel_drift = [](double x) { return x; };
  m.kernel_diffusion = std::move(kernel);
  m.kernel_drift_kind = KernelKind::identity;
  m.initial_mean = m0;
  m.initial_variance = s0sq;
  m.cls = ModelClass::bounded_vol;
  m.id = std::move(id);
  m.drift_rate = r0;
  m.vol = std::move(vol);
  m.vol_lo = lo;
  m.vol_hi = hi;
  return m;
}

inline ModelSpec make_tanh_vol(double r0, double m0 = 0.0, double s0sq = 1.0) {
  auto m = make_bounded_vol(
      r0, [](double z) { return 1.0 + 0.5 * std::tanh(z); }, [](double x) { return x; }, 0.5, 1.5,
      m0, s0sq, "tanh_vol");
  m.kernel_diffusion_kind = KernelKind::identity;
  return m;
}

inline ModelSpec make_const_vol(double r0, double sigma_const, double m0 = 0.0, double s0sq = 1.0) {
  if (!(sigma_const > 0.0)) throw std::invalid_argument("constant volatility must be positive");
  auto m = make_bounded_vol(
      r0, [sigma_const](double) { return sigma_const; }, [](double x) { return x; }, sigma_const,
      sigma_const, m0, s0sq, "gaussian_const_vol");
  m.kernel_diffusion_kind = KernelKind::identity;
  return m;
}

// (1/N) sum_i kernel(x_i) with compensated accumulation; N up to 1e5 over 1e4
// steps makes naive summation drift measurable.
template <class F>
double empirical_statistic(F&& kernel, std::span<const double> positions) {
  if (positions.empty()) throw std::invalid_argument("empty ensemble");
  double acc = 0.0, comp = 0.0;
  for (const double x : positions) {
    const double y = kernel(x);
    const double t = acc + y;
    comp += std::abs(acc) >= std::abs(y) ? (acc - t) + y : (y - t) + acc;
    acc = t;
  }
  return (acc + comp) / double(positions.size());
}

struct CoefficientValues {
  double drift;
  double diffusion;
};

inline CoefficientValues evaluate_coefficients(const ModelSpec& model, double x,
                                               std::span<const double> positions, double t) {
  const double z_r = empirical_statistic(model.kernel_drift, positions);
  const double z_s = empirical_statistic(model.kernel_diffusion, positions);
  const double dr = model.drift_at(x, z_r);
  const double df = model.diffusion_at(x, z_s, t);
  if (!std::isfinite(dr)) throw blow_up_error(t, dr);
  if (!std::isfinite(df)) throw blow_up_error(t, df);
  return {dr, df};
}

}  // namespace meanfield

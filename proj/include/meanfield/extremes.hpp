#pragma once

// Gumbel limit machinery: normalizing sequences for Gaussian maxima, the
// standard Gumbel CDF, and the probability integral transform. The stochastic
// variant corrects the constants with the realized empirical time change.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "limitlaw.hpp"
#include "models.hpp"

namespace meanfield {

enum class NormalizerSource { deterministic, stochastic };

struct NormalizingConstants {
  double a;  // scale, > 0
  double b;  // location
  std::uint64_t n;
  NormalizerSource source;
};

inline double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

// Numeric inverse by bisection; the CDF is strictly increasing and saturates
// in double precision near |x| = 40.
inline double gumbel_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("probability must be strictly inside (0, 1)");
  double lo = -40.0, hi = 40.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (gumbel_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// a = stdev / sqrt(L), b = stdev sqrt(L) + mean with
// L = 2 ln N - ln ln N - ln 4pi; L is positive only from N = 5 upward.
inline NormalizingConstants normalizers(std::uint64_t n, double mean, double stdev) {
  if (!(stdev > 0.0)) throw std::invalid_argument("stdev must be positive");
  if (n < 5) throw std::domain_error("normalizer undefined: radicand nonpositive");
  const double ln_n = std::log(double(n));
  const double radicand = 2.0 * ln_n - std::log(ln_n) - std::log(4.0 * std::acos(-1.0));
  const double root = std::sqrt(radicand);
  return {stdev / root, stdev * root + mean, n, NormalizerSource::deterministic};
}

// Normalizers evaluated at the random time tau^{-1}(tau_N): the location uses
// the limit mean there, while the variance shortcut sigma_0^2 + tau_N avoids
// re-reading the law.
inline NormalizingConstants stochastic_normalizers(double tau_n_value, const LimitLawPath& law,
                                                   const ModelSpec& model, std::uint64_t n) {
  if (model.cls != ModelClass::bounded_vol)
    throw std::invalid_argument("stochastic normalizers require the bounded-volatility class");
  const double s = tau_inverse(law, tau_n_value);
  const double stdev = std::sqrt(model.initial_variance + tau_n_value);
  auto nc = normalizers(n, mean_at(law, s), stdev);
  nc.source = NormalizerSource::stochastic;
  return nc;
}

struct PitResult {
  double m;  // normalized maximum
  double u;  // its PIT under the standard Gumbel law
};

inline PitResult normalize_and_pit(std::span<const double> positions,
                                   const NormalizingConstants& nc) {
  if (positions.empty()) throw std::invalid_argument("empty ensemble");
  const double mx = *std::max_element(positions.begin(), positions.end());
  const double m = (mx - nc.b) / nc.a;
  return {m, gumbel_cdf(m)};
}

}  // namespace meanfield

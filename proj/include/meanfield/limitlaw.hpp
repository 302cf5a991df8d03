#pragma once

// The large-population limit of a model is a Gaussian law N(m_t, sigma_t^2)
// together with a deterministic time change tau. For the bounded-volatility
// class, m_t = m0 + r0 t and the variance solves
//   d sigma_t^2 / dt = sigma(E[g_s(X_t)])^2,
// advanced by forward Euler with Gauss-Hermite expectations; tau is advanced
// with exactly the same increments, so sigma_t^2 = sigma_0^2 + tau(t) holds to
// the last bit on the grid. The bank models use their closed forms, with tau
// defined through the same variance identity.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "models.hpp"
#include "quadrature.hpp"

namespace meanfield {

struct LimitLawPath {
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> tau;

  double horizon() const { return t.back(); }
  double initial_variance() const { return var.front(); }
};

namespace detail {

inline std::size_t upper_index(const std::vector<double>& grid, double x) {
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  if (it == grid.begin()) return 1;
  if (it == grid.end()) return grid.size() - 1;
  return std::size_t(it - grid.begin());
}

inline double interp(const std::vector<double>& grid, const std::vector<double>& val, double x) {
  if (grid.size() == 1) return val.front();
  const std::size_t hi = upper_index(grid, x);
  const double t0 = grid[hi - 1], t1 = grid[hi];
  const double w = (x - t0) / (t1 - t0);
  // exact node reads return the stored value, which also keeps lookups finite
  // when a blown-up curve holds infinities on both cell ends
  if (w <= 0.0) return val[hi - 1];
  if (w >= 1.0) return val[hi];
  return val[hi - 1] + w * (val[hi] - val[hi - 1]);
}

inline void check_range(double x, double lo, double hi, double slack) {
  if (!(x >= lo - slack && x <= hi + slack)) throw std::out_of_range("time out of range");
}

}  // namespace detail

inline LimitLawPath solve_limit_law(const ModelSpec& model, double T, double h,
                                    int quad_order = 64) {
  if (model.cls == ModelClass::general) throw std::domain_error("no limit law available");
  if (!(T >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
  if (!(h > 0.0)) throw std::invalid_argument("ode step must be positive");

  const std::size_t steps = T > 0.0 ? std::size_t(std::max(1.0, std::round(T / h))) : 0;
  const double dt = steps > 0 ? T / double(steps) : 0.0;

  LimitLawPath law;
  law.t.reserve(steps + 1);
  law.mean.reserve(steps + 1);
  law.var.reserve(steps + 1);
  law.tau.reserve(steps + 1);

  const double s0sq = model.initial_variance;
  detail::check_initial_variance(s0sq);

  if (model.cls == ModelClass::bank || model.cls == ModelClass::hybrid_bank) {
    const double rate = model.cls == ModelClass::bank ? 2.0 * model.kappa + 1.0 : 3.0;
    for (std::size_t k = 0; k <= steps; ++k) {
      const double tk = dt * double(k);
      const double v = s0sq * std::exp(rate * tk);
      law.t.push_back(tk);
      law.mean.push_back(model.initial_mean);
      law.var.push_back(v);
      law.tau.push_back(v - s0sq);
    }
    return law;
  }

  // quadrature self-check on the initial law before trusting the order
  const int check_order = quad_order == 64 ? 128 : 2 * quad_order;
  const double e_a = expect_gaussian(model.kernel_diffusion, model.initial_mean, s0sq, quad_order);
  const double e_b = expect_gaussian(model.kernel_diffusion, model.initial_mean, s0sq, check_order);
  if (std::abs(e_a - e_b) > 1e-10 * (1.0 + std::abs(e_a)))
    throw std::runtime_error("quadrature self-check failed on the initial law");

  double v = s0sq, tau = 0.0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double tk = dt * double(k);
    law.t.push_back(tk);
    law.mean.push_back(model.initial_mean + model.drift_rate * tk);
    law.var.push_back(v);
    law.tau.push_back(tau);
    if (k == steps) break;
    const double e = expect_gaussian(model.kernel_diffusion, law.mean.back(), v, quad_order);
    const double s = model.vol(e);
    const double incr = s * s * dt;
    v += incr;
    tau += incr;
  }
  return law;
}

inline double mean_at(const LimitLawPath& law, double t) {
  detail::check_range(t, 0.0, law.horizon(), 0.0);
  return detail::interp(law.t, law.mean, t);
}

inline double var_at(const LimitLawPath& law, double t) {
  detail::check_range(t, 0.0, law.horizon(), 0.0);
  return detail::interp(law.t, law.var, t);
}

inline double tau_of(const LimitLawPath& law, double t) {
  detail::check_range(t, 0.0, law.horizon(), 0.0);
  return detail::interp(law.t, law.tau, t);
}

// Monotone bisection on the interpolated tau grid.
inline double tau_inverse(const LimitLawPath& law, double u) {
  detail::check_range(u, 0.0, law.tau.back(), 0.0);
  double lo = 0.0, hi = law.horizon();
  const double tol = 1e-12 * (1.0 + law.horizon());
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (tau_of(law, mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct YLaw {
  double mean;
  double variance;
};

// Law of the time-changed system at clock time t in [0, tau(T)]: variance is
// sigma_0^2 + t exactly; the mean integrates r0 / sigma^2 along the changed
// clock, using that Y at clock s has the law of X at tau^{-1}(s). The
// integral walks the solved grid in the tau variable with the same
// lower-bound evaluation the solver used, so the change of variables
// telescopes and the mean agrees with the X-law at tau^{-1}(t) to rounding,
// not merely to the solver's own O(h).
inline YLaw y_law(const LimitLawPath& law, const ModelSpec& model, double t, int quad_order = 64) {
  if (model.cls != ModelClass::bounded_vol)
    throw std::domain_error("no limit law available");
  detail::check_range(t, 0.0, law.tau.back(), 0.0);
  double acc = 0.0;  // integral of sigma^{-2} d(clock)
  for (std::size_t k = 0; k + 1 < law.t.size() && law.tau[k] < t; ++k) {
    const double seg = std::min(t, law.tau[k + 1]) - law.tau[k];
    if (seg <= 0.0) continue;
    const double e = expect_gaussian(model.kernel_diffusion, law.mean[k], law.var[k], quad_order);
    const double sig = model.vol(e);
    acc += seg / (sig * sig);
  }
  return {model.initial_mean + model.drift_rate * acc, model.initial_variance + t};
}

}  // namespace meanfield

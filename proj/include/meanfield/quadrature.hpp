#pragma once

// Gauss-Hermite quadrature (physicists' weight exp(-x^2)) for expectations
// under Gaussian laws: E[f(N(m, v))] = sum_i w_i f(m + sqrt(2v) x_i) / sqrt(pi).

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace meanfield {

struct GaussHermite {
  std::vector<double> node;
  std::vector<double> weight;

  // Newton iteration on the orthonormal Hermite recurrence, roots found in
  // descending order from spectral initial guesses.
  explicit GaussHermite(int order) : node(order), weight(order) {
    if (order < 1) throw std::invalid_argument("quadrature order must be at least 1");
    const int n = order;
    const double pim4 = 0.7511255444649425;  // pi^(-1/4)
    double z = 0.0, pp = 0.0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      if (i == 0)
        z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
      else if (i == 1)
        z -= 1.14 * std::pow(double(n), 0.426) / z;
      else if (i == 2)
        z = 1.86 * z - 0.86 * node[0];
      else if (i == 3)
        z = 1.91 * z - 0.91 * node[1];
      else
        z = 2.0 * z - node[i - 2];
      int its = 0;
      for (;; ++its) {
        if (its > 100) throw std::runtime_error("quadrature root search failed to converge");
        double p1 = pim4, p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(double(j - 1) / j) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) <= 1e-14 * (1.0 + std::abs(z))) break;
      }
      node[i] = z;
      node[n - 1 - i] = -z;
      weight[i] = 2.0 / (pp * pp);
      weight[n - 1 - i] = weight[i];
    }
  }
};

inline const GaussHermite& gauss_hermite_table(int order) {
  static const GaussHermite t64(64);
  static const GaussHermite t128(128);
  if (order == 64) return t64;
  if (order == 128) return t128;
  thread_local std::map<int, GaussHermite> cache;
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, GaussHermite(order)).first;
  return it->second;
}

template <class F>
double expect_gaussian(F&& f, double mean, double variance, int order = 64) {
  if (variance < 0.0) throw std::invalid_argument("variance must be nonnegative");
  const auto& gh = gauss_hermite_table(order);
  const double scale = std::sqrt(2.0 * variance);
  double acc = 0.0, comp = 0.0;
  for (int i = 0; i < order; ++i) {
    const double y = gh.weight[i] * f(mean + scale * gh.node[i]);
    const double t = acc + y;
    comp += std::abs(acc) >= std::abs(y) ? (acc - t) + y : (y - t) + acc;
    acc = t;
  }
  return (acc + comp) / 1.7724538509055160273;  // sqrt(pi)
}

}  // namespace meanfield

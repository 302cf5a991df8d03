#pragma once

// Counter-based random streams for reproducible parallel Monte Carlo.
// Philox4x32-10 blocks feed a 128-layer ziggurat for standard normals.
// Each replication owns one stream keyed by (base seed, ensemble size,
// replication index), so results are independent of the worker count.

#include <array>
#include <cmath>
#include <cstdint>

namespace meanfield {

// Pinned in configs and reports so golden outputs stay stable.
inline constexpr const char* generator_id = "philox4x32:ziggurat128";

// splitmix64 finalizer, used only for mixing seeds into stream keys.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_replication_seed(std::uint64_t base_seed, std::uint64_t ensemble_size,
                                             std::uint64_t replication) {
  std::uint64_t u = mix64(base_seed);
  u = mix64(u ^ (ensemble_size * 0x9E3779B97F4A7C15ull));
  u = mix64(u ^ (replication * 0xC2B2AE3D27D4EB4Full));
  return u;
}

struct Philox4x32 {
  std::array<std::uint32_t, 2> key{};
  std::array<std::uint32_t, 4> ctr{};

  // One keyed block, 10 rounds. Pure, so test vectors can hit it directly.
  static std::array<std::uint32_t, 4> encrypt(std::array<std::uint32_t, 4> c,
                                              std::array<std::uint32_t, 2> k) {
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c[0];
      const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c[2];
      c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1),
           std::uint32_t(p0 >> 32) ^ c[3] ^ k[1], std::uint32_t(p0)};
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    return c;
  }

  std::array<std::uint32_t, 4> operator()() {
    const auto out = encrypt(ctr, key);
    if (++ctr[0] == 0 && ++ctr[1] == 0 && ++ctr[2] == 0) ++ctr[3];
    return out;
  }
};

namespace detail {

// Normal ziggurat tables, 128 layers. Layer 0 is the base strip (virtual
// width area/f(r)) plus the tail beyond r; edges increase with the layer
// index up to edge[127] = r. fval[0] = 1 is the density at zero, the upper
// boundary of the innermost wedge.
struct ZigTables {
  static constexpr double tail_start = 3.442619855899;
  double edge[128];
  double ratio[128];
  double fval[128];

  ZigTables() {
    constexpr double area = 9.91256303526217e-3;
    double f = std::exp(-0.5 * tail_start * tail_start);
    edge[0] = area / f;
    edge[127] = tail_start;
    fval[0] = 1.0;
    fval[127] = f;
    double d = tail_start, prev = tail_start;
    for (int i = 126; i >= 1; --i) {
      d = std::sqrt(-2.0 * std::log(area / d + std::exp(-0.5 * d * d)));
      ratio[i + 1] = d / prev;
      prev = d;
      edge[i] = d;
      fval[i] = std::exp(-0.5 * d * d);
    }
    ratio[1] = 0.0;
    ratio[0] = tail_start / edge[0];
  }
};

inline const ZigTables& zig_tables() {
  static const ZigTables t;
  return t;
}

}  // namespace detail

// A sequential stream of uniforms and standard normals. Not thread-safe;
// give each worker its own stream.
struct NormalStream {
  Philox4x32 phx;
  std::uint64_t pending = 0;
  bool has_pending = false;

  std::uint64_t next_u64() {
    if (has_pending) {
      has_pending = false;
      return pending;
    }
    const auto w = phx();
    pending = (std::uint64_t(w[2]) << 32) | w[3];
    has_pending = true;
    return (std::uint64_t(w[0]) << 32) | w[1];
  }

  // uniform on [0, 1) with 53 random bits
  double next_unit() { return double(next_u64() >> 11) * 0x1p-53; }

  double normal() {
    const auto& zt = detail::zig_tables();
    for (;;) {
      const std::uint64_t w = next_u64();
      const int i = int(w & 127u);
      const double u = double(w >> 11) * 0x1p-53;
      const double sign = (w & 128u) ? -1.0 : 1.0;
      if (u < zt.ratio[i]) [[likely]]
        return sign * u * zt.edge[i];
      if (i == 0) {
        // exact tail beyond r
        double x, y;
        do {
          x = -std::log(1.0 - next_unit()) / detail::ZigTables::tail_start;
          y = -std::log(1.0 - next_unit());
        } while (y + y < x * x);
        return sign * (detail::ZigTables::tail_start + x);
      }
      const double x = u * zt.edge[i];
      if (zt.fval[i] + next_unit() * (zt.fval[i - 1] - zt.fval[i]) < std::exp(-0.5 * x * x))
        return sign * x;
    }
  }

  double gaussian(double mean, double stdev) { return mean + stdev * normal(); }
};

inline NormalStream make_stream(std::uint64_t seed, std::uint64_t ensemble_size,
                                std::uint64_t replication) {
  const std::uint64_t u = derive_replication_seed(seed, ensemble_size, replication);
  const std::uint64_t key64 = mix64(u);
  const std::uint64_t pos64 = mix64(u ^ 0xA5A5A5A5A5A5A5A5ull);
  NormalStream s;
  s.phx.key = {std::uint32_t(key64), std::uint32_t(key64 >> 32)};
  s.phx.ctr = {0u, 0u, std::uint32_t(pos64), std::uint32_t(pos64 >> 32)};
  return s;
}

}  // namespace meanfield

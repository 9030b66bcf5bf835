#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace slq {

/** Independent substream addressed by (seed, tag, index). Tags keep the
 *  expert path, behavior paths, frequency draws and cost paths on disjoint
 *  streams even when they share the user seed. */
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

namespace stream_tag {
inline constexpr std::uint64_t path = 0x70617468;  // behavior paths
inline constexpr std::uint64_t freq = 0x66726571;  // exploration frequencies
inline constexpr std::uint64_t xprt = 0x78707274;  // expert demo path
inline constexpr std::uint64_t cost = 0x636f7374;  // cost Monte Carlo
}  // namespace stream_tag

/** U[0, 1) from the high 53 bits. */
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/** N(0, 1) via polar Box-Muller, spelled out so the draw sequence is pinned
 *  by mt19937_64 alone (distribution objects vary across standard libraries). */
class GaussianStream {
 public:
  explicit GaussianStream(std::mt19937_64 rng) : rng_(rng) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double v1, v2, s;
    do {
      v1 = 2.0 * uniform01(rng_) - 1.0;
      v2 = 2.0 * uniform01(rng_) - 1.0;
      s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v2 * f;
    have_spare_ = true;
    return v1 * f;
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace slq

#include "misa/common/rng.hpp"

namespace misa {

Rng make_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                    static_cast<std::uint32_t>(purpose), 0x6d697361u};
  return Rng(seq);
}

void fill_normal(Rng& rng, std::span<double> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& x : out) x = normal(rng);
}

void fill_uniform(Rng& rng, std::span<double> out, double lo, double hi) {
  std::uniform_real_distribution<double> uniform(lo, hi);
  for (double& x : out) x = uniform(rng);
}

double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace misa

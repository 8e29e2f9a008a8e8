#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace misa {

using Rng = std::mt19937_64;

// Independent stream for (seed, step, purpose). Training draws every random
// quantity from a stream keyed this way, so a run can be resumed from any
// step and a component can be reproduced in isolation.
Rng make_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t purpose);

void fill_normal(Rng& rng, std::span<double> out);
void fill_uniform(Rng& rng, std::span<double> out, double lo, double hi);
double uniform01(Rng& rng);

}  // namespace misa

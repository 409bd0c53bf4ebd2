// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace losa {

// xoshiro256++ seeded via splitmix64. The exact stream is part of the trace
// generator contract (see README "Generator stream"), so the choices here are
// frozen: uniforms take the top 53 bits, normals come from Box-Muller with
// the second value of each pair carried over to the next call.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    double next_uniform();           // [0, 1)
    double next_normal();            // standard normal
    uint64_t next_below(uint64_t n); // uniform in [0, n), n >= 1

private:
    uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace losa

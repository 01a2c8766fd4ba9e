#pragma once

#include <cstdint>
#include <random>

namespace semrob {

// Deterministic random stream. All library sampling goes through this class so
// results are reproducible bit-for-bit for a given seed: the mt19937_64 output
// sequence is fixed by the standard, and all distributions are derived from it
// with explicit arithmetic (no implementation-defined std distributions).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    // Independent substream for (base_seed, stream_id); used to give every
    // identity in a campaign its own stream so results do not depend on
    // execution order or worker count.
    static RandomStream derive(std::uint64_t base_seed, std::uint64_t stream_id);

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1); never returns an endpoint.
    double uniform_open01();

    // Standard normal deviate via inverse-CDF sampling.
    double normal();

    // Uniform integer in [0, n); n must be positive.
    std::uint64_t uniform_below(std::uint64_t n);

private:
    std::mt19937_64 gen_;
};

namespace detail {
std::uint64_t splitmix64(std::uint64_t z);
}

} // namespace semrob

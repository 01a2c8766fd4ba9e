#include "semrob/rng.hpp"

#include "semrob/error.hpp"
#include "semrob/stats.hpp"

namespace semrob {

namespace detail {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

RandomStream RandomStream::derive(std::uint64_t base_seed, std::uint64_t stream_id) {
    std::uint64_t h = detail::splitmix64(base_seed);
    h = detail::splitmix64(h ^ (0x9e3779b97f4a7c15ULL + stream_id));
    return RandomStream(h);
}

double RandomStream::uniform_open01() {
    for (;;) {
        const std::uint64_t bits = next_u64() >> 11;
        if (bits != 0) return static_cast<double>(bits) * 0x1.0p-53;
    }
}

double RandomStream::normal() {
    return std_normal_quantile(uniform_open01());
}

std::uint64_t RandomStream::uniform_below(std::uint64_t n) {
    if (n == 0) throw ConfigError("uniform_below requires n > 0");
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    for (;;) {
        const std::uint64_t v = next_u64();
        if (v < limit) return v % n;
    }
}

} // namespace semrob

#include "fedbench/rng.hpp"

#include "fedbench/errors.hpp"

#include <cmath>

namespace fedbench {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = basis;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    return mix64(master ^ fnv1a64(tag));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t a) {
    return mix64(derive_seed(master, tag) ^ mix64(a));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t a,
                          std::uint64_t b) {
    return mix64(derive_seed(master, tag, a) ^ mix64(b ^ 0x5851f42d4c957f2dULL));
}

double Rng::normal() {
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) {
        throw ComputeError("uniform_index: n must be positive");
    }
    // Rejection sampling against the largest multiple of n below 2^64.
    std::uint64_t bound = n * (UINT64_MAX / n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= bound);
    return static_cast<std::size_t>(x % n);
}

}  // namespace fedbench

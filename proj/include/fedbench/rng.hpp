#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedbench {

// 64-bit FNV-1a, used for seed-stream tags and artifact content hashes.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis = 1469598103934665603ULL);
std::uint64_t fnv1a64(std::string_view s);

// splitmix64 finalizer; decorrelates nearby integer keys.
std::uint64_t mix64(std::uint64_t x);

// Derive an independent stream seed from a master seed and a tag (plus
// optional integer keys such as client id and round). Workers keyed this way
// produce the same stream no matter what order they run in.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t a);
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t a,
                          std::uint64_t b);

// Deterministic generator. mt19937_64 has a standard-specified output stream;
// the distributions are implemented here because the <random> distribution
// objects are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (no cached spare).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Uniform in {0, ..., n-1}, unbiased via rejection.
    std::size_t uniform_index(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace fedbench

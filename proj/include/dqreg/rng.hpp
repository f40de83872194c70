#pragma once

#include <cstdint>
#include <random>

#include "dqreg/math.hpp"

namespace dqreg {

// splitmix64 finalizer; used to derive independent child seeds
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream tags keep seed derivations for distinct pipeline stages disjoint.
enum class Stream : std::uint64_t {
    InitialValues = 1,
    Intermediate = 2,
    Final = 3,
    Replication = 4,
    Bootstrap = 5,
    Dataset = 6,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t i = 0, std::uint64_t j = 0) {
    return mix64(master ^ mix64(static_cast<std::uint64_t>(s) ^ mix64(i ^ mix64(j))));
}

// Deterministic uniform/normal draws. The engine is the standard-specified
// mt19937_64; variates are produced without std distributions so streams are
// reproducible bit-for-bit across implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // strictly inside (0,1)
    double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return norm_quantile(uniform()); }

    std::uint64_t next_u64() { return eng_(); }

    // integer in [0, n)
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

private:
    std::mt19937_64 eng_;
};

}  // namespace dqreg

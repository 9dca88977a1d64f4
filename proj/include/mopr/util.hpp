#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mopr {

// FNV-1a, used for content hashes of skeletons, parameter stores and caches.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), seed);
}

inline std::uint64_t fnv1a64(const Eigen::MatrixXd& m,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
    return fnv1a64(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), seed);
}

std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& s);

// splitmix64, used to derive independent RNG streams from (seed, index...).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
    return splitmix64(splitmix64(splitmix64(seed ^ a) + b) + c);
}

// Deterministic RNG with hand-rolled distributions. std::normal_distribution
// is implementation-defined, which would break bit-reproducibility of seeds
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x6d6f7072ull)) {}

    std::uint64_t next_u64() {
        state_ = splitmix64(state_ + 0x9e3779b97f4a7c15ull);
        return state_;
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; the spare value is cached.
    double gaussian();

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

    Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);
    Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi);

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mopr

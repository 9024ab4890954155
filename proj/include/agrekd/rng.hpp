#pragma once

#include <cstdint>
#include <vector>

namespace agrekd {

/// Deterministic counter-based random number generator (splitmix64).
///
/// The generator state is a single 64-bit counter advanced by the golden-ratio
/// increment 0x9E3779B97F4A7C15; each output is a fixed avalanche mix of the
/// counter. Identical seeds therefore produce identical draw streams on every
/// platform and build. Higher-level draws are derived from the raw stream with
/// fixed formulas:
///   uniform():      53-bit mantissa of next_u64(), value in [0, 1)
///   normal():       Box-Muller on two uniforms, second value cached
///   uniform_int(n): next_u64() % n (n is tiny everywhere this is used)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double normal();

    std::uint64_t uniform_int(std::uint64_t n) {
        return next_u64() % n;
    }

    /// Fisher-Yates shuffle driven by uniform_int.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derives an independent stream seed from a base seed and a stream tag.
    /// Used to give teachers, students and data splits disjoint streams while
    /// keeping a single experiment seed in the config.
    static std::uint64_t derive(std::uint64_t base, std::uint64_t tag) {
        std::uint64_t z = base ^ (0x9E3779B97F4A7C15ULL * (tag + 1));
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace agrekd

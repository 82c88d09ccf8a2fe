#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace medcap {

/// Deterministic RNG wrapper. std::mt19937_64 output is fully specified by the
/// standard; std::shuffle and the distribution classes are not, so bounded
/// draws and shuffles are done by hand to keep results identical across
/// standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    /// Uniform draw in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        std::uint64_t v = eng_();
        while (v >= limit) v = eng_();
        return v % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        // Fisher-Yates, high index down
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace medcap

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace listen {

/// Seeded random source with fixed bit-to-value mappings, so runs are
/// reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, bound).
    std::size_t index(std::size_t bound) {
        if (bound == 0) {
            throw std::invalid_argument("Rng::index: bound must be positive");
        }
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return static_cast<std::size_t>(x % bound);
    }

    /// k distinct indices drawn uniformly from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        if (k > n) {
            throw std::invalid_argument("Rng::sample_without_replacement: k > n");
        }
        // Partial Fisher-Yates over an index pool.
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) {
            pool[i] = i;
        }
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + index(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

    std::uint64_t next_raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace listen

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace magnav {

/// Small deterministic random generator (SplitMix64 core).
///
/// Used everywhere a reproducible stream is needed. Independent sub-streams
/// are derived from (seed, index) pairs via derive(), so parallel workers
/// produce identical results regardless of scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed + kGolden) {}

    /// Stateless seed derivation: a well-mixed function of (seed, stream id).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        return scramble(seed + kGolden * (stream + 1));
    }
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        return derive(derive(seed, a), b);
    }

    std::uint64_t next_u64() {
        state_ += kGolden;
        return scramble(state_);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; platform-independent given the seed.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t scramble(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace magnav

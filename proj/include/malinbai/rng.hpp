#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace malinbai {

namespace detail {

// SplitMix64 finalizer. Used to derive independent stream seeds from a
// (master_seed, path) pair; not used as the sampling engine itself.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// A reproducible random substream identified by (master_seed, path).
// Identical pairs yield identical sample sequences; distinct paths give
// statistically independent streams. The path components used by the
// runners are (block, agent-rank-within-block, round); harnesses prefix
// their own components (grid point, trial).
class RngStream {
public:
    explicit RngStream(std::uint64_t master_seed)
        : master_(master_seed), state_(detail::splitmix64(master_seed)) {}

    // Derive the substream obtained by appending one path component.
    RngStream child(std::uint64_t component) const {
        RngStream out(*this);
        out.path_.push_back(component);
        out.state_ = detail::splitmix64(out.state_ ^ detail::splitmix64(component + 0x632BE59BD9B4E019ULL));
        return out;
    }

    std::uint64_t master_seed() const { return master_; }
    const std::vector<std::uint64_t>& path() const { return path_; }

    // Materialized sampler. Draws are fully specified (mt19937_64 outputs
    // mapped explicitly), so sequences are identical across platforms and
    // independent of standard-library distribution implementations.
    class Sampler {
    public:
        explicit Sampler(std::uint64_t seed) : engine_(seed) {}

        // Uniform on (0, 1].
        double uniform01() {
            return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
        }

        // Standard normal via Box-Muller on explicit uniforms.
        double normal() {
            const double u1 = uniform01();
            const double u2 = uniform01();
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
        }

        // Uniform integer in [0, bound) by rejection, bound >= 1.
        std::uint64_t uniform_int(std::uint64_t bound) {
            const std::uint64_t rem = (UINT64_MAX % bound + 1) % bound;  // 2^64 mod bound
            std::uint64_t x = engine_();
            while (rem != 0 && x >= UINT64_MAX - rem + 1) x = engine_();
            return x % bound;
        }

    private:
        std::mt19937_64 engine_;
    };

    Sampler sampler() const { return Sampler(state_); }

private:
    std::uint64_t master_;
    std::vector<std::uint64_t> path_;
    std::uint64_t state_;
};

}  // namespace malinbai

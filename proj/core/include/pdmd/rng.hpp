#pragma once

#include <cmath>
#include <cstdint>

namespace pdmd {

/// SplitMix64 (Steele, Lea, Flood 2014; public domain reference constants).
/// Chosen because the whole algorithm fits in a dozen lines, so seeds
/// reproduce bit-exactly on any platform, independent of the C++ standard
/// library. State advances by the golden-ratio increment; output is the
/// finalizer mix of the state.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;

    /// Finalizer: bijective 64-bit mix (variant 13 of Stafford's mixers).
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return mix(state_ += golden); }

    /// Uniform double in [0,1) from the top 53 bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (fixed transform so streams are
    /// reproducible across platforms). Consumes two uniforms per pair.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] so log() is finite.
        const double u1 = 1.0 - next_unit();
        const double u2 = next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Child seed for subset `index` of an N-way partition. Two rounds of the
/// SplitMix64 finalizer keyed by N and index; documented so concurrent
/// fits on disjoint subsets draw from provably disjoint streams and whole
/// runs replay bit-exactly.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t n_parts, std::uint64_t index) {
    std::uint64_t h = SplitMix64::mix(base ^ (SplitMix64::golden * (n_parts + 1)));
    h = SplitMix64::mix(h ^ (SplitMix64::golden * (index + 1)));
    return h;
}

} // namespace pdmd

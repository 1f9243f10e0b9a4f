#pragma once

#include <cmath>
#include <cstdint>

namespace ppde {

/// Counter-based random stream. Every draw is a pure function of (key, counter),
/// and child streams are keyed by (key, index), so ensembles and nested
/// sub-simulations produce identical numbers regardless of worker count or
/// evaluation order across paths.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x8f1f672f86b2b27dULL)) {}

    /// Independent stream derived from this one; stable under copies.
    RngStream child(std::uint64_t index) const {
        RngStream s(*this);
        s.key_ = mix(key_ ^ mix(index + 0x9e3779b97f4a7c15ULL));
        s.counter_ = 0;
        s.have_spare_ = false;
        return s;
    }

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open() { return 1.0 - uniform(); }

    /// Standard normal via Box-Muller; the spare is cached within the stream.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ppde

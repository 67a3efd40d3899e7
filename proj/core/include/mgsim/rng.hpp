#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mgsim {

// splitmix64; used to derive independent substream seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded random stream with explicit bit-to-double mappings. The standard
// <random> distributions are implementation-defined, which would break the
// byte-identical-trace contract across toolchains, so the mappings live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_bits() { return engine_(); }

    // uniform on [0, 1), 53-bit resolution
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + uniform01() * (hi - lo);
    }

    // standard normal via Box-Muller (polar form rejected: data-dependent
    // draw counts would make streams harder to reason about)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        // u1 == 0 would take log(0); smallest representable draw instead
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Zero-mean Gaussian measurement noise; sigma == 0 never touches the stream,
// so enabling noise is the only thing that changes draw sequences.
class GaussianNoise {
public:
    GaussianNoise(double sigma, std::uint64_t seed) : sigma_(sigma), rng_(seed) {}

    double sample() { return sigma_ == 0.0 ? 0.0 : sigma_ * rng_.normal(); }
    double sigma() const { return sigma_; }

private:
    double sigma_;
    Rng rng_;
};

} // namespace mgsim

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace l96 {

/// Seeded Gaussian/uniform source with a fully pinned output sequence.
///
/// std::normal_distribution is implementation-defined, so two builds of this
/// project against different standard libraries would disagree bit-for-bit on
/// "the same" seeded trajectory. This source pins the whole recipe instead:
/// mt19937_64 seeded directly with the given seed, uniforms via the top 53
/// bits, normals via the basic Box-Muller transform (cached spare).
/// algorithm_name() is recorded in trajectory metadata.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

    static std::string algorithm_name() { return "mt19937_64+box-muller"; }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal draw.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Box-Muller; u1 is kept away from 0 so log() stays finite.
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Fills `out` with standard normals, ordered by index.
    void fill_normal(std::span<double> out) {
        for (double& v : out) v = normal();
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace l96

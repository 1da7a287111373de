#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace bdris {

/// Deterministic random source. Wraps mt19937_64 and generates normals with an
/// explicit Box-Muller transform so sequences do not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        // 53 random mantissa bits
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; caches the spare value.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t raw() { return engine_(); }

    /// Derive an independent stream for a named purpose. splitmix64 over
    /// (seed, tag) keeps streams decoupled from draw order.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Serialize full engine + spare state (exact resume support).
    std::string save_state() const {
        std::ostringstream os;
        os << engine_ << " " << (have_spare_ ? 1 : 0) << " ";
        os.precision(17);
        os << spare_;
        return os.str();
    }

    void restore_state(const std::string& s) {
        std::istringstream is(s);
        int flag = 0;
        is >> engine_ >> flag >> spare_;
        have_spare_ = (flag != 0);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bdris

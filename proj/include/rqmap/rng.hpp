#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace rqmap {

// Deterministic RNG used everywhere instead of std:: distributions, whose
// output is implementation-defined. mt19937_64 core with hand-rolled
// uniform/normal so streams are bit-reproducible for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        state_ = seed ? seed : 0x9e3779b97f4a7c15ull;
        // warm up splitmix, then expand into the mt-like state
        for (int i = 0; i < 4; ++i) next_raw();
    }

    std::uint64_t next_raw() {
        // splitmix64: tiny, fast, passes BigCrush at this usage scale
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_raw() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) { return n ? next_raw() % n : 0; }

    // standard normal via Box-Muller (fixed evaluation order)
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    // truncated normal: resample outside +-2 sigma
    double trunc_normal(double std_dev) {
        double x = normal();
        while (x < -2.0 || x > 2.0) x = normal();
        return x * std_dev;
    }

    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// FNV-1a over a name; combined with a global seed this gives each component
// its own stream, so adding a component never perturbs the others.
inline std::uint64_t stream_seed(std::uint64_t global_seed, std::string_view component) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : component) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    // mix with the global seed through one splitmix round
    std::uint64_t z = global_seed ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace rqmap

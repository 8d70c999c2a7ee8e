#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>

namespace difo {

// Deterministic random stream. All randomness in the project flows through this
// class so that a (seed, stream id) pair fully determines every draw, independent
// of platform libm differences. Gaussian draws use hand-rolled Box-Muller rather
// than std::normal_distribution, whose algorithm is implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    // Derive an independent substream. Used to give each component (env, policy
    // init, noise draws, ...) its own stream so adding draws in one place never
    // shifts the sequence seen by another.
    RngStream substream(std::uint64_t id) const {
        RngStream r(splitmix(state_ ^ splitmix(id + 0x632be59bd9b4e019ull)));
        return r;
    }

    std::uint64_t next_u64() {
        // xorshift-multiply (splitmix64 step); passes the statistical bar for
        // this project's needs and is trivially portable.
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive integer range.
    int uniform_int(int lo, int hi) {
        if (lo > hi) throw std::invalid_argument("RngStream::uniform_int: lo > hi");
        std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    // Standard normal via Box-Muller. The spare value is cached, so draws come
    // in deterministic pairs.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();  // log(0) guard
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        return mix(x);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace difo

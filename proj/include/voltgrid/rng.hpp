#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace voltgrid {

// Deterministic random streams. Engines are std::mt19937_64 (output sequence
// pinned by the standard); the value transforms below are hand-written so
// results do not depend on the standard library's distribution
// implementations. Substreams are derived with splitmix64 so that e.g. each
// rollout in a batch owns an independent stream keyed by (master seed, index)
// and parallel and serial execution agree bit for bit.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ 0xA0761D6478BD642FULL) ^ splitmix64(stream * 0x9E3779B97F4A7C15ULL + index));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via polar Box-Muller (one value per call, spare cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace voltgrid

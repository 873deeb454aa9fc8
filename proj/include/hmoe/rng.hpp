#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

namespace hmoe {

/// Counter-based splittable RNG (splitmix64 core). Streams derived via
/// split() are independent and reproducible regardless of draw order in
/// sibling streams, so parallel replication stays deterministic.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derive an independent stream keyed by `stream`.
    Rng split(std::uint64_t stream) const {
        return Rng(mix(state_ ^ mix(stream + 0x9e3779b97f4a7c15ULL)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (no cached spare; keeps draws
    /// countable and replayable).
    double normal() {
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Index draw from an (unnormalized-tolerant) probability vector.
    int categorical(const Eigen::VectorXd& probs) {
        const double u = uniform() * probs.sum();
        double acc = 0.0;
        for (int i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return static_cast<int>(probs.size()) - 1;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace hmoe

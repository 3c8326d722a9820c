#pragma once

#include "rfrl/types.hpp"

#include <cstdint>
#include <random>

namespace rfrl {

/// Seeded generator with self-contained draw primitives so results do not
/// depend on standard-library distribution internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in {0,...,n-1}.
    int uniform_int(int n) {
        int v = static_cast<int>(uniform01() * n);
        return v >= n ? n - 1 : v;
    }

    /// Inverse-CDF draw from a probability row; the final index absorbs any
    /// rounding slack.
    int categorical(const Eigen::Ref<const Vec>& probs) {
        const double u = uniform01();
        double acc = 0.0;
        const Eigen::Index n = probs.size();
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            acc += probs(i);
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(n - 1);
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

}  // namespace rfrl

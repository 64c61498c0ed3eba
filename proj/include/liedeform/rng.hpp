#pragma once

#include <cstdint>
#include <random>

namespace liedeform {

// Thin wrapper over mt19937_64 so all entropy flows through one seeded
// object.  Distribution objects are created per call; they are stateless
// for our usage except normal_distribution, whose spare-value cache we
// deliberately avoid keeping across calls.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double gaussian() {
        std::normal_distribution<double> d(0.0, 1.0);
        return d(eng_);
    }

    // Uniform in [0, 1).
    double uniform() {
        std::uniform_real_distribution<double> d(0.0, 1.0);
        return d(eng_);
    }

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(eng_);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
        return d(eng_);
    }

    // Deterministically derived independent stream, used so that e.g. the
    // Monte Carlo samples of a net do not consume the caller's sequence.
    Rng fork(std::uint64_t stream) {
        return Rng(eng_() ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

}  // namespace liedeform

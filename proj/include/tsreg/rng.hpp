#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace tsreg {

// Derives an independent stream seed from (base, index). Used everywhere a
// run forks parallel or sequential sub-tasks, so results do not depend on
// scheduling order.
std::uint64_t split_seed(std::uint64_t base, std::uint64_t index);

// Deterministic generator. All randomness in the library flows through this
// class; distributions are mapped explicitly from the raw engine output so a
// seed pins the exact sample sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform on [0, 1)
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    // standard normal, Box-Muller
    double normal();

    // index k with probability probs[k] / sum(probs)
    int categorical(const Eigen::VectorXd& probs);

    // uniform integer in [lo, hi]
    int uniform_int(int lo, int hi);

private:
    std::mt19937_64 engine_;
};

}  // namespace tsreg

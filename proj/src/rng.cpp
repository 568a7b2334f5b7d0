#include "tsreg/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace tsreg {

std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 over a stream offset; distinct indexes give decorrelated seeds
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::normal() {
    // Box-Muller; u1 shifted into (0, 1]
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int Rng::categorical(const Eigen::VectorXd& probs) {
    const double total = probs.sum();
    if (!(total > 0.0)) throw std::invalid_argument("categorical: probabilities sum to zero");
    double u = uniform() * total;
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        u -= probs[k];
        if (u < 0.0) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size() - 1);
}

int Rng::uniform_int(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
}

}  // namespace tsreg

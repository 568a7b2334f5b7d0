#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tsreg/rng.hpp"
#include "tsreg/time_series.hpp"

namespace tsreg {

// Row i = (1, t_i, t_i^2, ..., t_i^degree).
Eigen::MatrixXd build_basis(const Eigen::VectorXd& t, int degree);

struct PolyFit {
    Eigen::VectorXd coeffs;
    double variance = 0.0;      // weighted RSS / sum of weights, floored
    double weighted_rss = 0.0;
    bool rank_deficient = false;
};

// Floor applied to every variance estimate: max(1e-10, 1e-8 * var(x)).
// Keeps log-variances finite on zero-residual data.
double variance_floor(const Eigen::VectorXd& x);

// Minimizes sum_i w_i (x_i - beta . r_i)^2 via a rank-revealing orthogonal
// decomposition; weights below 1e-12 are treated as exactly zero. Pass a
// precomputed floor to keep it consistent across calls that share a signal;
// floor < 0 derives it from x.
PolyFit weighted_polyfit(const Eigen::MatrixXd& basis, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& weights, double floor = -1.0);

// Log density of N(mean, variance) at x, computed in log space.
double log_gaussian(double x, double mean, double variance);

double log_sum_exp(const Eigen::ArrayXd& v);

// Stopping and initialization knobs shared by the iterative fitters.
struct FitOptions {
    int max_iter = 1500;
    double rel_tol = 1e-6;    // relative log-likelihood variation
    int n_random_starts = 5;  // random segmentations tried besides the uniform one
    std::uint64_t seed = 0;
};

// Per-component (beta, sigma2) start values obtained by fitting each segment
// of a segmentation of the series. Entry 0 is the uniform segmentation, the
// rest come from random cuts.
struct ComponentInit {
    Eigen::MatrixXd beta;    // K x (p+1)
    Eigen::VectorXd sigma2;  // K
};
std::vector<ComponentInit> segmentation_inits(const TimeSeries& series, int K, int p,
                                              int n_random, Rng& rng);

}  // namespace tsreg

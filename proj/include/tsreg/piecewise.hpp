#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tsreg/core.hpp"
#include "tsreg/time_series.hpp"

namespace tsreg {

// Piecewise polynomial regression with per-segment noise variances.
struct PiecewiseModel {
    int K = 1;
    int p = 0;
    std::vector<int> gamma;  // K+1 segment bounds, gamma[0] = 0, gamma[K] = n;
                             // segment k covers indexes [gamma[k], gamma[k+1])
    Eigen::MatrixXd beta;    // K x (p+1)
    Eigen::VectorXd sigma2;  // K
    double cost = 0.0;       // value of the segmentation criterion

    void validate() const;
};

struct PiecewiseOptions {
    int min_seg_len = -1;        // default p + 2 (well-posed OLS + variance)
    bool homoskedastic = false;  // shared sigma2; default is per-segment
};

struct SegmentCost {
    double cost = 0.0;
    PolyFit fit;
};

// Contribution of index range [a, b) to the criterion: OLS fit, variance
// RSS/(b-a) floored, cost (b-a) * (1 + log sigma2_hat).
SegmentCost segment_cost(const TimeSeries& series, int p, int a, int b,
                         double floor = -1.0);

// All per-segment costs, precomputed from cumulative moment sums so a cell
// costs O(p^3) after O(n p^2) preprocessing. Shared across fits with
// different K.
class SegmentCostTable {
public:
    SegmentCostTable(const TimeSeries& series, int p, int min_seg_len,
                     bool homoskedastic, double floor);

    double cost(int a, int b) const;    // [a, b); +inf if shorter than min length
    PolyFit refit(int a, int b) const;  // coefficients and variance for a cell

    int n() const { return n_; }
    int degree() const { return p_; }
    int min_seg_len() const { return min_len_; }
    bool homoskedastic() const { return homoskedastic_; }
    double floor() const { return floor_; }

private:
    int n_ = 0, p_ = 0, min_len_ = 1;
    bool homoskedastic_ = false;
    double floor_ = 1e-10;
    Eigen::MatrixXd pow_sums_;   // (2p+1) x (n+1) prefix sums of t^d
    Eigen::MatrixXd cross_sums_; // (p+1) x (n+1) prefix sums of t^d x
    Eigen::VectorXd sq_sums_;    // n+1 prefix sums of x^2
    std::vector<double> cells_;  // (n+1)^2 cost cells, row a, col b

    PolyFit solve_cell(int a, int b) const;
};

// Exact global minimizer of the criterion over contiguous K-partitions
// (dynamic programming with backtracking).
PiecewiseModel fit_dp(const TimeSeries& series, int K, int p,
                      const PiecewiseOptions& opts = {});
PiecewiseModel fit_dp(const SegmentCostTable& table, int K);

struct Reconstruction {
    Eigen::VectorXd denoised;
    Eigen::VectorXi labels;  // 0-based segment of each point
};

Reconstruction reconstruct(const PiecewiseModel& model, const Eigen::VectorXd& t);

}  // namespace tsreg

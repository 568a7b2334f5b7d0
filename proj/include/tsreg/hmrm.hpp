#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tsreg/core.hpp"
#include "tsreg/time_series.hpp"

namespace tsreg {

// Hidden Markov regression with a left-right chain: transitions may only
// stay or advance one state, the last state is absorbing.
struct HmrmModel {
    int K = 1;
    int p = 0;
    Eigen::VectorXd pi;      // initial state distribution
    Eigen::MatrixXd A;       // K x K transitions, A(l,k) = 0 unless l <= k <= l+1
    Eigen::MatrixXd beta;    // K x (p+1)
    Eigen::VectorXd sigma2;  // K

    void validate() const;
};

// Structural left-right initialization: 0.5 on the diagonal and
// superdiagonal, absorbing last state.
Eigen::MatrixXd left_right_transitions(int K);

struct ForwardBackward {
    Eigen::MatrixXd forward;   // scaled forward variables; row i is the
                               // filtering distribution p(z_i | x_1..i)
    Eigen::MatrixXd backward;  // scaled backward variables
    Eigen::VectorXd log_scale; // log c_i per step; loglik = sum(log_scale)
    Eigen::MatrixXd tau;       // smoothed posteriors p(z_i = k | x)
    std::vector<Eigen::MatrixXd> xi;  // n-1 pairwise posteriors, each sums to 1
    double loglik = 0.0;
};

ForwardBackward forward_backward(const HmrmModel& model, const TimeSeries& series);

struct HmrmFitReport {
    HmrmModel model;
    std::vector<double> loglik_trace;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    int restarts_used = 0;
};

// Baum-Welch with the left-right zero pattern preserved exactly and pi held
// at (1, 0, ..., 0) (single-sequence convention).
HmrmFitReport fit_baum_welch(const TimeSeries& series, int K, int p,
                             const FitOptions& options = {});

// Causal reconstruction sum_k omega_ik beta_k . r_i from the filtering
// probabilities.
Eigen::VectorXd denoise_filtered(const HmrmModel& model, const TimeSeries& series);

// Per-point argmax of the smoothed posteriors; ties go to the lowest index.
Eigen::VectorXi segment_map(const HmrmModel& model, const TimeSeries& series);

// Most likely state sequence; provided for comparison with segment_map.
Eigen::VectorXi viterbi_path(const HmrmModel& model, const TimeSeries& series);

}  // namespace tsreg

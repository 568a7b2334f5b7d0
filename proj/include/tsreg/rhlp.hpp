#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tsreg/core.hpp"
#include "tsreg/time_series.hpp"

namespace tsreg {

// Mixture of K polynomial regressions gated by a multinomial logit in time.
// The last row of w is the reference component and stays pinned to zero.
struct RhlpModel {
    int K = 1;  // number of components
    int p = 0;  // regression degree
    int q = 1;  // logit degree (1 yields contiguous segments)
    Eigen::MatrixXd w;       // K x (q+1) logistic weights
    Eigen::MatrixXd beta;    // K x (p+1) regression coefficients
    Eigen::VectorXd sigma2;  // K noise variances

    void validate() const;
};

// Time-varying component probabilities: softmax over rows of the linear
// logits w_k . (1, t_i, ..., t_i^q). Rows sum to 1; overflow-safe.
Eigen::MatrixXd logistic_proportions(const Eigen::MatrixXd& w, const Eigen::VectorXd& t);
Eigen::MatrixXd log_logistic_proportions(const Eigen::MatrixXd& w, const Eigen::VectorXd& t);

struct SampledSignal {
    TimeSeries series;
    Eigen::VectorXi labels;      // generating component per point (0-based)
    Eigen::VectorXd mean_curve;  // noiseless expectation sum_k pi_ik beta_k . r_i
};

SampledSignal sample_signal(const RhlpModel& model, const Eigen::VectorXd& t,
                            std::uint64_t seed);

struct EStep {
    Eigen::MatrixXd tau;  // n x K posterior responsibilities, rows sum to 1
    double loglik = 0.0;
};

EStep e_step(const RhlpModel& model, const TimeSeries& series);

// Weighted multinomial log-likelihood Q1(w) = sum_ik tau_ik log pi_ik(w) and
// its gradient with respect to the free rows of w (all but the pinned last
// one). Exposed separately so the solver can be checked against finite
// differences.
double q1_value(const Eigen::MatrixXd& tau, const Eigen::MatrixXd& v_basis,
                const Eigen::MatrixXd& w);
Eigen::MatrixXd q1_gradient(const Eigen::MatrixXd& tau, const Eigen::MatrixXd& v_basis,
                            const Eigen::MatrixXd& w);

struct IrlsResult {
    Eigen::MatrixXd w;
    double q1 = 0.0;
    int newton_steps = 0;
    bool converged = true;  // false when the step budget ran out first
};

// Newton maximization of Q1 with step-halving; never returns a w with Q1
// below the starting point.
IrlsResult irls_fit(const Eigen::MatrixXd& tau, const Eigen::VectorXd& t, int q,
                    const Eigen::MatrixXd& w_init, int max_steps = 50);

RhlpModel m_step(const Eigen::MatrixXd& tau, const TimeSeries& series,
                 const RhlpModel& model_in);

struct FitReport {
    RhlpModel model;
    std::vector<double> loglik_trace;  // nondecreasing
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    int restarts_used = 0;
};

FitReport fit_em(const TimeSeries& series, int K, int p, int q,
                 const FitOptions& options = {});

// Expectation curve sum_k pi_ik(w) beta_k . r_i.
Eigen::VectorXd denoise(const RhlpModel& model, const Eigen::VectorXd& t);

// Per-point argmax of the proportions; ties go to the lowest index.
Eigen::VectorXi segment(const RhlpModel& model, const Eigen::VectorXd& t);

int rhlp_param_count(int K, int p, int q);  // K(p+q+3) - (q+1)
double bic_score(double loglik, int K, int p, int q, Eigen::Index n);

struct BicCell {
    int K = 0, p = 0, q = 0;
    double loglik = 0.0, bic = 0.0;
    bool ok = false;
    std::string message;
};

struct ModelSelection {
    FitReport best;
    BicCell best_cell;
    std::vector<BicCell> table;  // one row per grid cell
};

ModelSelection select_model(const TimeSeries& series, const std::vector<int>& K_range,
                            const std::vector<int>& p_range, const std::vector<int>& q_range,
                            const FitOptions& options = {});

}  // namespace tsreg

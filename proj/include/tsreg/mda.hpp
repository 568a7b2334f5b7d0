#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tsreg/rhlp.hpp"

namespace tsreg {

struct FeatureVector {
    Eigen::VectorXd values;
    int label = -1;  // 0-based class, -1 when unknown
};

// Flattens a fitted model into the feature vector used for classification:
// the free w rows (the pinned reference row carries no information), then
// beta row by row, then sigma2.
Eigen::VectorXd rhlp_features(const RhlpModel& model);

// Gaussian mixture for one class.
struct ClassGmm {
    int R = 1;
    Eigen::VectorXd alpha;               // mixing proportions, sum to 1
    std::vector<Eigen::VectorXd> mu;     // R means
    std::vector<Eigen::MatrixXd> sigma;  // R covariances, SPD after ridge
    double prior = 1.0;                  // class prior
};

struct GmmOptions {
    int max_iter = 500;
    double rel_tol = 1e-8;
    int n_restarts = 5;      // random restarts besides the farthest-point seeding
    std::uint64_t seed = 0;
    bool diagonal = false;   // diagonal covariances for small-sample regimes
    double ridge_rel = 1e-6; // ridge added each M-step, relative to mean diagonal
};

struct GmmFit {
    ClassGmm gmm;
    double loglik = 0.0;
    std::vector<double> loglik_trace;
    bool converged = false;
};

GmmFit gmm_fit(const std::vector<Eigen::VectorXd>& features, int R,
               const GmmOptions& opts = {});

int gmm_param_count(int R, int d, bool diagonal = false);

struct RSelection {
    int best_R = 1;
    GmmFit best_fit;
    std::vector<std::pair<int, double>> bic_table;  // (R, BIC)
};

// Maximizes BIC(R) = loglik - nu_R/2 log(n) over R = 1..R_max; ties go to
// the smaller R.
RSelection select_R(const std::vector<Eigen::VectorXd>& features, int R_max,
                    const GmmOptions& opts = {});

struct MdaClassifier {
    int G = 0;
    std::vector<ClassGmm> classes;
    // Per-dimension standardization learned on the training set; scale is all
    // ones when disabled.
    Eigen::VectorXd feature_mean;
    Eigen::VectorXd feature_scale;
};

struct MdaOptions {
    int R_max = 3;
    bool standardize = true;
    GmmOptions gmm;
};

MdaClassifier train_mda(const std::vector<FeatureVector>& dataset, int G,
                        const MdaOptions& opts = {});

struct Prediction {
    int label = 0;
    Eigen::VectorXd posterior;  // sums to 1
};

Prediction predict_map(const MdaClassifier& clf, const Eigen::VectorXd& y);

}  // namespace tsreg

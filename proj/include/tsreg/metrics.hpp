#pragma once

#include <Eigen/Dense>

namespace tsreg {

// Mean squared error between the true noiseless curve and an estimate.
double denoising_error(const Eigen::VectorXd& true_mean, const Eigen::VectorXd& estimate);

// Fraction of mismatched points minimized over all K! label permutations
// (partitions are compared up to relabeling). Labels are 0-based.
double misclassification_rate(const Eigen::VectorXi& truth, const Eigen::VectorXi& estimate,
                              int K);

}  // namespace tsreg

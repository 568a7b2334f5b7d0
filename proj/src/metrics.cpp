#include "tsreg/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tsreg {

double denoising_error(const Eigen::VectorXd& true_mean, const Eigen::VectorXd& estimate) {
    if (true_mean.size() != estimate.size())
        throw std::invalid_argument("denoising_error: length mismatch");
    if (true_mean.size() == 0)
        throw std::invalid_argument("denoising_error: empty input");
    return (true_mean - estimate).squaredNorm() / static_cast<double>(true_mean.size());
}

double misclassification_rate(const Eigen::VectorXi& truth, const Eigen::VectorXi& estimate,
                              int K) {
    if (truth.size() != estimate.size())
        throw std::invalid_argument("misclassification_rate: length mismatch");
    if (truth.size() == 0)
        throw std::invalid_argument("misclassification_rate: empty input");
    if (K < 1 || K > 8)
        throw std::invalid_argument("misclassification_rate: K out of supported range 1..8");
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= K || estimate[i] < 0 || estimate[i] >= K)
            throw std::invalid_argument("misclassification_rate: label outside 0..K-1 at row " +
                                        std::to_string(i));
    }

    // confusion counts, then the best assignment over all K! relabelings
    Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(K, K);
    for (Eigen::Index i = 0; i < truth.size(); ++i)
        confusion(truth[i], estimate[i]) += 1;

    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    long best_matches = -1;
    do {
        long matches = 0;
        for (int k = 0; k < K; ++k) matches += confusion(k, perm[k]);
        best_matches = std::max(best_matches, matches);
    } while (std::next_permutation(perm.begin(), perm.end()));

    return 1.0 - static_cast<double>(best_matches) / static_cast<double>(truth.size());
}

}  // namespace tsreg

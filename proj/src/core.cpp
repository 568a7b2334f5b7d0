#include "tsreg/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsreg {

Eigen::MatrixXd build_basis(const Eigen::VectorXd& t, int degree) {
    if (t.size() == 0) throw std::invalid_argument("build_basis: empty instants vector");
    if (degree < 0) throw std::invalid_argument("build_basis: negative degree");
    Eigen::MatrixXd basis(t.size(), degree + 1);
    basis.col(0).setOnes();
    for (int j = 1; j <= degree; ++j)
        basis.col(j) = basis.col(j - 1).cwiseProduct(t);
    return basis;
}

double variance_floor(const Eigen::VectorXd& x) {
    if (x.size() == 0) return 1e-10;
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    return std::max(1e-10, 1e-8 * var);
}

PolyFit weighted_polyfit(const Eigen::MatrixXd& basis, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& weights, double floor) {
    const Eigen::Index n = basis.rows();
    if (x.size() != n || weights.size() != n)
        throw std::invalid_argument("weighted_polyfit: inconsistent lengths");
    if ((weights.array() < 0.0).any())
        throw std::invalid_argument("weighted_polyfit: negative weight");

    // tiny weights contribute nothing but can wreck conditioning
    Eigen::VectorXd w = (weights.array() < 1e-12).select(0.0, weights);
    const double wsum = w.sum();
    if (!(wsum > 0.0))
        throw std::invalid_argument("weighted_polyfit: all weights are zero");

    const Eigen::VectorXd s = w.cwiseSqrt();
    Eigen::MatrixXd scaled = s.asDiagonal() * basis;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(scaled);

    PolyFit fit;
    fit.coeffs = cod.solve((s.cwiseProduct(x)).eval());
    fit.rank_deficient = cod.rank() < basis.cols();

    const Eigen::VectorXd resid = x - basis * fit.coeffs;
    fit.weighted_rss = std::max(0.0, (w.array() * resid.array().square()).sum());
    const double f = floor >= 0.0 ? floor : variance_floor(x);
    fit.variance = std::max(fit.weighted_rss / wsum, f);
    return fit;
}

double log_gaussian(double x, double mean, double variance) {
    if (!(variance > 0.0))
        throw std::invalid_argument("log_gaussian: variance must be positive");
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * M_PI * variance) + d * d / variance);
}

double log_sum_exp(const Eigen::ArrayXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;  // all -inf stays -inf
    return m + std::log((v - m).exp().sum());
}

std::vector<ComponentInit> segmentation_inits(const TimeSeries& series, int K, int p,
                                              int n_random, Rng& rng) {
    series.validate();
    if (K < 1) throw std::invalid_argument("segmentation_inits: K < 1");
    const int n = static_cast<int>(series.n());
    const int min_len = std::max(1, std::min(p + 2, n / K));
    const Eigen::MatrixXd basis = build_basis(series.t, p);
    const double floor = variance_floor(series.x);

    auto fit_cuts = [&](const std::vector<int>& bounds) {
        ComponentInit init;
        init.beta.resize(K, p + 1);
        init.sigma2.resize(K);
        for (int k = 0; k < K; ++k) {
            const int a = bounds[k], b = bounds[k + 1];
            Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
            w.segment(a, b - a).setOnes();
            const PolyFit fit = weighted_polyfit(basis, series.x, w, floor);
            init.beta.row(k) = fit.coeffs.transpose();
            init.sigma2[k] = fit.variance;
        }
        return init;
    };

    auto uniform_bounds = [&]() {
        std::vector<int> bounds(K + 1);
        for (int k = 0; k <= K; ++k)
            bounds[k] = static_cast<int>(static_cast<long long>(n) * k / K);
        return bounds;
    };

    std::vector<ComponentInit> inits;
    inits.push_back(fit_cuts(uniform_bounds()));

    for (int r = 0; r < n_random; ++r) {
        std::vector<int> bounds;
        bool ok = false;
        for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
            bounds.assign(1, 0);
            for (int k = 1; k < K; ++k) bounds.push_back(rng.uniform_int(1, n - 1));
            bounds.push_back(n);
            std::sort(bounds.begin(), bounds.end());
            ok = true;
            for (int k = 0; k < K; ++k)
                if (bounds[k + 1] - bounds[k] < min_len) { ok = false; break; }
        }
        if (!ok) bounds = uniform_bounds();
        inits.push_back(fit_cuts(bounds));
    }
    return inits;
}

}  // namespace tsreg

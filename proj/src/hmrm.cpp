#include "tsreg/hmrm.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace tsreg {

namespace {

constexpr double kEmptyStateMass = 1e-8;
constexpr double kLogEmissionFloor = -700.0;

// log emission densities, n x K
Eigen::MatrixXd log_emissions(const HmrmModel& model, const TimeSeries& series) {
    const Eigen::MatrixXd means =
        build_basis(series.t, model.p) * model.beta.transpose();
    Eigen::MatrixXd logb(series.n(), model.K);
    for (int k = 0; k < model.K; ++k) {
        const double s2 = model.sigma2[k];
        logb.col(k) = -0.5 * (std::log(2.0 * M_PI * s2) +
                              (series.x - means.col(k)).array().square() / s2);
    }
    return logb;
}

}  // namespace

void HmrmModel::validate() const {
    if (K < 1) throw std::invalid_argument("HmrmModel: K < 1");
    if (p < 0) throw std::invalid_argument("HmrmModel: p < 0");
    if (pi.size() != K || A.rows() != K || A.cols() != K)
        throw std::invalid_argument("HmrmModel: pi/A shape mismatch");
    if (beta.rows() != K || beta.cols() != p + 1)
        throw std::invalid_argument("HmrmModel: beta must be K x (p+1)");
    if (sigma2.size() != K || (sigma2.array() <= 0.0).any())
        throw std::invalid_argument("HmrmModel: bad sigma2");
    if ((pi.array() < 0.0).any() || std::abs(pi.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("HmrmModel: pi is not a distribution");
    for (int l = 0; l < K; ++l) {
        if (std::abs(A.row(l).sum() - 1.0) > 1e-9)
            throw std::invalid_argument("HmrmModel: A row " + std::to_string(l) +
                                        " does not sum to 1");
        for (int k = 0; k < K; ++k) {
            if (A(l, k) < 0.0)
                throw std::invalid_argument("HmrmModel: negative transition probability");
            if ((k < l || k > l + 1) && A(l, k) != 0.0)
                throw std::invalid_argument("HmrmModel: left-right constraint violated at (" +
                                            std::to_string(l) + "," + std::to_string(k) + ")");
        }
    }
}

Eigen::MatrixXd left_right_transitions(int K) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, K);
    for (int l = 0; l < K - 1; ++l) {
        A(l, l) = 0.5;
        A(l, l + 1) = 0.5;
    }
    A(K - 1, K - 1) = 1.0;
    return A;
}

ForwardBackward forward_backward(const HmrmModel& model, const TimeSeries& series) {
    model.validate();
    series.validate();
    const Eigen::Index n = series.n();
    const int K = model.K;

    // per-row max shift keeps every row of b away from zero; the floor is a
    // second guard for rows that are -inf across the board
    Eigen::MatrixXd logb = log_emissions(model, series);
    Eigen::VectorXd shift(n);
    Eigen::MatrixXd b(n, K);
    for (Eigen::Index i = 0; i < n; ++i) {
        shift[i] = logb.row(i).maxCoeff();
        if (!std::isfinite(shift[i]))
            throw std::runtime_error("forward_backward: non-finite emission row " +
                                     std::to_string(i));
        b.row(i) = (logb.row(i).array() - shift[i]).max(kLogEmissionFloor).exp();
    }

    ForwardBackward fb;
    fb.forward.resize(n, K);
    fb.backward.resize(n, K);
    fb.log_scale.resize(n);

    Eigen::VectorXd a = model.pi.cwiseProduct(b.row(0).transpose());
    double c = a.sum();
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::runtime_error("forward_backward: zero likelihood row at i = 0");
    fb.forward.row(0) = a.transpose() / c;
    fb.log_scale[0] = std::log(c) + shift[0];
    for (Eigen::Index i = 1; i < n; ++i) {
        a = (model.A.transpose() * fb.forward.row(i - 1).transpose())
                .cwiseProduct(b.row(i).transpose());
        c = a.sum();
        if (!(c > 0.0) || !std::isfinite(c))
            throw std::runtime_error("forward_backward: zero likelihood row at i = " +
                                     std::to_string(i));
        fb.forward.row(i) = a.transpose() / c;
        fb.log_scale[i] = std::log(c) + shift[i];
    }
    fb.loglik = fb.log_scale.sum();

    fb.backward.row(n - 1).setOnes();
    for (Eigen::Index i = n - 2; i >= 0; --i) {
        const Eigen::VectorXd nxt =
            b.row(i + 1).cwiseProduct(fb.backward.row(i + 1)).transpose();
        const double ci1 = std::exp(fb.log_scale[i + 1] - shift[i + 1]);
        fb.backward.row(i) = (model.A * nxt).transpose() / ci1;
    }

    fb.tau = fb.forward.cwiseProduct(fb.backward);
    fb.tau.array().colwise() /= fb.tau.rowwise().sum().array();

    fb.xi.reserve(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double ci1 = std::exp(fb.log_scale[i + 1] - shift[i + 1]);
        Eigen::MatrixXd slice =
            (fb.forward.row(i).transpose() *
             (b.row(i + 1).cwiseProduct(fb.backward.row(i + 1))))
                .cwiseProduct(model.A) /
            ci1;
        slice /= slice.sum();
        fb.xi.push_back(std::move(slice));
    }
    return fb;
}

HmrmFitReport fit_baum_welch(const TimeSeries& series, int K, int p,
                             const FitOptions& options) {
    series.validate();
    if (K < 1) throw std::invalid_argument("fit_baum_welch: K < 1");
    if (p < 0) throw std::invalid_argument("fit_baum_welch: p < 0");
    if (options.max_iter < 1) throw std::invalid_argument("fit_baum_welch: max_iter < 1");
    const Eigen::Index n = series.n();
    if (n <= static_cast<Eigen::Index>(K) * (p + 1))
        std::cerr << "fit_baum_welch: warning: n = " << n << " <= K(p+1) = " << K * (p + 1)
                  << ", fit is underdetermined\n";

    Rng rng(split_seed(options.seed, 0x51ed270b));
    const auto inits = segmentation_inits(series, K, p, options.n_random_starts, rng);
    const Eigen::MatrixXd basis = build_basis(series.t, p);
    const double floor = variance_floor(series.x);

    HmrmFitReport best;
    best.loglik = -std::numeric_limits<double>::infinity();
    best.restarts_used = static_cast<int>(inits.size());

    for (const auto& init : inits) {
        HmrmModel model;
        model.K = K;
        model.p = p;
        model.pi = Eigen::VectorXd::Zero(K);
        model.pi[0] = 1.0;  // held fixed: single-sequence convention
        model.A = left_right_transitions(K);
        model.beta = init.beta;
        model.sigma2 = init.sigma2;

        HmrmFitReport report;
        report.restarts_used = static_cast<int>(inits.size());
        double prev = -std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < options.max_iter; ++iter) {
            const ForwardBackward fb = forward_backward(model, series);
            report.loglik_trace.push_back(fb.loglik);
            report.iterations = iter + 1;
            if (iter > 0 && std::abs(fb.loglik - prev) <= options.rel_tol * std::abs(prev)) {
                report.converged = true;
                break;
            }
            prev = fb.loglik;

            // M-step: regressions from smoothed posteriors
            for (int k = 0; k < K; ++k) {
                const double nk = fb.tau.col(k).sum();
                if (nk < kEmptyStateMass) {
                    const int m = std::min<int>(static_cast<int>(n),
                                                std::max(p + 2, static_cast<int>(n) / K));
                    Eigen::VectorXd coverage = fb.tau.rowwise().maxCoeff();
                    int best_a = 0;
                    double best_cov = std::numeric_limits<double>::infinity();
                    double window = coverage.head(m).sum();
                    for (int start = 0;; ++start) {
                        if (window < best_cov) { best_cov = window; best_a = start; }
                        if (start + m >= n) break;
                        window += coverage[start + m] - coverage[start];
                    }
                    Eigen::VectorXd wts = Eigen::VectorXd::Zero(n);
                    wts.segment(best_a, m).setOnes();
                    const PolyFit fit = weighted_polyfit(basis, series.x, wts, floor);
                    model.beta.row(k) = fit.coeffs.transpose();
                    const double mean = series.x.mean();
                    model.sigma2[k] =
                        std::max((series.x.array() - mean).square().mean(), floor);
                    continue;
                }
                const PolyFit fit = weighted_polyfit(basis, series.x, fb.tau.col(k), floor);
                model.beta.row(k) = fit.coeffs.transpose();
                model.sigma2[k] = fit.variance;
            }

            // transitions: xi-ratio update on the two allowed entries per row
            for (int l = 0; l < K - 1; ++l) {
                double stay = 0.0, advance = 0.0;
                for (const auto& slice : fb.xi) {
                    stay += slice(l, l);
                    advance += slice(l, l + 1);
                }
                const double denom = stay + advance;
                if (denom > 0.0) {
                    model.A(l, l) = stay / denom;
                    model.A(l, l + 1) = advance / denom;
                }
            }
            model.A(K - 1, K - 1) = 1.0;  // absorbing last state
        }
        report.model = model;
        report.loglik = report.loglik_trace.back();
        if (report.loglik > best.loglik) best = report;
    }
    return best;
}

Eigen::VectorXd denoise_filtered(const HmrmModel& model, const TimeSeries& series) {
    const ForwardBackward fb = forward_backward(model, series);
    const Eigen::MatrixXd means =
        build_basis(series.t, model.p) * model.beta.transpose();
    return (fb.forward.array() * means.array()).rowwise().sum();
}

Eigen::VectorXi segment_map(const HmrmModel& model, const TimeSeries& series) {
    const ForwardBackward fb = forward_backward(model, series);
    Eigen::VectorXi labels(series.n());
    for (Eigen::Index i = 0; i < series.n(); ++i) {
        int arg = 0;
        for (int k = 1; k < model.K; ++k)
            if (fb.tau(i, k) > fb.tau(i, arg)) arg = k;
        labels[i] = arg;
    }
    return labels;
}

Eigen::VectorXi viterbi_path(const HmrmModel& model, const TimeSeries& series) {
    model.validate();
    series.validate();
    const Eigen::Index n = series.n();
    const int K = model.K;
    const Eigen::MatrixXd logb = log_emissions(model, series);
    const double neg_inf = -std::numeric_limits<double>::infinity();

    auto safe_log = [](double v) {
        return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    };

    Eigen::MatrixXd score(n, K);
    Eigen::MatrixXi back(n, K);
    for (int k = 0; k < K; ++k)
        score(0, k) = safe_log(model.pi[k]) + logb(0, k);
    for (Eigen::Index i = 1; i < n; ++i) {
        for (int k = 0; k < K; ++k) {
            double bestv = neg_inf;
            int arg = 0;
            for (int l = 0; l < K; ++l) {
                const double v = score(i - 1, l) + safe_log(model.A(l, k));
                if (v > bestv) { bestv = v; arg = l; }
            }
            score(i, k) = bestv + logb(i, k);
            back(i, k) = arg;
        }
    }

    Eigen::VectorXi path(n);
    int arg = 0;
    for (int k = 1; k < K; ++k)
        if (score(n - 1, k) > score(n - 1, arg)) arg = k;
    path[n - 1] = arg;
    for (Eigen::Index i = n - 1; i > 0; --i) path[i - 1] = back(i, path[i]);
    return path;
}

}  // namespace tsreg

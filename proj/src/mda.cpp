#include "tsreg/mda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsreg/core.hpp"

namespace tsreg {

Eigen::VectorXd rhlp_features(const RhlpModel& model) {
    model.validate();
    const int d = (model.K - 1) * (model.q + 1) + model.K * (model.p + 1) + model.K;
    Eigen::VectorXd y(d);
    int pos = 0;
    for (int k = 0; k < model.K - 1; ++k) {
        y.segment(pos, model.q + 1) = model.w.row(k).transpose();
        pos += model.q + 1;
    }
    for (int k = 0; k < model.K; ++k) {
        y.segment(pos, model.p + 1) = model.beta.row(k).transpose();
        pos += model.p + 1;
    }
    y.segment(pos, model.K) = model.sigma2;
    return y;
}

namespace {

// log N(y; mu, sigma) via Cholesky; escalates the ridge if sigma is not SPD
double log_mvnormal(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                    const Eigen::MatrixXd& sigma) {
    const int d = static_cast<int>(y.size());
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd fixed = sigma;
        double ridge = 1e-10 * (1.0 + sigma.diagonal().cwiseAbs().mean());
        for (int tries = 0; tries < 16; ++tries) {
            fixed.diagonal().array() += ridge;
            llt.compute(fixed);
            if (llt.info() == Eigen::Success) break;
            ridge *= 10.0;
        }
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("log_mvnormal: covariance not positive definite");
    }
    const Eigen::VectorXd z = llt.matrixL().solve(y - mu);
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += std::log(llt.matrixL()(i, i));
    return -0.5 * (d * std::log(2.0 * M_PI) + z.squaredNorm()) - logdet;
}

Eigen::MatrixXd data_covariance(const std::vector<Eigen::VectorXd>& ys,
                                const Eigen::VectorXd& mean) {
    const int d = static_cast<int>(mean.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& y : ys) {
        const Eigen::VectorXd c = y - mean;
        cov.noalias() += c * c.transpose();
    }
    cov /= static_cast<double>(ys.size());
    return cov;
}

void apply_ridge(Eigen::MatrixXd& sigma, double ridge_rel, bool diagonal) {
    if (diagonal) sigma = sigma.diagonal().asDiagonal();
    const double ridge =
        ridge_rel * (sigma.diagonal().mean() + std::numeric_limits<double>::min()) + 1e-12;
    sigma.diagonal().array() += ridge;
}

}  // namespace

int gmm_param_count(int R, int d, bool diagonal) {
    const int per_cov = diagonal ? d : d * (d + 1) / 2;
    return R * (1 + d + per_cov) - 1;
}

GmmFit gmm_fit(const std::vector<Eigen::VectorXd>& features, int R, const GmmOptions& opts) {
    const int n = static_cast<int>(features.size());
    if (R < 1) throw std::invalid_argument("gmm_fit: R < 1");
    if (n < R)
        throw std::invalid_argument("gmm_fit: need at least R = " + std::to_string(R) +
                                    " samples, got " + std::to_string(n));
    const int d = static_cast<int>(features[0].size());
    for (const auto& y : features)
        if (y.size() != d) throw std::invalid_argument("gmm_fit: inconsistent dimensions");

    Eigen::VectorXd grand_mean = Eigen::VectorXd::Zero(d);
    for (const auto& y : features) grand_mean += y;
    grand_mean /= n;
    Eigen::MatrixXd grand_cov = data_covariance(features, grand_mean);
    apply_ridge(grand_cov, std::max(opts.ridge_rel, 1e-8), opts.diagonal);

    auto run_em = [&](const std::vector<int>& seeds_idx) {
        GmmFit fit;
        fit.gmm.R = R;
        fit.gmm.alpha = Eigen::VectorXd::Constant(R, 1.0 / R);
        fit.gmm.mu.clear();
        fit.gmm.sigma.clear();
        for (int r = 0; r < R; ++r) {
            fit.gmm.mu.push_back(features[seeds_idx[r]]);
            fit.gmm.sigma.push_back(grand_cov);
        }

        Eigen::MatrixXd resp(n, R);
        double prev = -std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < opts.max_iter; ++iter) {
            double loglik = 0.0;
            for (int i = 0; i < n; ++i) {
                Eigen::ArrayXd logp(R);
                for (int r = 0; r < R; ++r)
                    logp[r] = std::log(fit.gmm.alpha[r]) +
                              log_mvnormal(features[i], fit.gmm.mu[r], fit.gmm.sigma[r]);
                const double lse = log_sum_exp(logp);
                loglik += lse;
                resp.row(i) = (logp - lse).exp();
                resp.row(i) /= resp.row(i).sum();
            }
            fit.loglik_trace.push_back(loglik);
            fit.loglik = loglik;
            if (iter > 0 && std::abs(loglik - prev) <= opts.rel_tol * std::abs(prev)) {
                fit.converged = true;
                break;
            }
            prev = loglik;

            for (int r = 0; r < R; ++r) {
                const double nr = resp.col(r).sum();
                if (nr < 1e-10) {
                    // dead component: park it on the point the mixture likes least
                    int worst = 0;
                    double worst_lp = std::numeric_limits<double>::infinity();
                    for (int i = 0; i < n; ++i) {
                        Eigen::ArrayXd logp(R);
                        for (int s = 0; s < R; ++s)
                            logp[s] = std::log(fit.gmm.alpha[s]) +
                                      log_mvnormal(features[i], fit.gmm.mu[s], fit.gmm.sigma[s]);
                        const double lp = log_sum_exp(logp);
                        if (lp < worst_lp) { worst_lp = lp; worst = i; }
                    }
                    fit.gmm.mu[r] = features[worst];
                    fit.gmm.sigma[r] = grand_cov;
                    fit.gmm.alpha[r] = 1.0 / n;
                    fit.gmm.alpha /= fit.gmm.alpha.sum();
                    continue;
                }
                fit.gmm.alpha[r] = nr / n;
                Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
                for (int i = 0; i < n; ++i) mu += resp(i, r) * features[i];
                mu /= nr;
                Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
                for (int i = 0; i < n; ++i) {
                    const Eigen::VectorXd c = features[i] - mu;
                    sigma.noalias() += resp(i, r) * c * c.transpose();
                }
                sigma /= nr;
                apply_ridge(sigma, opts.ridge_rel, opts.diagonal);
                fit.gmm.mu[r] = mu;
                fit.gmm.sigma[r] = sigma;
            }
            fit.gmm.alpha /= fit.gmm.alpha.sum();
        }
        return fit;
    };

    // farthest-point seeding, then random restarts
    std::vector<std::vector<int>> seedings;
    {
        std::vector<int> idx;
        int first = 0;
        double best = -1.0;
        for (int i = 0; i < n; ++i) {
            const double dist = (features[i] - grand_mean).norm();
            if (dist > best) { best = dist; first = i; }
        }
        idx.push_back(first);
        while (static_cast<int>(idx.size()) < R) {
            int far = 0;
            double far_d = -1.0;
            for (int i = 0; i < n; ++i) {
                double dmin = std::numeric_limits<double>::infinity();
                for (int j : idx) dmin = std::min(dmin, (features[i] - features[j]).norm());
                if (dmin > far_d) { far_d = dmin; far = i; }
            }
            idx.push_back(far);
        }
        seedings.push_back(idx);
    }
    Rng rng(split_seed(opts.seed, 0xabcdef));
    for (int restart = 0; restart < opts.n_restarts; ++restart) {
        std::vector<int> idx;
        while (static_cast<int>(idx.size()) < R) {
            const int i = rng.uniform_int(0, n - 1);
            if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
        }
        seedings.push_back(idx);
    }

    GmmFit best;
    best.loglik = -std::numeric_limits<double>::infinity();
    for (const auto& idx : seedings) {
        GmmFit fit = run_em(idx);
        if (fit.loglik > best.loglik) best = std::move(fit);
    }
    return best;
}

RSelection select_R(const std::vector<Eigen::VectorXd>& features, int R_max,
                    const GmmOptions& opts) {
    if (R_max < 1) throw std::invalid_argument("select_R: R_max < 1");
    const int n = static_cast<int>(features.size());
    if (n < 1) throw std::invalid_argument("select_R: empty feature set");
    const int d = static_cast<int>(features[0].size());

    RSelection sel;
    double best_bic = -std::numeric_limits<double>::infinity();
    for (int R = 1; R <= std::min(R_max, n); ++R) {
        GmmFit fit = gmm_fit(features, R, opts);
        const double bic =
            fit.loglik - 0.5 * gmm_param_count(R, d, opts.diagonal) * std::log(double(n));
        sel.bic_table.emplace_back(R, bic);
        if (bic > best_bic) {  // strict: ties stay with the smaller R
            best_bic = bic;
            sel.best_R = R;
            sel.best_fit = std::move(fit);
        }
    }
    return sel;
}

MdaClassifier train_mda(const std::vector<FeatureVector>& dataset, int G,
                        const MdaOptions& opts) {
    if (G < 1) throw std::invalid_argument("train_mda: G < 1");
    if (dataset.empty()) throw std::invalid_argument("train_mda: empty dataset");
    const int d = static_cast<int>(dataset[0].values.size());

    std::vector<std::vector<Eigen::VectorXd>> by_class(G);
    for (const auto& row : dataset) {
        if (row.label < 0 || row.label >= G)
            throw std::invalid_argument("train_mda: label outside 0..G-1");
        if (row.values.size() != d)
            throw std::invalid_argument("train_mda: inconsistent feature dimension");
        by_class[row.label].push_back(row.values);
    }
    for (int g = 0; g < G; ++g)
        if (by_class[g].empty())
            throw std::invalid_argument("train_mda: class " + std::to_string(g + 1) +
                                        " has no samples");

    MdaClassifier clf;
    clf.G = G;
    clf.feature_mean = Eigen::VectorXd::Zero(d);
    clf.feature_scale = Eigen::VectorXd::Ones(d);
    if (opts.standardize) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        for (const auto& row : dataset) mean += row.values;
        mean /= static_cast<double>(dataset.size());
        Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
        for (const auto& row : dataset) var += (row.values - mean).array().square().matrix();
        var /= static_cast<double>(dataset.size());
        clf.feature_mean = mean;
        clf.feature_scale = var.array().sqrt().max(1e-12);
    }

    auto standardized = [&](const Eigen::VectorXd& y) {
        return ((y - clf.feature_mean).array() / clf.feature_scale.array()).matrix().eval();
    };

    for (int g = 0; g < G; ++g) {
        std::vector<Eigen::VectorXd> ys;
        ys.reserve(by_class[g].size());
        for (const auto& y : by_class[g]) ys.push_back(standardized(y));
        GmmOptions gmm_opts = opts.gmm;
        gmm_opts.seed = split_seed(opts.gmm.seed, static_cast<std::uint64_t>(g));
        RSelection sel = select_R(ys, opts.R_max, gmm_opts);
        ClassGmm cls = std::move(sel.best_fit.gmm);
        cls.prior = static_cast<double>(by_class[g].size()) / dataset.size();
        clf.classes.push_back(std::move(cls));
    }
    return clf;
}

Prediction predict_map(const MdaClassifier& clf, const Eigen::VectorXd& y) {
    if (clf.G < 1 || static_cast<int>(clf.classes.size()) != clf.G)
        throw std::invalid_argument("predict_map: classifier not trained");
    if (y.size() != clf.feature_mean.size())
        throw std::invalid_argument("predict_map: feature dimension mismatch: classifier has " +
                                    std::to_string(clf.feature_mean.size()) + ", input has " +
                                    std::to_string(y.size()));
    const Eigen::VectorXd z =
        ((y - clf.feature_mean).array() / clf.feature_scale.array()).matrix();

    Eigen::ArrayXd logpost(clf.G);
    for (int g = 0; g < clf.G; ++g) {
        const ClassGmm& cls = clf.classes[g];
        Eigen::ArrayXd logp(cls.R);
        for (int r = 0; r < cls.R; ++r)
            logp[r] = std::log(cls.alpha[r]) + log_mvnormal(z, cls.mu[r], cls.sigma[r]);
        logpost[g] = std::log(cls.prior) + log_sum_exp(logp);
    }

    Prediction pred;
    const double lse = log_sum_exp(logpost);
    pred.posterior = (logpost - lse).exp();
    pred.posterior /= pred.posterior.sum();
    pred.label = 0;
    for (int g = 1; g < clf.G; ++g)
        if (pred.posterior[g] > pred.posterior[pred.label]) pred.label = g;
    return pred;
}

}  // namespace tsreg

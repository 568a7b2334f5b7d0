#include "tsreg/rhlp.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace tsreg {

namespace {

constexpr double kEmptyComponentMass = 1e-8;

Eigen::MatrixXd component_means(const RhlpModel& model, const Eigen::VectorXd& t) {
    return build_basis(t, model.p) * model.beta.transpose();  // n x K
}

}  // namespace

void RhlpModel::validate() const {
    if (K < 1) throw std::invalid_argument("RhlpModel: K < 1");
    if (p < 0 || q < 0) throw std::invalid_argument("RhlpModel: negative degree");
    if (w.rows() != K || w.cols() != q + 1)
        throw std::invalid_argument("RhlpModel: w must be K x (q+1)");
    if (beta.rows() != K || beta.cols() != p + 1)
        throw std::invalid_argument("RhlpModel: beta must be K x (p+1)");
    if (sigma2.size() != K) throw std::invalid_argument("RhlpModel: sigma2 must have K entries");
    if ((sigma2.array() <= 0.0).any())
        throw std::invalid_argument("RhlpModel: nonpositive variance");
    if (w.row(K - 1).cwiseAbs().maxCoeff() != 0.0)
        throw std::invalid_argument("RhlpModel: reference w row must be zero");
}

Eigen::MatrixXd log_logistic_proportions(const Eigen::MatrixXd& w, const Eigen::VectorXd& t) {
    const int q = static_cast<int>(w.cols()) - 1;
    const Eigen::MatrixXd v = build_basis(t, q);
    Eigen::MatrixXd logits = v * w.transpose();  // n x K
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double lse = log_sum_exp(logits.row(i).transpose().array());
        logits.row(i).array() -= lse;
    }
    return logits;
}

Eigen::MatrixXd logistic_proportions(const Eigen::MatrixXd& w, const Eigen::VectorXd& t) {
    Eigen::MatrixXd pi = log_logistic_proportions(w, t).array().exp();
    // pin row sums to exactly 1
    pi.array().colwise() /= pi.rowwise().sum().array();
    return pi;
}

SampledSignal sample_signal(const RhlpModel& model, const Eigen::VectorXd& t,
                            std::uint64_t seed) {
    model.validate();
    Rng rng(seed);
    const Eigen::MatrixXd pi = logistic_proportions(model.w, t);
    const Eigen::MatrixXd means = component_means(model, t);
    const Eigen::Index n = t.size();

    SampledSignal out;
    out.series.t = t;
    out.series.x.resize(n);
    out.labels.resize(n);
    out.mean_curve = (pi.array() * means.array()).rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
        const int z = rng.categorical(pi.row(i).transpose());
        out.labels[i] = z;
        out.series.x[i] = means(i, z) + std::sqrt(model.sigma2[z]) * rng.normal();
    }
    return out;
}

EStep e_step(const RhlpModel& model, const TimeSeries& series) {
    model.validate();
    const Eigen::Index n = series.n();
    const Eigen::MatrixXd logpi = log_logistic_proportions(model.w, series.t);
    const Eigen::MatrixXd means = component_means(model, series.t);

    Eigen::MatrixXd logh(n, model.K);
    for (int k = 0; k < model.K; ++k) {
        const double s2 = model.sigma2[k];
        logh.col(k) = logpi.col(k).array() -
                      0.5 * (std::log(2.0 * M_PI * s2) +
                             (series.x - means.col(k)).array().square() / s2);
    }

    EStep es;
    es.tau.resize(n, model.K);
    es.loglik = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lse = log_sum_exp(logh.row(i).transpose().array());
        es.loglik += lse;
        es.tau.row(i) = (logh.row(i).array() - lse).exp();
        es.tau.row(i) /= es.tau.row(i).sum();
    }
    return es;
}

double q1_value(const Eigen::MatrixXd& tau, const Eigen::MatrixXd& v_basis,
                const Eigen::MatrixXd& w) {
    Eigen::MatrixXd logits = v_basis * w.transpose();
    double q1 = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double lse = log_sum_exp(logits.row(i).transpose().array());
        q1 += (tau.row(i).array() * (logits.row(i).array() - lse)).sum();
    }
    return q1;
}

Eigen::MatrixXd q1_gradient(const Eigen::MatrixXd& tau, const Eigen::MatrixXd& v_basis,
                            const Eigen::MatrixXd& w) {
    const int K = static_cast<int>(w.rows());
    Eigen::MatrixXd logits = v_basis * w.transpose();
    Eigen::MatrixXd pi(logits.rows(), K);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double lse = log_sum_exp(logits.row(i).transpose().array());
        pi.row(i) = (logits.row(i).array() - lse).exp();
    }
    // rows 0..K-2; the pinned reference row has no free parameters
    return (tau - pi).leftCols(K - 1).transpose() * v_basis;  // (K-1) x (q+1)
}

IrlsResult irls_fit(const Eigen::MatrixXd& tau, const Eigen::VectorXd& t, int q,
                    const Eigen::MatrixXd& w_init, int max_steps) {
    const Eigen::Index n = tau.rows();
    const int K = static_cast<int>(tau.cols());
    const int d = q + 1;
    if (w_init.rows() != K || w_init.cols() != d)
        throw std::invalid_argument("irls_fit: w_init must be K x (q+1)");

    IrlsResult res;
    res.w = w_init;
    res.w.row(K - 1).setZero();
    if (K == 1) {  // single component, pi == 1 everywhere
        res.q1 = 0.0;
        return res;
    }

    const Eigen::MatrixXd v = build_basis(t, q);
    const int nfree = (K - 1) * d;
    const double grad_tol = 1e-8 * std::max<double>(1.0, static_cast<double>(n));

    double q1 = q1_value(tau, v, res.w);
    res.converged = false;

    for (int step = 0; step < max_steps; ++step) {
        Eigen::MatrixXd logits = v * res.w.transpose();
        Eigen::MatrixXd pi(n, K);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double lse = log_sum_exp(logits.row(i).transpose().array());
            pi.row(i) = (logits.row(i).array() - lse).exp();
        }

        const Eigen::MatrixXd gmat = v.transpose() * (tau - pi).leftCols(K - 1);
        if (gmat.cwiseAbs().maxCoeff() < grad_tol) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd g(nfree);
        for (int k = 0; k < K - 1; ++k) g.segment(k * d, d) = gmat.col(k);

        // negated Hessian of Q1, built block-wise
        Eigen::MatrixXd M(nfree, nfree);
        for (int k = 0; k < K - 1; ++k) {
            for (int l = k; l < K - 1; ++l) {
                Eigen::ArrayXd a = pi.col(k).array() * ((k == l ? 1.0 : 0.0) - pi.col(l).array());
                const Eigen::MatrixXd block =
                    v.transpose() * (a.matrix().asDiagonal() * v);
                M.block(k * d, l * d, d, d) = block;
                if (l != k) M.block(l * d, k * d, d, d) = block.transpose();
            }
        }

        Eigen::VectorXd delta;
        bool good = false;
        for (int attempt = 0; attempt < 2 && !good; ++attempt) {
            if (attempt == 1)
                M.diagonal().array() += 1e-8 * M.trace() + 1e-12;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
            if (ldlt.info() != Eigen::Success) continue;
            delta = ldlt.solve(g);
            good = delta.allFinite() && g.dot(delta) > 0.0;
        }
        if (!good) break;  // no usable ascent direction left

        // step-halving until Q1 does not decrease
        double alpha = 1.0;
        Eigen::MatrixXd w_next = res.w;
        double q1_next = -std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int h = 0; h < 40; ++h) {
            w_next = res.w;
            for (int k = 0; k < K - 1; ++k)
                w_next.row(k) += alpha * delta.segment(k * d, d).transpose();
            q1_next = q1_value(tau, v, w_next);
            if (q1_next >= q1) { accepted = true; break; }
            alpha *= 0.5;
        }
        res.newton_steps = step + 1;
        if (!accepted) break;
        res.w = w_next;
        q1 = q1_next;
    }

    // res.converged stays false when the step budget ran out; Q1 still never
    // dropped below its starting value
    res.q1 = q1;
    return res;
}

RhlpModel m_step(const Eigen::MatrixXd& tau, const TimeSeries& series,
                 const RhlpModel& model_in) {
    const Eigen::Index n = series.n();
    const int K = model_in.K;
    if (tau.rows() != n || tau.cols() != K)
        throw std::invalid_argument("m_step: tau shape mismatch");

    RhlpModel model = model_in;
    const Eigen::MatrixXd basis = build_basis(series.t, model.p);
    const double floor = variance_floor(series.x);

    for (int k = 0; k < K; ++k) {
        const double nk = tau.col(k).sum();
        if (nk < kEmptyComponentMass) {
            // respawn a dead component on the stretch of points least claimed
            // by the others
            const int m = std::min<int>(static_cast<int>(n),
                                        std::max(model.p + 2, static_cast<int>(n) / K));
            Eigen::VectorXd coverage = tau.rowwise().maxCoeff();
            int best_a = 0;
            double best = std::numeric_limits<double>::infinity();
            double window = coverage.head(m).sum();
            for (int a = 0;; ++a) {
                if (window < best) { best = window; best_a = a; }
                if (a + m >= n) break;
                window += coverage[a + m] - coverage[a];
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
        const PolyFit fit = weighted_polyfit(basis, series.x, tau.col(k), floor);
        model.beta.row(k) = fit.coeffs.transpose();
        model.sigma2[k] = fit.variance;  // weighted RSS / n_k, floored
    }

    model.w = irls_fit(tau, series.t, model.q, model_in.w).w;
    return model;
}

FitReport fit_em(const TimeSeries& series, int K, int p, int q,
                 const FitOptions& options) {
    series.validate();
    if (K < 1) throw std::invalid_argument("fit_em: K < 1");
    if (p < 0) throw std::invalid_argument("fit_em: p < 0");
    if (q < 0) throw std::invalid_argument("fit_em: q < 0");
    if (options.max_iter < 1) throw std::invalid_argument("fit_em: max_iter < 1");
    const Eigen::Index n = series.n();
    if (n <= static_cast<Eigen::Index>(K) * (p + 1))
        std::cerr << "fit_em: warning: n = " << n << " <= K(p+1) = " << K * (p + 1)
                  << ", fit is underdetermined\n";

    Rng rng(split_seed(options.seed, 0x9e3779b9));
    const auto inits = segmentation_inits(series, K, p, options.n_random_starts, rng);

    FitReport best;
    best.loglik = -std::numeric_limits<double>::infinity();
    best.restarts_used = static_cast<int>(inits.size());

    for (const auto& init : inits) {
        RhlpModel model;
        model.K = K;
        model.p = p;
        model.q = q;
        model.w = Eigen::MatrixXd::Zero(K, q + 1);
        model.beta = init.beta;
        model.sigma2 = init.sigma2;

        FitReport report;
        report.restarts_used = static_cast<int>(inits.size());
        double prev = -std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < options.max_iter; ++iter) {
            const EStep es = e_step(model, series);
            report.loglik_trace.push_back(es.loglik);
            report.iterations = iter + 1;
            if (iter > 0 &&
                std::abs(es.loglik - prev) <= options.rel_tol * std::abs(prev)) {
                report.converged = true;
                break;
            }
            prev = es.loglik;
            model = m_step(es.tau, series, model);
        }
        report.model = model;
        report.loglik = report.loglik_trace.back();
        if (report.loglik > best.loglik) best = report;
    }
    return best;
}

Eigen::VectorXd denoise(const RhlpModel& model, const Eigen::VectorXd& t) {
    model.validate();
    const Eigen::MatrixXd pi = logistic_proportions(model.w, t);
    const Eigen::MatrixXd means = component_means(model, t);
    return (pi.array() * means.array()).rowwise().sum();
}

Eigen::VectorXi segment(const RhlpModel& model, const Eigen::VectorXd& t) {
    model.validate();
    const Eigen::MatrixXd pi = logistic_proportions(model.w, t);
    Eigen::VectorXi labels(pi.rows());
    for (Eigen::Index i = 0; i < pi.rows(); ++i) {
        int arg = 0;
        for (int k = 1; k < model.K; ++k)
            if (pi(i, k) > pi(i, arg)) arg = k;  // strict: ties keep lowest index
        labels[i] = arg;
    }
    return labels;
}

int rhlp_param_count(int K, int p, int q) { return K * (p + q + 3) - (q + 1); }

double bic_score(double loglik, int K, int p, int q, Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("bic_score: n < 1");
    return loglik - 0.5 * rhlp_param_count(K, p, q) * std::log(static_cast<double>(n));
}

ModelSelection select_model(const TimeSeries& series, const std::vector<int>& K_range,
                            const std::vector<int>& p_range, const std::vector<int>& q_range,
                            const FitOptions& options) {
    if (K_range.empty() || p_range.empty() || q_range.empty())
        throw std::invalid_argument("select_model: empty grid range");

    ModelSelection sel;
    double best_bic = -std::numeric_limits<double>::infinity();
    for (int K : K_range) {
        for (int p : p_range) {
            for (int q : q_range) {
                BicCell cell;
                cell.K = K;
                cell.p = p;
                cell.q = q;
                try {
                    FitReport report = fit_em(series, K, p, q, options);
                    cell.loglik = report.loglik;
                    cell.bic = bic_score(report.loglik, K, p, q, series.n());
                    cell.ok = true;
                    if (cell.bic > best_bic) {
                        best_bic = cell.bic;
                        sel.best = std::move(report);
                        sel.best_cell = cell;
                    }
                } catch (const std::exception& e) {
                    cell.ok = false;
                    cell.message = e.what();
                }
                sel.table.push_back(cell);
            }
        }
    }
    if (!std::isfinite(best_bic))
        throw std::runtime_error("select_model: every grid cell failed");
    return sel;
}

}  // namespace tsreg

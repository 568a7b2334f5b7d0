#include "tsreg/piecewise.hpp"

#include <cmath>
#include <limits>

namespace tsreg {

void PiecewiseModel::validate() const {
    if (K < 1) throw std::invalid_argument("PiecewiseModel: K < 1");
    if (static_cast<int>(gamma.size()) != K + 1)
        throw std::invalid_argument("PiecewiseModel: gamma must have K+1 bounds");
    if (gamma.front() != 0)
        throw std::invalid_argument("PiecewiseModel: gamma must start at 0");
    for (int k = 0; k < K; ++k)
        if (gamma[k + 1] <= gamma[k])
            throw std::invalid_argument("PiecewiseModel: gamma not strictly increasing");
    if (beta.rows() != K || beta.cols() != p + 1)
        throw std::invalid_argument("PiecewiseModel: beta must be K x (p+1)");
    if (sigma2.size() != K || (sigma2.array() <= 0.0).any())
        throw std::invalid_argument("PiecewiseModel: bad sigma2");
}

SegmentCost segment_cost(const TimeSeries& series, int p, int a, int b, double floor) {
    series.validate();
    const int n = static_cast<int>(series.n());
    const int min_len = p + 2;
    if (a < 0 || b > n || b - a < min_len)
        throw std::invalid_argument("segment_cost: segment [" + std::to_string(a) + ", " +
                                    std::to_string(b) + ") shorter than min length " +
                                    std::to_string(min_len));
    const double f = floor >= 0.0 ? floor : variance_floor(series.x);
    const int m = b - a;
    const Eigen::MatrixXd basis = build_basis(series.t.segment(a, m), p);
    const PolyFit fit =
        weighted_polyfit(basis, series.x.segment(a, m), Eigen::VectorXd::Ones(m), f);
    SegmentCost out;
    out.fit = fit;
    out.cost = m * (1.0 + std::log(fit.variance));
    return out;
}

SegmentCostTable::SegmentCostTable(const TimeSeries& series, int p, int min_seg_len,
                                   bool homoskedastic, double floor)
    : n_(static_cast<int>(series.n())),
      p_(p),
      min_len_(min_seg_len),
      homoskedastic_(homoskedastic),
      floor_(floor >= 0.0 ? floor : variance_floor(series.x)) {
    series.validate();
    if (p < 0) throw std::invalid_argument("SegmentCostTable: p < 0");
    if (min_len_ < p + 1)
        throw std::invalid_argument("SegmentCostTable: min_seg_len below p+1");

    // prefix moment sums; a cell then needs only a (p+1)x(p+1) solve
    pow_sums_.setZero(2 * p_ + 1, n_ + 1);
    cross_sums_.setZero(p_ + 1, n_ + 1);
    sq_sums_.setZero(n_ + 1);
    for (int i = 0; i < n_; ++i) {
        double td = 1.0;
        for (int d = 0; d <= 2 * p_; ++d) {
            pow_sums_(d, i + 1) = pow_sums_(d, i) + td;
            if (d <= p_) cross_sums_(d, i + 1) = cross_sums_(d, i) + td * series.x[i];
            td *= series.t[i];
        }
        sq_sums_[i + 1] = sq_sums_[i] + series.x[i] * series.x[i];
    }

    const double inf = std::numeric_limits<double>::infinity();
    cells_.assign(static_cast<size_t>(n_ + 1) * (n_ + 1), inf);
    for (int a = 0; a + min_len_ <= n_; ++a) {
        for (int b = a + min_len_; b <= n_; ++b) {
            const PolyFit fit = solve_cell(a, b);
            const int m = b - a;
            cells_[static_cast<size_t>(a) * (n_ + 1) + b] =
                homoskedastic_ ? fit.weighted_rss : m * (1.0 + std::log(fit.variance));
        }
    }
}

PolyFit SegmentCostTable::solve_cell(int a, int b) const {
    const int d = p_ + 1;
    Eigen::MatrixXd gram(d, d);
    Eigen::VectorXd rhs(d);
    for (int r = 0; r < d; ++r) {
        rhs[r] = cross_sums_(r, b) - cross_sums_(r, a);
        for (int c = 0; c < d; ++c)
            gram(r, c) = pow_sums_(r + c, b) - pow_sums_(r + c, a);
    }
    PolyFit fit;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    fit.coeffs = ldlt.solve(rhs);
    fit.rank_deficient = ldlt.info() != Eigen::Success;
    const double rss = sq_sums_[b] - sq_sums_[a] - fit.coeffs.dot(rhs);
    fit.weighted_rss = std::max(0.0, rss);
    fit.variance = std::max(fit.weighted_rss / (b - a), floor_);
    return fit;
}

double SegmentCostTable::cost(int a, int b) const {
    if (a < 0 || b > n_ || b <= a) return std::numeric_limits<double>::infinity();
    return cells_[static_cast<size_t>(a) * (n_ + 1) + b];
}

PolyFit SegmentCostTable::refit(int a, int b) const {
    if (a < 0 || b > n_ || b - a < min_len_)
        throw std::invalid_argument("SegmentCostTable::refit: bad cell");
    return solve_cell(a, b);
}

PiecewiseModel fit_dp(const SegmentCostTable& table, int K) {
    const int n = table.n();
    const int m = table.min_seg_len();
    if (K < 1) throw std::invalid_argument("fit_dp: K < 1");
    if (n < K * m)
        throw std::invalid_argument("fit_dp: n = " + std::to_string(n) +
                                    " too small for K = " + std::to_string(K) +
                                    " segments of length >= " + std::to_string(m));

    const double inf = std::numeric_limits<double>::infinity();
    // best[k][j]: optimal cost of covering [0, j) with k segments
    Eigen::MatrixXd best = Eigen::MatrixXd::Constant(K + 1, n + 1, inf);
    Eigen::MatrixXi from = Eigen::MatrixXi::Constant(K + 1, n + 1, -1);
    for (int j = m; j <= n; ++j) best(1, j) = table.cost(0, j);
    for (int k = 2; k <= K; ++k) {
        for (int j = k * m; j <= n; ++j) {
            for (int a = (k - 1) * m; a <= j - m; ++a) {
                const double c = best(k - 1, a) + table.cost(a, j);
                if (c < best(k, j)) {
                    best(k, j) = c;
                    from(k, j) = a;
                }
            }
        }
    }

    PiecewiseModel model;
    model.K = K;
    model.p = table.degree();
    model.gamma.assign(K + 1, 0);
    model.gamma[K] = n;
    for (int k = K; k >= 2; --k) model.gamma[k - 1] = from(k, model.gamma[k]);

    model.beta.resize(K, table.degree() + 1);
    model.sigma2.resize(K);
    double total_rss = 0.0;
    for (int k = 0; k < K; ++k) {
        const PolyFit fit = table.refit(model.gamma[k], model.gamma[k + 1]);
        model.beta.row(k) = fit.coeffs.transpose();
        model.sigma2[k] = fit.variance;
        total_rss += fit.weighted_rss;
    }
    if (table.homoskedastic()) {
        const double shared = std::max(total_rss / n, table.floor());
        model.sigma2.setConstant(shared);
        model.cost = n * (1.0 + std::log(shared));
    } else {
        model.cost = best(K, n);
    }
    return model;
}

PiecewiseModel fit_dp(const TimeSeries& series, int K, int p, const PiecewiseOptions& opts) {
    if (p < 0) throw std::invalid_argument("fit_dp: p < 0");
    const int min_len = opts.min_seg_len > 0 ? opts.min_seg_len : p + 2;
    const SegmentCostTable table(series, p, min_len, opts.homoskedastic, -1.0);
    return fit_dp(table, K);
}

Reconstruction reconstruct(const PiecewiseModel& model, const Eigen::VectorXd& t) {
    model.validate();
    const int n = static_cast<int>(t.size());
    if (model.gamma.back() != n)
        throw std::invalid_argument("reconstruct: model fitted for n = " +
                                    std::to_string(model.gamma.back()) + ", got " +
                                    std::to_string(n));
    const Eigen::MatrixXd curves = build_basis(t, model.p) * model.beta.transpose();
    Reconstruction rec;
    rec.denoised.resize(n);
    rec.labels.resize(n);
    for (int k = 0; k < model.K; ++k) {
        for (int i = model.gamma[k]; i < model.gamma[k + 1]; ++i) {
            rec.labels[i] = k;
            rec.denoised[i] = curves(i, k);
        }
    }
    return rec;
}

}  // namespace tsreg

// Acceptance suite: runs every gating criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "test_support.hpp"
#include "tsreg/bench.hpp"
#include "tsreg/hmrm.hpp"
#include "tsreg/mda.hpp"
#include "tsreg/metrics.hpp"
#include "tsreg/model_io.hpp"
#include "tsreg/piecewise.hpp"
#include "tsreg/rhlp.hpp"

using namespace tsreg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome pass(const std::string& detail) { return {true, detail}; }
Outcome fail(const std::string& detail) { return {false, detail}; }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.5g", v);
    return buf;
}

bool trace_nondecreasing(const std::vector<double>& trace, double slack = 1e-9) {
    for (size_t i = 1; i < trace.size(); ++i)
        if (trace[i] < trace[i - 1] - slack) return false;
    return true;
}

const CellStats& cell_of(const BenchResult& result, double grid_value,
                         const std::string& model) {
    for (const auto& cell : result.cells)
        if (cell.model == model && cell.grid_value == grid_value) return cell;
    throw std::logic_error("missing cell " + model + " @ " + fmt(grid_value));
}

// ---------------------------------------------------------------------------

Outcome em_monotonicity() {
    for (int i = 0; i < 200; ++i) {
        Rng meta(split_seed(101, i));
        const int n = 30 + meta.uniform_int(0, 70);
        const int K = 1 + i % 3;
        const int p = (i / 3) % 2;
        const TimeSeries series = testsup::random_series(n, split_seed(202, i));
        FitOptions opts;
        opts.seed = split_seed(303, i);

        const FitReport em = fit_em(series, K, p, 1, opts);
        if (!trace_nondecreasing(em.loglik_trace))
            return fail("rhlp trace decreased on instance " + std::to_string(i));
        const HmrmFitReport bw = fit_baum_welch(series, K, p, opts);
        if (!trace_nondecreasing(bw.loglik_trace))
            return fail("hmrm trace decreased on instance " + std::to_string(i));
    }
    return pass("200 instances (n in [30,100], K in 1..3), both fitters monotone");
}

Outcome dp_exactness() {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        Rng meta(split_seed(404, i));
        const int K = 1 + i % 3;
        const int p = (i / 3) % 2;
        const int min_n = K * (p + 2);
        const int n = std::max(min_n, 10 + meta.uniform_int(0, 4));  // n <= 14
        const TimeSeries series = testsup::random_series(n, split_seed(505, i));

        const PiecewiseModel model = fit_dp(series, K, p);
        const double oracle = oracles::brute_force_J(series, K, p, p + 2);
        worst = std::max(worst, std::abs(model.cost - oracle));
        if (std::abs(model.cost - oracle) >= 1e-8)
            return fail("instance " + std::to_string(i) + ": |J - oracle| = " +
                        fmt(std::abs(model.cost - oracle)));
    }
    return pass("50 instances vs exhaustive enumeration, worst gap " + fmt(worst));
}

Outcome hmm_oracle() {
    double worst_ll = 0.0, worst_tau = 0.0;
    for (int i = 0; i < 50; ++i) {
        Rng meta(split_seed(606, i));
        const int K = 1 + i % 3;
        const int n = 5 + meta.uniform_int(0, 3);  // n <= 8
        const HmrmModel model =
            oracles::random_left_right_model(K, 0, split_seed(707, i), i % 2 == 0);
        const TimeSeries series = oracles::hmm_sample(model, n, split_seed(808, i));

        const ForwardBackward fb = forward_backward(model, series);
        Eigen::MatrixXd tau_oracle;
        double ll_oracle;
        oracles::brute_force_posteriors(model, series, tau_oracle, ll_oracle);

        worst_ll = std::max(worst_ll, std::abs(fb.loglik - ll_oracle));
        worst_tau = std::max(worst_tau, (fb.tau - tau_oracle).cwiseAbs().maxCoeff());
        if (worst_ll >= 1e-8 || worst_tau >= 1e-8)
            return fail("instance " + std::to_string(i) + ": loglik gap " + fmt(worst_ll) +
                        ", tau gap " + fmt(worst_tau));
    }
    return pass("50 instances vs K^n enumeration, worst gaps loglik " + fmt(worst_ll) +
                ", tau " + fmt(worst_tau));
}

Outcome irls_gradient() {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        Rng rng(split_seed(909, i));
        const int K = 2 + i % 3;
        const int q = i % 3;
        const int n = 20 + rng.uniform_int(0, 40);
        const Eigen::VectorXd t = linspace(0, 5, n);
        Eigen::MatrixXd tau(n, K);
        for (int r = 0; r < n; ++r) {
            Eigen::ArrayXd row(K);
            for (int k = 0; k < K; ++k) row[k] = rng.normal();
            tau.row(r) = (row - log_sum_exp(row)).exp();
        }
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(K, q + 1);
        for (int k = 0; k < K - 1; ++k)
            for (int j = 0; j <= q; ++j) w(k, j) = rng.normal();

        const Eigen::MatrixXd v = build_basis(t, q);
        const Eigen::MatrixXd grad = q1_gradient(tau, v, w);
        const double h = 1e-5;
        for (int k = 0; k < K - 1; ++k) {
            for (int j = 0; j <= q; ++j) {
                Eigen::MatrixXd wp = w, wm = w;
                wp(k, j) += h;
                wm(k, j) -= h;
                const double fd = (q1_value(tau, v, wp) - q1_value(tau, v, wm)) / (2 * h);
                const double rel = std::abs(grad(k, j) - fd) /
                                   std::max({1.0, std::abs(fd), std::abs(grad(k, j))});
                worst = std::max(worst, rel);
                if (rel >= 1e-4)
                    return fail("instance " + std::to_string(i) + " entry (" +
                                std::to_string(k) + "," + std::to_string(j) +
                                "): relative gap " + fmt(rel));
            }
        }
    }
    return pass("100 random (tau, w, q<=2) instances, worst relative gap " + fmt(worst));
}

// shared benchmark state for criteria 5-8 and 11
struct BenchRuns {
    fs::path dir;
    ExperimentSpec smoothness, sample_size, noise;
    BenchResult smoothness_result, sample_size_result, noise_result;
};

BenchRuns run_benchmarks() {
    BenchRuns runs;
    runs.dir = fs::temp_directory_path() / "tsreg_acceptance";
    fs::remove_all(runs.dir);
    fs::create_directories(runs.dir);

    runs.smoothness.kind = ExperimentSpec::Kind::Smoothness;
    runs.smoothness.situation = 1;
    runs.smoothness.levels = {1, 2, 3, 7, 8, 9, 10};
    runs.smoothness.n = 300;
    runs.smoothness.replicates = 20;
    runs.smoothness.seed = 0;

    runs.sample_size.kind = ExperimentSpec::Kind::SampleSize;
    runs.sample_size.situation = 1;
    runs.sample_size.n_values = {100, 1000};
    runs.sample_size.level = 6;
    runs.sample_size.sigma = Eigen::VectorXd(3);
    runs.sample_size.sigma << 1.0, 1.25, 0.75;
    runs.sample_size.replicates = 20;
    runs.sample_size.seed = 0;

    runs.noise.kind = ExperimentSpec::Kind::Noise;
    runs.noise.situation = 1;
    runs.noise.sigma_values = {3.0, 4.0, 5.0};
    runs.noise.level = 6;
    runs.noise.n = 500;
    runs.noise.replicates = 20;
    runs.noise.seed = 0;

    runs.smoothness_result = run_experiment(runs.smoothness);
    emit_report(runs.smoothness_result, (runs.dir / "run_a").string());
    runs.sample_size_result = run_experiment(runs.sample_size);
    emit_report(runs.sample_size_result, (runs.dir / "run_a").string());
    runs.noise_result = run_experiment(runs.noise);
    emit_report(runs.noise_result, (runs.dir / "run_a").string());
    return runs;
}

Outcome abrupt_regime(const BenchRuns& runs) {
    std::ostringstream detail;
    bool ok = true;
    for (int level : {1, 2, 3}) {
        for (const char* model : {"rhlp", "pwr", "hmrm"}) {
            const double m = cell_of(runs.smoothness_result, level, model).mean_misclass;
            if (m >= 0.05) {
                ok = false;
                detail << " " << model << "@" << level << "=" << fmt(m);
            }
        }
    }
    if (!ok) return fail("mean misclassification >= 5%:" + detail.str());
    double worst = 0.0;
    for (int level : {1, 2, 3})
        for (const char* model : {"rhlp", "pwr", "hmrm"})
            worst = std::max(worst,
                             cell_of(runs.smoothness_result, level, model).mean_misclass);
    return pass("levels 1-3, all models mean misclassification <= " + fmt(worst) +
                " < 0.05 (20 replicates, n=300, sigma=1)");
}

Outcome smooth_regime(const BenchRuns& runs) {
    std::ostringstream detail;
    bool ok = true;
    for (int level : {7, 8, 9, 10}) {
        const CellStats& r = cell_of(runs.smoothness_result, level, "rhlp");
        const CellStats& p = cell_of(runs.smoothness_result, level, "pwr");
        const CellStats& h = cell_of(runs.smoothness_result, level, "hmrm");
        if (!(r.mean_denoise < p.mean_denoise && r.mean_denoise < h.mean_denoise)) {
            ok = false;
            detail << " denoise@" << level << ": rhlp=" << fmt(r.mean_denoise)
                   << " pwr=" << fmt(p.mean_denoise) << " hmrm=" << fmt(h.mean_denoise);
        }
        if (level >= 8 &&
            !(r.mean_misclass < p.mean_misclass && r.mean_misclass < h.mean_misclass)) {
            ok = false;
            detail << " misclass@" << level << ": rhlp=" << fmt(r.mean_misclass)
                   << " pwr=" << fmt(p.mean_misclass) << " hmrm=" << fmt(h.mean_misclass);
        }
    }
    if (!ok) return fail("ordering violated:" + detail.str());
    const CellStats& r10 = cell_of(runs.smoothness_result, 10, "rhlp");
    const CellStats& p10 = cell_of(runs.smoothness_result, 10, "pwr");
    return pass("levels 7-10: rhlp strictly best on denoising (and misclassification at "
                ">= 8); e.g. level 10 denoise rhlp=" +
                fmt(r10.mean_denoise) + " vs pwr=" + fmt(p10.mean_denoise));
}

Outcome sample_size_trend(const BenchRuns& runs) {
    const double at_100 = cell_of(runs.sample_size_result, 100, "rhlp").mean_misclass;
    const double at_1000 = cell_of(runs.sample_size_result, 1000, "rhlp").mean_misclass;
    if (!(at_1000 < at_100))
        return fail("rhlp mean misclassification n=1000 (" + fmt(at_1000) +
                    ") not below n=100 (" + fmt(at_100) + ")");
    return pass("rhlp mean misclassification falls from " + fmt(at_100) + " (n=100) to " +
                fmt(at_1000) + " (n=1000)");
}

Outcome noise_robustness(const BenchRuns& runs) {
    std::ostringstream detail;
    bool ok = true;
    for (double sigma : {3.0, 4.0, 5.0}) {
        const double r = cell_of(runs.noise_result, sigma, "rhlp").mean_denoise;
        const double p = cell_of(runs.noise_result, sigma, "pwr").mean_denoise;
        const double h = cell_of(runs.noise_result, sigma, "hmrm").mean_denoise;
        if (!(r <= p && r <= h)) {
            ok = false;
            detail << " sigma=" << fmt(sigma) << ": rhlp=" << fmt(r) << " pwr=" << fmt(p)
                   << " hmrm=" << fmt(h);
        }
    }
    if (!ok) return fail("rhlp denoising not best:" + detail.str());
    return pass("n=500, level 6: rhlp mean denoising error <= both competitors at sigma "
                "in {3,4,5}");
}

Outcome bic_parameter_count() {
    for (int K = 1; K <= 5; ++K) {
        for (int p = 0; p <= 3; ++p) {
            for (int q = 0; q <= 2; ++q) {
                // independent symbolic count: free logit rows, coefficients,
                // variances
                const int symbolic = K * (q + 1) - (q + 1) + K * (p + 1) + K;
                if (rhlp_param_count(K, p, q) != symbolic)
                    return fail("nu(" + std::to_string(K) + "," + std::to_string(p) + "," +
                                std::to_string(q) + ") = " +
                                std::to_string(rhlp_param_count(K, p, q)) + " != " +
                                std::to_string(symbolic));
            }
        }
    }
    return pass("K(p+q+3)-(q+1) matches the symbolic count on K=1..5, p=0..3, q=0..2");
}

Outcome classification_pipeline() {
    const RhlpModel base = smoothness_schedule(2, 3);
    RhlpModel class2 = base;
    class2.beta(1, 0) += 8.0;  // shifted middle regime
    RhlpModel mode_a = base, mode_b = base, mode_c = base;
    mode_a.beta(0, 0) += 7.0;
    mode_b.beta(2, 0) += 9.0;
    mode_c.beta(0, 0) -= 7.0;
    mode_c.beta(2, 0) -= 9.0;

    struct Source {
        const RhlpModel* params;
        int label;
    };
    std::vector<Source> sources;
    for (int i = 0; i < 40; ++i) sources.push_back({&base, 0});
    for (int i = 0; i < 40; ++i) sources.push_back({&class2, 1});
    for (int i = 0; i < 13; ++i) {
        sources.push_back({&mode_a, 2});
        sources.push_back({&mode_b, 2});
        sources.push_back({&mode_c, 2});
    }
    // 119 signals: 40 + 40 + 39

    const Eigen::VectorXd t = linspace(0, 5, 300);
    std::vector<FeatureVector> by_class[3];
    for (size_t i = 0; i < sources.size(); ++i) {
        const std::uint64_t seed = split_seed(7000, i);
        const SampledSignal sample = sample_signal(*sources[i].params, t, seed);
        FitOptions opts;
        opts.seed = split_seed(seed, 1);
        opts.n_random_starts = 3;
        opts.max_iter = 1000;
        const FitReport fit = fit_em(sample.series, 3, 2, 1, opts);
        by_class[sources[i].label].push_back(
            {rhlp_features(fit.model), sources[i].label});
    }

    // 84 train / 35 test split, stratified: 28 per class train
    std::vector<FeatureVector> train, test;
    for (int g = 0; g < 3; ++g) {
        for (size_t i = 0; i < by_class[g].size(); ++i)
            (i < 28 ? train : test).push_back(by_class[g][i]);
    }
    if (train.size() != 84 || test.size() != 35)
        return fail("split sizes " + std::to_string(train.size()) + "/" +
                    std::to_string(test.size()));

    MdaOptions opts;
    opts.R_max = 3;
    opts.gmm.seed = 99;
    const MdaClassifier clf = train_mda(train, 3, opts);

    int correct = 0;
    for (const auto& row : test)
        correct += predict_map(clf, row.values).label == row.label ? 1 : 0;
    const double accuracy = static_cast<double>(correct) / test.size();
    std::string rs;
    for (const auto& cls : clf.classes) rs += std::to_string(cls.R);
    if (accuracy < 0.90)
        return fail("test accuracy " + fmt(accuracy) + " < 0.90 (synthetic 3-class, "
                    "84/35 split)");
    return pass("test accuracy " + fmt(accuracy) + " on the synthetic 3-class 84/35 "
                "split (per-class R: " + rs + ")");
}

Outcome determinism(const BenchRuns& runs) {
    const fs::path run_b = runs.dir / "run_b";
    emit_report(run_experiment(runs.smoothness), run_b.string());
    emit_report(run_experiment(runs.sample_size), run_b.string());
    emit_report(run_experiment(runs.noise), run_b.string());

    for (const char* name : {"smoothness.csv", "sample_size.csv", "noise.csv"}) {
        const std::string a = read_text_file((runs.dir / "run_a" / name).string());
        const std::string b = read_text_file((run_b / name).string());
        if (a != b) return fail(std::string(name) + " differs between identical runs");
        if (a.empty()) return fail(std::string(name) + " is empty");
    }
    return pass("all three experiment CSVs byte-identical across repeated runs");
}

}  // namespace

int main() {
    BenchRuns runs;

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"EM monotonicity (rhlp + hmrm, 200 instances)", em_monotonicity},
        {"DP exactness vs exhaustive enumeration", dp_exactness},
        {"HMM forward-backward vs brute force", hmm_oracle},
        {"IRLS gradient vs central finite differences", irls_gradient},
        {"abrupt regime: all models < 5% misclassification",
         [&] { return abrupt_regime(runs); }},
        {"smooth regime: rhlp strictly most accurate",
         [&] { return smooth_regime(runs); }},
        {"sample-size trend: rhlp misclassification falls with n",
         [&] { return sample_size_trend(runs); }},
        {"noise robustness: rhlp denoising best at high sigma",
         [&] { return noise_robustness(runs); }},
        {"BIC parameter count vs symbolic count", bic_parameter_count},
        {"classification pipeline: synthetic 3-class >= 90%", classification_pipeline},
        {"determinism: repeated runs are byte-identical", [&] { return determinism(runs); }},
    };

    std::printf("running shared benchmark experiments (criteria 5-8, 11)...\n");
    const auto bench_start = std::chrono::steady_clock::now();
    runs = run_benchmarks();
    const double bench_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - bench_start)
            .count();
    std::printf("benchmark experiments done in %.1fs\n\n", bench_s);

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = fail(std::string("exception: ") + e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %2zu: %s — %s (%.1fs)\n",
                    outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    outcome.detail.c_str(), secs);
        if (!outcome.pass) ++failures;
    }

    if (failures == 0) {
        std::printf("\nall %zu acceptance criteria passed\n", criteria.size());
        return 0;
    }
    std::printf("\n%d of %zu acceptance criteria FAILED\n", failures, criteria.size());
    return 1;
}

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tsreg/bench.hpp"
#include "tsreg/hmrm.hpp"
#include "tsreg/metrics.hpp"
#include "tsreg/model_io.hpp"
#include "tsreg/piecewise.hpp"
#include "tsreg/rhlp.hpp"

namespace fs = std::filesystem;

namespace {

// CLI11 config reader for JSON files; flags given on the command line
// override file values.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        input >> j;
        return walk(j, "", {});
    }

private:
    static std::vector<CLI::ConfigItem> walk(const nlohmann::json& j, const std::string& name,
                                             std::vector<std::string> prefix) {
        std::vector<CLI::ConfigItem> out;
        if (j.is_object()) {
            if (!name.empty()) prefix.push_back(name);
            for (auto it = j.cbegin(); it != j.cend(); ++it) {
                auto sub = walk(it.value(), it.key(), prefix);
                out.insert(out.end(), sub.begin(), sub.end());
            }
            return out;
        }
        if (name.empty())
            throw CLI::ConversionError("config: top level must be a JSON object");
        CLI::ConfigItem item;
        item.name = name;
        item.parents = std::move(prefix);
        if (j.is_string())
            item.inputs = {j.get<std::string>()};
        else if (j.is_boolean())
            item.inputs = {j.get<bool>() ? "true" : "false"};
        else if (j.is_number())
            item.inputs = {j.dump()};
        else if (j.is_array())
            for (const auto& el : j)
                item.inputs.push_back(el.is_string() ? el.get<std::string>() : el.dump());
        else
            throw CLI::ConversionError("config: cannot convert key '" + name + "'");
        out.push_back(std::move(item));
        return out;
    }
};

Eigen::VectorXd parse_sigma_list(const std::string& text, int K) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            values.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw std::invalid_argument("--sigma: cannot parse '" + field + "'");
        }
    }
    if (values.size() == 1) return Eigen::VectorXd::Constant(K, values[0]);
    if (static_cast<int>(values.size()) == K)
        return Eigen::Map<const Eigen::VectorXd>(values.data(), K);
    throw std::invalid_argument("--sigma: expected 1 or " + std::to_string(K) + " values");
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw tsreg::IoError("cannot create output directory " + dir + ": " + ec.message());
}

void write_truth_csv(const std::string& path, const tsreg::SampledSignal& sample) {
    std::ofstream out(path);
    if (!out) throw tsreg::IoError("cannot open output file: " + path);
    out << "t,true_label,true_mean\n";
    for (Eigen::Index i = 0; i < sample.series.n(); ++i)
        out << tsreg::format_double(sample.series.t[i]) << ',' << sample.labels[i] + 1 << ','
            << tsreg::format_double(sample.mean_curve[i]) << '\n';
    if (!out) throw tsreg::IoError("write failed: " + path);
}

void write_denoised_csv(const std::string& path, const tsreg::TimeSeries& series,
                        const Eigen::VectorXd& x_hat) {
    std::ofstream out(path);
    if (!out) throw tsreg::IoError("cannot open output file: " + path);
    out << "t,x,x_hat\n";
    for (Eigen::Index i = 0; i < series.n(); ++i)
        out << tsreg::format_double(series.t[i]) << ',' << tsreg::format_double(series.x[i])
            << ',' << tsreg::format_double(x_hat[i]) << '\n';
    if (!out) throw tsreg::IoError("write failed: " + path);
}

void write_labels_csv(const std::string& path, const Eigen::VectorXd& t,
                      const Eigen::VectorXi& labels) {
    std::ofstream out(path);
    if (!out) throw tsreg::IoError("cannot open output file: " + path);
    out << "t,z_hat\n";
    for (Eigen::Index i = 0; i < t.size(); ++i)
        out << tsreg::format_double(t[i]) << ',' << labels[i] + 1 << '\n';
    if (!out) throw tsreg::IoError("write failed: " + path);
}

void write_proportions_csv(const std::string& path, const Eigen::VectorXd& t,
                           const Eigen::MatrixXd& pi) {
    std::ofstream out(path);
    if (!out) throw tsreg::IoError("cannot open output file: " + path);
    out << "t";
    for (Eigen::Index k = 0; k < pi.cols(); ++k) out << ",pi_" << k + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        out << tsreg::format_double(t[i]);
        for (Eigen::Index k = 0; k < pi.cols(); ++k)
            out << ',' << tsreg::format_double(pi(i, k));
        out << '\n';
    }
    if (!out) throw tsreg::IoError("write failed: " + path);
}

struct SimulateArgs {
    std::string preset = "situation1";
    int level = 1;
    int n = 300;
    std::string sigma;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
};

int run_simulate(const SimulateArgs& args) {
    const int situation = args.preset == "situation1" ? 1 : 2;
    tsreg::RhlpModel model = tsreg::smoothness_schedule(situation, args.level);
    if (!args.sigma.empty())
        model.sigma2 = parse_sigma_list(args.sigma, model.K).array().square();

    const Eigen::VectorXd t = tsreg::linspace(0.0, 5.0, args.n);
    const tsreg::SampledSignal sample =
        tsreg::sample_signal(model, t, tsreg::split_seed(args.seed, 0));

    ensure_dir(args.output_dir);
    const fs::path dir(args.output_dir);
    tsreg::write_series_csv((dir / "signal.csv").string(), sample.series);
    write_truth_csv((dir / "truth.csv").string(), sample);
    std::cout << "wrote " << (dir / "signal.csv").string() << " and "
              << (dir / "truth.csv").string() << "\n";
    return 0;
}

struct FitArgs {
    std::string model;
    int K = 3;
    int p = 0;
    int q = 1;
    std::string input;
    std::string output_dir = ".";
    int max_iter = 1500;
    double rel_tol = 1e-6;
    int restarts = 5;
    std::uint64_t seed = 0;
    int min_seg_len = -1;
    bool homoskedastic = false;
    bool rescale_time = false;
};

int run_fit(const FitArgs& args) {
    tsreg::TimeSeries series = tsreg::read_series_csv(args.input);
    if (args.rescale_time) series = tsreg::rescaled_to_unit(series);

    tsreg::FitOptions opts;
    opts.max_iter = args.max_iter;
    opts.rel_tol = args.rel_tol;
    opts.n_random_starts = args.restarts;
    opts.seed = args.seed;

    ensure_dir(args.output_dir);
    const fs::path dir(args.output_dir);

    if (args.model == "rhlp") {
        const tsreg::FitReport report = tsreg::fit_em(series, args.K, args.p, args.q, opts);
        const double bic =
            tsreg::bic_score(report.loglik, args.K, args.p, args.q, series.n());
        tsreg::write_text_file((dir / "model.json").string(),
                               tsreg::rhlp_to_json(report.model, report.loglik, bic));
        write_denoised_csv((dir / "denoised.csv").string(), series,
                           tsreg::denoise(report.model, series.t));
        write_labels_csv((dir / "labels.csv").string(), series.t,
                         tsreg::segment(report.model, series.t));
        write_proportions_csv((dir / "proportions.csv").string(), series.t,
                              tsreg::logistic_proportions(report.model.w, series.t));
        std::cout << "rhlp fit: loglik " << report.loglik << ", BIC " << bic << ", "
                  << report.iterations << " iterations"
                  << (report.converged ? "" : " (max_iter reached)") << "\n";
    } else if (args.model == "pwr") {
        tsreg::PiecewiseOptions popts;
        popts.min_seg_len = args.min_seg_len;
        popts.homoskedastic = args.homoskedastic;
        const tsreg::PiecewiseModel model = tsreg::fit_dp(series, args.K, args.p, popts);
        const tsreg::Reconstruction rec = tsreg::reconstruct(model, series.t);
        tsreg::write_text_file((dir / "model.json").string(), tsreg::piecewise_to_json(model));
        write_denoised_csv((dir / "denoised.csv").string(), series, rec.denoised);
        write_labels_csv((dir / "labels.csv").string(), series.t, rec.labels);
        std::cout << "pwr fit: criterion " << model.cost << "\n";
    } else {
        const tsreg::HmrmFitReport report =
            tsreg::fit_baum_welch(series, args.K, args.p, opts);
        tsreg::write_text_file((dir / "model.json").string(),
                               tsreg::hmrm_to_json(report.model, report.loglik));
        write_denoised_csv((dir / "denoised.csv").string(), series,
                           tsreg::denoise_filtered(report.model, series));
        write_labels_csv((dir / "labels.csv").string(), series.t,
                         tsreg::segment_map(report.model, series));
        std::cout << "hmrm fit: loglik " << report.loglik << ", " << report.iterations
                  << " iterations" << (report.converged ? "" : " (max_iter reached)") << "\n";
    }
    return 0;
}

struct BenchmarkArgs {
    std::string spec_path;
    std::string output_dir = ".";
    int jobs = 0;
    int replicates = 0;
    std::int64_t seed = -1;
};

int run_benchmark(const BenchmarkArgs& args) {
    tsreg::ExperimentSpec spec = tsreg::read_experiment_spec(args.spec_path);
    if (args.jobs > 0) spec.jobs = args.jobs;
    if (args.replicates > 0) spec.replicates = args.replicates;
    if (args.seed >= 0) spec.seed = static_cast<std::uint64_t>(args.seed);

    const tsreg::BenchResult result = tsreg::run_experiment(spec);
    tsreg::emit_report(result, args.output_dir);
    std::cout << "wrote " << (fs::path(args.output_dir) / (spec.name() + ".csv")).string()
              << "\n";
    return 0;
}

struct ClassifyTrainArgs {
    std::string input;
    std::string output;
    int r_max = 3;
    bool no_standardize = false;
    bool diagonal = false;
    std::uint64_t seed = 0;
};

int run_classify_train(const ClassifyTrainArgs& args) {
    const auto rows = tsreg::read_features_jsonl(args.input);
    if (rows.empty()) throw tsreg::IoError(args.input + ": no feature rows");
    int G = 0;
    for (const auto& row : rows) {
        if (row.label < 0)
            throw std::invalid_argument("training rows must all carry a label");
        G = std::max(G, row.label + 1);
    }
    tsreg::MdaOptions opts;
    opts.R_max = args.r_max;
    opts.standardize = !args.no_standardize;
    opts.gmm.diagonal = args.diagonal;
    opts.gmm.seed = args.seed;
    const tsreg::MdaClassifier clf = tsreg::train_mda(rows, G, opts);
    tsreg::write_text_file(args.output, tsreg::classifier_to_json(clf));
    std::cout << "trained " << G << "-class model on " << rows.size() << " rows -> "
              << args.output << "\n";
    return 0;
}

struct ClassifyPredictArgs {
    std::string classifier;
    std::string input;
    std::string output;
};

int run_classify_predict(const ClassifyPredictArgs& args) {
    const tsreg::MdaClassifier clf =
        tsreg::classifier_from_json(tsreg::read_text_file(args.classifier));
    const auto rows = tsreg::read_features_jsonl(args.input);

    std::ofstream out(args.output);
    if (!out) throw tsreg::IoError("cannot open output file: " + args.output);
    out << "id,class";
    for (int g = 1; g <= clf.G; ++g) out << ",posterior_" << g;
    out << '\n';
    for (size_t i = 0; i < rows.size(); ++i) {
        const tsreg::Prediction pred = tsreg::predict_map(clf, rows[i].values);
        out << i + 1 << ',' << pred.label + 1;
        for (int g = 0; g < clf.G; ++g) out << ',' << tsreg::format_double(pred.posterior[g]);
        out << '\n';
    }
    if (!out) throw tsreg::IoError("write failed: " + args.output);
    std::cout << "wrote " << args.output << " (" << rows.size() << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time series modeling with regime changes: three estimators, a "
                 "simulation benchmark and a parameter-space classifier"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --config appear after the subcommand name
    app.allow_config_extras(false);  // unknown config keys are errors
    app.set_config("--config", "", "JSON config file mirroring the flags");
    app.config_formatter(std::make_shared<JsonConfig>());

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "sample a synthetic signal from a preset");
    simulate->add_option("--preset", sim.preset, "generating preset")
        ->check(CLI::IsMember({"situation1", "situation2"}));
    simulate->add_option("--level", sim.level, "transition smoothness level 1..10");
    simulate->add_option("--n", sim.n, "number of samples")->check(CLI::PositiveNumber);
    simulate->add_option("--sigma", sim.sigma, "noise std dev (scalar or comma list per component)");
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--output-dir", sim.output_dir, "output directory");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a model to a t,x CSV");
    fit_cmd->add_option("--model", fit.model, "estimator")
        ->check(CLI::IsMember({"rhlp", "pwr", "hmrm"}))
        ->required();
    fit_cmd->add_option("--k", fit.K, "number of components")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--p", fit.p, "regression degree")->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--q", fit.q, "logit degree (rhlp)")->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--input", fit.input, "input CSV with header t,x")->required();
    fit_cmd->add_option("--output-dir", fit.output_dir, "output directory");
    fit_cmd->add_option("--max-iter", fit.max_iter, "EM iteration cap");
    fit_cmd->add_option("--rel-tol", fit.rel_tol, "relative log-likelihood tolerance");
    fit_cmd->add_option("--restarts", fit.restarts, "random initializations");
    fit_cmd->add_option("--seed", fit.seed, "RNG seed");
    fit_cmd->add_option("--min-seg-len", fit.min_seg_len, "minimum segment length (pwr)");
    fit_cmd->add_flag("--homoskedastic", fit.homoskedastic, "shared noise variance (pwr)");
    fit_cmd->add_flag("--rescale-time", fit.rescale_time, "map t onto [0,1] before fitting");

    BenchmarkArgs bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "run an experiment spec");
    bench_cmd->add_option("--spec", bench.spec_path, "experiment spec JSON")->required();
    bench_cmd->add_option("--output-dir", bench.output_dir, "output directory");
    bench_cmd->add_option("--jobs", bench.jobs, "parallel jobs (overrides spec)");
    bench_cmd->add_option("--replicates", bench.replicates, "replicates (overrides spec)");
    bench_cmd->add_option("--seed", bench.seed, "seed (overrides spec)");

    auto* classify = app.add_subcommand("classify", "mixture-discriminant classification");
    classify->require_subcommand(1);

    ClassifyTrainArgs ctrain;
    auto* train_cmd = classify->add_subcommand("train", "train per-class Gaussian mixtures");
    train_cmd->add_option("--input", ctrain.input, "labeled features JSONL")->required();
    train_cmd->add_option("--output", ctrain.output, "classifier JSON path")->required();
    train_cmd->add_option("--r-max", ctrain.r_max, "largest mixture size tried per class");
    train_cmd->add_flag("--no-standardize", ctrain.no_standardize,
                        "skip per-dimension z-scoring");
    train_cmd->add_flag("--diagonal", ctrain.diagonal, "diagonal covariances");
    train_cmd->add_option("--seed", ctrain.seed, "RNG seed");

    ClassifyPredictArgs cpred;
    auto* predict_cmd = classify->add_subcommand("predict", "classify feature rows");
    predict_cmd->add_option("--classifier", cpred.classifier, "trained classifier JSON")
        ->required();
    predict_cmd->add_option("--input", cpred.input, "features JSONL")->required();
    predict_cmd->add_option("--output", cpred.output, "predictions CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors
    }

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (fit_cmd->parsed()) return run_fit(fit);
        if (bench_cmd->parsed()) return run_benchmark(bench);
        if (train_cmd->parsed()) return run_classify_train(ctrain);
        if (predict_cmd->parsed()) return run_classify_predict(cpred);
    } catch (const tsreg::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include "tsreg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "tsreg/hmrm.hpp"
#include "tsreg/metrics.hpp"
#include "tsreg/model_io.hpp"
#include "tsreg/piecewise.hpp"

namespace tsreg {

using nlohmann::json;

SituationParams situation_params(int situation) {
    SituationParams par;
    par.K = 3;
    if (situation == 1) {
        par.p = 0;
        par.beta.resize(3, 1);
        par.beta << 0.0, 10.0, 5.0;
        par.w.resize(3, 2);
        par.w << 3341.33, -1706.96, 2436.97, -810.07, 0.0, 0.0;
        par.sigma = Eigen::VectorXd::Constant(3, 1.0);
    } else if (situation == 2) {
        par.p = 2;
        par.beta.resize(3, 3);
        par.beta << -0.64, 14.4, -6.0, -21.25, 25.0, -5.0, -78.64, 45.6, -6.0;
        par.w.resize(3, 2);
        par.w << 3767.58, -1510.19, 2468.99, -742.55, 0.0, 0.0;
        par.sigma = Eigen::VectorXd::Constant(3, 0.5);
    } else {
        throw std::invalid_argument("situation_params: situation must be 1 or 2");
    }
    return par;
}

const std::vector<double>& smoothness_divisors(int situation) {
    static const std::vector<double> sit1 = {1, 2, 5, 10, 20, 40, 50, 80, 100, 125};
    static const std::vector<double> sit2 = {1, 10, 50, 100, 150, 200, 250, 275, 300, 400};
    if (situation == 1) return sit1;
    if (situation == 2) return sit2;
    throw std::invalid_argument("smoothness_divisors: situation must be 1 or 2");
}

RhlpModel smoothness_schedule(int situation, int level) {
    const auto& divisors = smoothness_divisors(situation);
    if (level < 1 || level > static_cast<int>(divisors.size()))
        throw std::invalid_argument("smoothness_schedule: level must be in 1.." +
                                    std::to_string(divisors.size()));
    const SituationParams par = situation_params(situation);

    RhlpModel model;
    model.K = par.K;
    model.p = par.p;
    model.q = 1;
    // scaling the whole row keeps w_k0 / w_k1 and with it the transition
    // instants; only the steepness changes
    model.w = par.w / divisors[level - 1];
    model.beta = par.beta;
    model.sigma2 = par.sigma.array().square();
    return model;
}

std::string ExperimentSpec::name() const {
    switch (kind) {
        case Kind::Smoothness: return "smoothness";
        case Kind::SampleSize: return "sample_size";
        case Kind::Noise: return "noise";
    }
    throw std::logic_error("ExperimentSpec: bad kind");
}

void ExperimentSpec::validate() const {
    situation_params(situation);
    if (replicates < 1) throw std::invalid_argument("ExperimentSpec: replicates < 1");
    if (jobs < 1) throw std::invalid_argument("ExperimentSpec: jobs < 1");
    switch (kind) {
        case Kind::Smoothness:
            if (levels.empty()) throw std::invalid_argument("ExperimentSpec: empty levels grid");
            for (int lvl : levels) smoothness_schedule(situation, lvl);
            break;
        case Kind::SampleSize:
            if (n_values.empty())
                throw std::invalid_argument("ExperimentSpec: empty n_values grid");
            for (int nv : n_values)
                if (nv < 10) throw std::invalid_argument("ExperimentSpec: n value too small");
            smoothness_schedule(situation, level);
            break;
        case Kind::Noise:
            if (sigma_values.empty())
                throw std::invalid_argument("ExperimentSpec: empty sigma_values grid");
            for (double sv : sigma_values)
                if (!(sv > 0.0)) throw std::invalid_argument("ExperimentSpec: sigma value <= 0");
            smoothness_schedule(situation, level);
            break;
    }
    if (sigma.size() != 0 && sigma.size() != situation_params(situation).K)
        throw std::invalid_argument("ExperimentSpec: sigma override must have K entries");
}

namespace {

ExperimentSpec::Kind kind_from_string(const std::string& s) {
    if (s == "smoothness") return ExperimentSpec::Kind::Smoothness;
    if (s == "sample_size") return ExperimentSpec::Kind::SampleSize;
    if (s == "noise") return ExperimentSpec::Kind::Noise;
    throw std::invalid_argument("experiment must be smoothness, sample_size or noise, got '" +
                                s + "'");
}

const char* kModelNames[3] = {"rhlp", "pwr", "hmrm"};

struct Cell {
    double grid_value;
    int n;
    Eigen::VectorXd sigma;  // per-component std dev
    int level;
};

std::vector<Cell> make_cells(const ExperimentSpec& spec) {
    const SituationParams par = situation_params(spec.situation);
    Eigen::VectorXd base_sigma = spec.sigma.size() ? spec.sigma : par.sigma;
    std::vector<Cell> cells;
    switch (spec.kind) {
        case ExperimentSpec::Kind::Smoothness:
            for (int lvl : spec.levels)
                cells.push_back({static_cast<double>(lvl), spec.n, base_sigma, lvl});
            break;
        case ExperimentSpec::Kind::SampleSize:
            for (int nv : spec.n_values)
                cells.push_back({static_cast<double>(nv), nv, base_sigma, spec.level});
            break;
        case ExperimentSpec::Kind::Noise:
            for (double sv : spec.sigma_values)
                cells.push_back({sv, spec.n,
                                 Eigen::VectorXd::Constant(par.K, sv), spec.level});
            break;
    }
    return cells;
}

}  // namespace

BenchResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const std::vector<Cell> cells = make_cells(spec);
    const SituationParams par = situation_params(spec.situation);

    BenchResult result;
    result.spec = spec;
    result.records.resize(cells.size() * spec.replicates * 3);

    auto run_job = [&](size_t job) {
        const size_t cell_idx = job / spec.replicates;
        const int rep = static_cast<int>(job % spec.replicates);
        const Cell& cell = cells[cell_idx];
        const std::uint64_t job_seed = split_seed(spec.seed, job);

        RhlpModel truth = smoothness_schedule(spec.situation, cell.level);
        truth.sigma2 = cell.sigma.array().square();
        const Eigen::VectorXd t = linspace(0.0, 5.0, cell.n);
        const SampledSignal sample = sample_signal(truth, t, split_seed(job_seed, 0));
        // segmentation quality is scored against the generating model's own
        // partition, the same reference the denoising criterion uses for the
        // curve; realized per-point draws near smooth transitions are noise,
        // not truth
        const Eigen::VectorXi truth_labels = segment(truth, t);

        for (int m = 0; m < 3; ++m) {
            ReplicateRecord& rec = result.records[job * 3 + m];
            rec.grid_value = cell.grid_value;
            rec.model = kModelNames[m];
            rec.replicate = rep;
            try {
                Eigen::VectorXd denoised;
                Eigen::VectorXi labels;
                if (m == 0) {
                    FitOptions opts = spec.fit;
                    opts.seed = split_seed(job_seed, 1);
                    const FitReport fit = fit_em(sample.series, par.K, par.p, 1, opts);
                    denoised = denoise(fit.model, t);
                    labels = segment(fit.model, t);
                } else if (m == 1) {
                    const PiecewiseModel fit = fit_dp(sample.series, par.K, par.p);
                    const Reconstruction rec2 = reconstruct(fit, t);
                    denoised = rec2.denoised;
                    labels = rec2.labels;
                } else {
                    FitOptions opts = spec.fit;
                    opts.seed = split_seed(job_seed, 2);
                    const HmrmFitReport fit = fit_baum_welch(sample.series, par.K, par.p, opts);
                    denoised = denoise_filtered(fit.model, sample.series);
                    labels = segment_map(fit.model, sample.series);
                }
                rec.denoising_error = denoising_error(sample.mean_curve, denoised);
                rec.misclassification = misclassification_rate(truth_labels, labels, par.K);
                rec.ok = true;
            } catch (const std::exception& e) {
                rec.ok = false;
                rec.message = e.what();
            }
        }
    };

    const size_t n_jobs = cells.size() * spec.replicates;
    if (spec.jobs <= 1) {
        for (size_t job = 0; job < n_jobs; ++job) run_job(job);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&]() {
            for (size_t job = next.fetch_add(1); job < n_jobs; job = next.fetch_add(1))
                run_job(job);
        };
        std::vector<std::thread> pool;
        const int n_threads = std::min<int>(spec.jobs, static_cast<int>(n_jobs));
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // ordered reduction per (cell, model)
    for (size_t c = 0; c < cells.size(); ++c) {
        for (int m = 0; m < 3; ++m) {
            CellStats stats;
            stats.grid_value = cells[c].grid_value;
            stats.model = kModelNames[m];
            std::vector<double> de, mc;
            for (int rep = 0; rep < spec.replicates; ++rep) {
                const ReplicateRecord& rec =
                    result.records[(c * spec.replicates + rep) * 3 + m];
                if (!rec.ok) {
                    std::cerr << "run_experiment: " << spec.name() << " grid "
                              << rec.grid_value << " " << rec.model << " replicate " << rep
                              << " failed: " << rec.message << "\n";
                    continue;
                }
                de.push_back(rec.denoising_error);
                mc.push_back(rec.misclassification);
            }
            stats.successes = static_cast<int>(de.size());
            auto mean = [](const std::vector<double>& v) {
                double s = 0.0;
                for (double x : v) s += x;
                return v.empty() ? 0.0 : s / static_cast<double>(v.size());
            };
            auto stdev = [&mean](const std::vector<double>& v) {
                if (v.size() < 2) return 0.0;
                const double mu = mean(v);
                double s = 0.0;
                for (double x : v) s += (x - mu) * (x - mu);
                return std::sqrt(s / static_cast<double>(v.size() - 1));
            };
            stats.mean_denoise = mean(de);
            stats.std_denoise = stdev(de);
            stats.mean_misclass = mean(mc);
            stats.std_misclass = stdev(mc);
            result.cells.push_back(stats);
        }
    }
    return result;
}

namespace {

json spec_to_json(const ExperimentSpec& spec) {
    json j;
    j["experiment"] = spec.name();
    j["situation"] = spec.situation;
    j["replicates"] = spec.replicates;
    j["seed"] = spec.seed;
    j["jobs"] = spec.jobs;
    j["n"] = spec.n;
    j["level"] = spec.level;
    if (spec.kind == ExperimentSpec::Kind::Smoothness) j["levels"] = spec.levels;
    if (spec.kind == ExperimentSpec::Kind::SampleSize) j["n_values"] = spec.n_values;
    if (spec.kind == ExperimentSpec::Kind::Noise) j["sigma_values"] = spec.sigma_values;
    if (spec.sigma.size()) {
        std::vector<double> s(spec.sigma.data(), spec.sigma.data() + spec.sigma.size());
        j["sigma"] = s;
    }
    j["fit"] = {{"max_iter", spec.fit.max_iter},
                {"rel_tol", spec.fit.rel_tol},
                {"n_random_starts", spec.fit.n_random_starts}};
    return j;
}

}  // namespace

ExperimentSpec read_experiment_spec(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }

    static const std::vector<std::string> known = {
        "experiment", "situation", "levels", "n_values", "sigma_values", "level",
        "n", "sigma", "replicates", "seed", "jobs", "fit"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw IoError(path + ": unknown key '" + it.key() + "'");
    }

    ExperimentSpec spec;
    try {
        spec.kind = kind_from_string(j.at("experiment").get<std::string>());
        spec.situation = j.value("situation", 1);
        if (j.contains("levels")) spec.levels = j["levels"].get<std::vector<int>>();
        if (j.contains("n_values")) spec.n_values = j["n_values"].get<std::vector<int>>();
        if (j.contains("sigma_values"))
            spec.sigma_values = j["sigma_values"].get<std::vector<double>>();
        spec.level = j.value("level", 6);
        spec.n = j.value("n", 300);
        if (j.contains("sigma")) {
            const auto s = j["sigma"].get<std::vector<double>>();
            spec.sigma = Eigen::Map<const Eigen::VectorXd>(s.data(), s.size());
        }
        spec.replicates = j.value("replicates", 20);
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.jobs = j.value("jobs", 1);
        if (j.contains("fit")) {
            static const std::vector<std::string> fit_known = {"max_iter", "rel_tol",
                                                               "n_random_starts"};
            for (auto it = j["fit"].begin(); it != j["fit"].end(); ++it)
                if (std::find(fit_known.begin(), fit_known.end(), it.key()) == fit_known.end())
                    throw IoError(path + ": unknown key 'fit." + it.key() + "'");
            spec.fit.max_iter = j["fit"].value("max_iter", 1500);
            spec.fit.rel_tol = j["fit"].value("rel_tol", 1e-6);
            spec.fit.n_random_starts = j["fit"].value("n_random_starts", 5);
        }
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw IoError(path + ": " + e.what());
    }
    return spec;
}

void write_experiment_spec(const std::string& path, const ExperimentSpec& spec) {
    write_text_file(path, spec_to_json(spec).dump(2) + "\n");
}

void emit_report(const BenchResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());

    const std::string base = (fs::path(dir) / result.spec.name()).string();
    {
        std::ofstream out(base + ".csv");
        if (!out) throw IoError("cannot open output file: " + base + ".csv");
        out << "grid_value,model,mean_denoising_error,std_denoising_error,"
               "mean_misclass,std_misclass\n";
        for (const auto& cell : result.cells) {
            out << format_double(cell.grid_value) << ',' << cell.model << ','
                << format_double(cell.mean_denoise) << ',' << format_double(cell.std_denoise)
                << ',' << format_double(cell.mean_misclass) << ','
                << format_double(cell.std_misclass) << '\n';
        }
        if (!out) throw IoError("write failed: " + base + ".csv");
    }

    json summary;
    summary["spec"] = spec_to_json(result.spec);
    summary["records"] = json::array();
    for (const auto& rec : result.records) {
        json r = {{"grid_value", rec.grid_value},
                  {"model", rec.model},
                  {"replicate", rec.replicate},
                  {"ok", rec.ok}};
        if (rec.ok) {
            r["denoising_error"] = rec.denoising_error;
            r["misclassification"] = rec.misclassification;
        } else {
            r["message"] = rec.message;
        }
        summary["records"].push_back(std::move(r));
    }
    write_text_file(base + "_summary.json", summary.dump(2) + "\n");
}

std::vector<CellStats> read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");

    std::vector<CellStats> cells;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            const size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 6)
            throw IoError(path + ":" + std::to_string(line_no) + ": expected 6 fields");
        CellStats c;
        c.grid_value = std::stod(fields[0]);
        c.model = fields[1];
        c.mean_denoise = std::stod(fields[2]);
        c.std_denoise = std::stod(fields[3]);
        c.mean_misclass = std::stod(fields[4]);
        c.std_misclass = std::stod(fields[5]);
        cells.push_back(std::move(c));
    }
    return cells;
}

}  // namespace tsreg

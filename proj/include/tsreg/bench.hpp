#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tsreg/core.hpp"
#include "tsreg/rhlp.hpp"

namespace tsreg {

// Benchmark scenario presets: two generating configurations, three constant
// regimes (situation 1, p = 0) or three quadratic regimes (situation 2,
// p = 2), both gated by sharp logits over t in [0, 5].
struct SituationParams {
    int K = 3;
    int p = 0;
    Eigen::MatrixXd beta;
    Eigen::MatrixXd w;
    Eigen::VectorXd sigma;  // per-component noise std dev
};

SituationParams situation_params(int situation);  // 1 or 2

// Generating model at a smoothness level in 1..10. Level 1 is the preset
// itself; higher levels divide both entries of each free w row by a fixed
// divisor, flattening the transitions while keeping their instants (the
// ratio w_k0 / w_k1 is preserved).
RhlpModel smoothness_schedule(int situation, int level);
const std::vector<double>& smoothness_divisors(int situation);

struct ExperimentSpec {
    enum class Kind { Smoothness, SampleSize, Noise };

    Kind kind = Kind::Smoothness;
    int situation = 1;
    std::vector<int> levels;           // smoothness grid
    std::vector<int> n_values;         // sample-size grid
    std::vector<double> sigma_values;  // noise grid (uniform across components)
    int level = 6;        // fixed level for the sample-size and noise experiments
    int n = 300;          // fixed n for the smoothness and noise-free grids
    Eigen::VectorXd sigma;  // per-component std dev override; empty = preset default
    int replicates = 20;
    std::uint64_t seed = 0;
    int jobs = 1;
    FitOptions fit;

    std::string name() const;  // "smoothness" | "sample_size" | "noise"
    void validate() const;
};

ExperimentSpec read_experiment_spec(const std::string& path);  // JSON, unknown keys rejected
void write_experiment_spec(const std::string& path, const ExperimentSpec& spec);

struct ReplicateRecord {
    double grid_value = 0.0;
    std::string model;  // "rhlp" | "pwr" | "hmrm"
    int replicate = 0;
    double denoising_error = 0.0;
    double misclassification = 0.0;
    bool ok = false;
    std::string message;
};

struct CellStats {
    double grid_value = 0.0;
    std::string model;
    double mean_denoise = 0.0, std_denoise = 0.0;
    double mean_misclass = 0.0, std_misclass = 0.0;
    int successes = 0;
};

struct BenchResult {
    ExperimentSpec spec;
    std::vector<ReplicateRecord> records;  // cell-major, replicate-major, model order fixed
    std::vector<CellStats> cells;
};

// Runs every (grid point, replicate): sample a signal from the generating
// model, fit all three estimators, score both criteria. Deterministic for a
// given spec and seed, independent of the job count.
BenchResult run_experiment(const ExperimentSpec& spec);

// <name>.csv with one row per (grid point, model) plus <name>_summary.json
// carrying the per-replicate records.
void emit_report(const BenchResult& result, const std::string& dir);

std::vector<CellStats> read_report_csv(const std::string& path);

}  // namespace tsreg

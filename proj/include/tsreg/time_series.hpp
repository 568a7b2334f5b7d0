#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tsreg {

// Thrown on file-system and parse problems; carries path / line context.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A sampled signal: instants t (strictly increasing) and observations x.
struct TimeSeries {
    Eigen::VectorXd t;
    Eigen::VectorXd x;

    Eigen::Index n() const { return t.size(); }
    void validate() const;  // throws std::invalid_argument on bad shape/content
};

// n instants evenly spaced over [a, b], endpoints included.
Eigen::VectorXd linspace(double a, double b, Eigen::Index n);

// Affine map of t onto [0, 1]. Off by default throughout; for callers whose
// raw time scale is unsuitable for direct fitting.
TimeSeries rescaled_to_unit(const TimeSeries& series);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// CSV with header "t,x", one row per sample.
TimeSeries read_series_csv(const std::string& path);
void write_series_csv(const std::string& path, const TimeSeries& series);

}  // namespace tsreg

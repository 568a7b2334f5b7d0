#include "tsreg/time_series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace tsreg {

void TimeSeries::validate() const {
    if (t.size() != x.size())
        throw std::invalid_argument("TimeSeries: t and x lengths differ");
    if (t.size() < 2)
        throw std::invalid_argument("TimeSeries: need at least 2 samples");
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(x[i]))
            throw std::invalid_argument("TimeSeries: non-finite value at row " +
                                        std::to_string(i));
        if (i > 0 && t[i] <= t[i - 1])
            throw std::invalid_argument("TimeSeries: t not strictly increasing at row " +
                                        std::to_string(i));
    }
}

Eigen::VectorXd linspace(double a, double b, Eigen::Index n) {
    if (n < 2) throw std::invalid_argument("linspace: need n >= 2");
    Eigen::VectorXd out(n);
    const double step = (b - a) / static_cast<double>(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = a + step * static_cast<double>(i);
    out[n - 1] = b;
    return out;
}

TimeSeries rescaled_to_unit(const TimeSeries& series) {
    series.validate();
    const double lo = series.t[0];
    const double span = series.t[series.n() - 1] - lo;
    TimeSeries out;
    out.t = (series.t.array() - lo) / span;
    out.x = series.x;
    return out;
}

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& field, const std::string& path, size_t line_no) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw IoError(path + ":" + std::to_string(line_no) + ": cannot parse number '" +
                      field + "'");
    return v;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

TimeSeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input file: " + path);

    std::string line;
    size_t line_no = 1;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    if (strip_cr(line) != "t,x")
        throw IoError(path + ":1: expected header 't,x', got '" + line + "'");

    std::vector<double> ts, xs;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError(path + ":" + std::to_string(line_no) + ": expected 't,x' row");
        ts.push_back(parse_double(line.substr(0, comma), path, line_no));
        xs.push_back(parse_double(line.substr(comma + 1), path, line_no));
    }

    TimeSeries series;
    series.t = Eigen::Map<Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
    series.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    try {
        series.validate();
    } catch (const std::invalid_argument& e) {
        throw IoError(path + ": " + e.what());
    }
    return series;
}

void write_series_csv(const std::string& path, const TimeSeries& series) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file: " + path);
    out << "t,x\n";
    for (Eigen::Index i = 0; i < series.n(); ++i)
        out << format_double(series.t[i]) << ',' << format_double(series.x[i]) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace tsreg

#include "tsreg/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tsreg {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) return {};
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::invalid_argument("matrix_from_json: ragged rows");
        for (size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

json parse_or_throw(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string(what) + ": " + e.what());
    }
}

void expect_model_type(const json& j, const std::string& expected) {
    const std::string got = j.at("model_type").get<std::string>();
    if (got != expected)
        throw IoError("expected model_type '" + expected + "', got '" + got + "'");
}

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

std::string rhlp_to_json(const RhlpModel& model, double loglik, double bic) {
    json j;
    j["model_type"] = "rhlp";
    j["K"] = model.K;
    j["p"] = model.p;
    j["q"] = model.q;
    j["w"] = matrix_to_json(model.w);
    j["beta"] = matrix_to_json(model.beta);
    j["sigma2"] = vector_to_json(model.sigma2);
    j["loglik"] = loglik;
    j["bic"] = bic;
    return j.dump(2) + "\n";
}

RhlpModel rhlp_from_json(const std::string& text, double* loglik, double* bic) {
    const json j = parse_or_throw(text, "rhlp model");
    expect_model_type(j, "rhlp");
    RhlpModel model;
    try {
        model.K = j.at("K").get<int>();
        model.p = j.at("p").get<int>();
        model.q = j.at("q").get<int>();
        model.w = matrix_from_json(j.at("w"));
        model.beta = matrix_from_json(j.at("beta"));
        model.sigma2 = vector_from_json(j.at("sigma2"));
        if (loglik) *loglik = j.at("loglik").get<double>();
        if (bic) *bic = j.at("bic").get<double>();
    } catch (const json::exception& e) {
        throw IoError(std::string("rhlp model: ") + e.what());
    }
    model.validate();
    return model;
}

std::string piecewise_to_json(const PiecewiseModel& model) {
    json j;
    j["model_type"] = "pwr";
    j["K"] = model.K;
    j["p"] = model.p;
    j["gamma"] = model.gamma;
    j["beta"] = matrix_to_json(model.beta);
    j["sigma2"] = vector_to_json(model.sigma2);
    j["cost"] = model.cost;
    return j.dump(2) + "\n";
}

PiecewiseModel piecewise_from_json(const std::string& text) {
    const json j = parse_or_throw(text, "pwr model");
    expect_model_type(j, "pwr");
    PiecewiseModel model;
    try {
        model.K = j.at("K").get<int>();
        model.p = j.at("p").get<int>();
        model.gamma = j.at("gamma").get<std::vector<int>>();
        model.beta = matrix_from_json(j.at("beta"));
        model.sigma2 = vector_from_json(j.at("sigma2"));
        model.cost = j.at("cost").get<double>();
    } catch (const json::exception& e) {
        throw IoError(std::string("pwr model: ") + e.what());
    }
    model.validate();
    return model;
}

std::string hmrm_to_json(const HmrmModel& model, double loglik) {
    json j;
    j["model_type"] = "hmrm";
    j["K"] = model.K;
    j["p"] = model.p;
    j["pi"] = vector_to_json(model.pi);
    j["A"] = matrix_to_json(model.A);
    j["beta"] = matrix_to_json(model.beta);
    j["sigma2"] = vector_to_json(model.sigma2);
    j["loglik"] = loglik;
    return j.dump(2) + "\n";
}

HmrmModel hmrm_from_json(const std::string& text, double* loglik) {
    const json j = parse_or_throw(text, "hmrm model");
    expect_model_type(j, "hmrm");
    HmrmModel model;
    try {
        model.K = j.at("K").get<int>();
        model.p = j.at("p").get<int>();
        model.pi = vector_from_json(j.at("pi"));
        model.A = matrix_from_json(j.at("A"));
        model.beta = matrix_from_json(j.at("beta"));
        model.sigma2 = vector_from_json(j.at("sigma2"));
        if (loglik) *loglik = j.at("loglik").get<double>();
    } catch (const json::exception& e) {
        throw IoError(std::string("hmrm model: ") + e.what());
    }
    model.validate();
    return model;
}

std::vector<FeatureVector> read_features_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input file: " + path);
    std::vector<FeatureVector> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            FeatureVector row;
            row.values = vector_from_json(j.at("features"));
            row.label = j.contains("label") && !j["label"].is_null()
                            ? j["label"].get<int>() - 1
                            : -1;
            rows.push_back(std::move(row));
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

void write_features_jsonl(const std::string& path, const std::vector<FeatureVector>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file: " + path);
    for (const auto& row : rows) {
        json j;
        j["features"] = vector_to_json(row.values);
        if (row.label >= 0)
            j["label"] = row.label + 1;
        else
            j["label"] = nullptr;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::string classifier_to_json(const MdaClassifier& clf) {
    json j;
    j["G"] = clf.G;
    json priors = json::array();
    json classes = json::array();
    for (const auto& cls : clf.classes) {
        priors.push_back(cls.prior);
        json c;
        c["R"] = cls.R;
        c["alpha"] = vector_to_json(cls.alpha);
        json mus = json::array(), sigmas = json::array();
        for (int r = 0; r < cls.R; ++r) {
            mus.push_back(vector_to_json(cls.mu[r]));
            sigmas.push_back(matrix_to_json(cls.sigma[r]));
        }
        c["mu"] = std::move(mus);
        c["Sigma"] = std::move(sigmas);
        classes.push_back(std::move(c));
    }
    j["priors"] = std::move(priors);
    j["classes"] = std::move(classes);
    j["feature_mean"] = vector_to_json(clf.feature_mean);
    j["feature_scale"] = vector_to_json(clf.feature_scale);
    return j.dump(2) + "\n";
}

MdaClassifier classifier_from_json(const std::string& text) {
    const json j = parse_or_throw(text, "classifier");
    MdaClassifier clf;
    try {
        clf.G = j.at("G").get<int>();
        const json& priors = j.at("priors");
        const json& classes = j.at("classes");
        if (static_cast<int>(classes.size()) != clf.G ||
            static_cast<int>(priors.size()) != clf.G)
            throw IoError("classifier: class count mismatch");
        for (int g = 0; g < clf.G; ++g) {
            ClassGmm cls;
            cls.prior = priors[g].get<double>();
            cls.R = classes[g].at("R").get<int>();
            cls.alpha = vector_from_json(classes[g].at("alpha"));
            for (int r = 0; r < cls.R; ++r) {
                cls.mu.push_back(vector_from_json(classes[g].at("mu")[r]));
                cls.sigma.push_back(matrix_from_json(classes[g].at("Sigma")[r]));
            }
            clf.classes.push_back(std::move(cls));
        }
        clf.feature_mean = vector_from_json(j.at("feature_mean"));
        clf.feature_scale = vector_from_json(j.at("feature_scale"));
    } catch (const json::exception& e) {
        throw IoError(std::string("classifier: ") + e.what());
    }
    return clf;
}

}  // namespace tsreg

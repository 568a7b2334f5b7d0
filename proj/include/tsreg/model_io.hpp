#pragma once

#include <string>
#include <vector>

#include "tsreg/hmrm.hpp"
#include "tsreg/mda.hpp"
#include "tsreg/piecewise.hpp"
#include "tsreg/rhlp.hpp"

namespace tsreg {

// JSON schemas (arrays row-major):
//   rhlp: {model_type:"rhlp", K, p, q, w, beta, sigma2, loglik, bic}
//   pwr:  {model_type:"pwr",  K, p, gamma, beta, sigma2, cost}
//   hmrm: {model_type:"hmrm", K, p, pi, A, beta, sigma2, loglik}

std::string rhlp_to_json(const RhlpModel& model, double loglik, double bic);
RhlpModel rhlp_from_json(const std::string& text, double* loglik = nullptr,
                         double* bic = nullptr);

std::string piecewise_to_json(const PiecewiseModel& model);
PiecewiseModel piecewise_from_json(const std::string& text);

std::string hmrm_to_json(const HmrmModel& model, double loglik);
HmrmModel hmrm_from_json(const std::string& text, double* loglik = nullptr);

// Feature datasets: JSON lines, one {features:[...], label:g} object per
// line. Labels on disk are 1-based; in memory 0-based (-1 = unlabeled).
std::vector<FeatureVector> read_features_jsonl(const std::string& path);
void write_features_jsonl(const std::string& path, const std::vector<FeatureVector>& rows);

// Trained classifier: {G, priors, classes:[{R, alpha, mu, Sigma}],
// feature_mean, feature_scale}.
std::string classifier_to_json(const MdaClassifier& clf);
MdaClassifier classifier_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace tsreg

#pragma once

#include <string>
#include <vector>

#include "sorf/discretizer.hpp"
#include "sorf/encoding.hpp"
#include "sorf/rule.hpp"

namespace sorf {

// Self-contained trained model: prediction needs only this plus raw feature
// vectors. Serialized as versioned line-oriented text with full-precision
// numbers; rules are stored as integer segments and also rendered as
// original-space intervals for reading.
struct ModelFile {
  int version = 1;
  Task task = Task::Regression;
  DiscretizationSpec disc;
  DiscretizedDataset tables;  // alphabets and level extremes; sample levels empty
  std::vector<double> feature_mean, feature_scale;
  double label_mean = 0.0, label_scale = 1.0;
  std::vector<double> eta;
  double intercept = 0.0;
  RuleSet rules;
  std::vector<double> zeta;
  double lambda = 0.0, rho = 0.0, gap = 0.0;
  std::string created;
};

void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);

// Raw-unit predictions, one per row: de-normalized values for regression,
// margins for classification (sign gives the label).
std::vector<double> predict(const ModelFile& model,
                            const std::vector<std::vector<double>>& raw_columns);

}  // namespace sorf

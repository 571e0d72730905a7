#pragma once

#include <string>
#include <vector>

#include "sorf/encoding.hpp"

namespace sorf {

// Numeric view of a CSV file: categorical columns expanded to k-1 dummy
// indicators, optional z-scoring of features (and of regression labels).
// Raw values are kept alongside so discretization thresholds stay in
// original units.
struct RawDataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> columns;     // original units
  std::vector<std::vector<double>> normalized;  // z-scored (or copies)
  std::vector<double> labels;                   // z-scored for regression when enabled
  std::vector<double> labels_raw;
  std::vector<double> feature_mean, feature_scale;
  double label_mean = 0.0, label_scale = 1.0;
};

RawDataset load_csv(const std::string& path, const std::string& label_column, Task task,
                    bool normalize = true);
RawDataset parse_csv_text(const std::string& text, const std::string& label_column,
                          Task task, bool normalize = true);

// Feature matrix only (prediction input). Columns must line up with the
// training feature names, including dummy expansion.
std::vector<std::vector<double>> load_feature_csv(
    const std::string& path, const std::vector<std::string>& feature_names,
    const std::string& label_column);

}  // namespace sorf

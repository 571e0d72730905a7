#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sorf/csv.hpp"
#include "sorf/model.hpp"
#include "sorf/path.hpp"

namespace sorf {

struct TrainOptions {
  Task task = Task::Regression;
  DiscretizationSpec disc;
  PathConfig path;
  SolverConfig solver;
  SelectCriterion select;
  bool normalize = true;
  std::uint64_t seed = 1;  // cross-validation fold assignment
  bool stats = false;      // structured log lines to *log
};

struct TrainOutcome {
  ModelFile model;
  PathResult path;
  std::size_t selected = 0;
  std::vector<double> cv_scores;  // per step; empty unless CV ran
};

// Full pipeline: discretize raw features, encode, sweep the path, select one
// step. Cross-validation re-runs the pipeline per fold over the full path's
// lambda grid and scores held-out MSE (regression) or negated accuracy
// (classification).
TrainOutcome train_model(const RawDataset& raw, const TrainOptions& options,
                         std::ostream* log = nullptr);

// Restrict a dataset to the given rows, recomputing normalization.
RawDataset subset_rows(const RawDataset& raw, const std::vector<int>& rows, Task task,
                       bool normalize);

}  // namespace sorf

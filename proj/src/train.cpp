#include "sorf/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace sorf {

namespace {

void require_two_classes(const std::vector<double>& labels) {
  bool pos = false, neg = false;
  for (double y : labels) {
    pos |= y > 0.0;
    neg |= y < 0.0;
  }
  if (!pos || !neg) {
    throw std::invalid_argument("classification data must contain both classes");
  }
}

ModelFile assemble_model(const RawDataset& raw, const DiscretizedDataset& ds,
                         const TrainOptions& options, const PathStep& step) {
  ModelFile model;
  model.task = options.task;
  model.disc = options.disc;
  model.tables = ds;
  model.tables.levels.clear();  // prediction needs only alphabets and extremes
  model.tables.n = 0;
  model.tables.source_columns = raw.feature_names;
  model.feature_mean = raw.feature_mean;
  model.feature_scale = raw.feature_scale;
  model.label_mean = raw.label_mean;
  model.label_scale = raw.label_scale;
  model.eta = step.model.eta;
  model.intercept = step.model.intercept;
  model.rules = step.model.rules;
  model.zeta = step.model.zeta;
  model.lambda = step.lambda;
  model.rho = step.rho;
  model.gap = step.model.gap;
  return model;
}

double fold_score(const ModelFile& model, const RawDataset& raw,
                  const std::vector<int>& rows) {
  std::vector<std::vector<double>> columns(raw.columns.size());
  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    columns[c].reserve(rows.size());
    for (int i : rows) columns[c].push_back(raw.columns[c][i]);
  }
  const std::vector<double> pred = predict(model, columns);
  if (model.task == Task::Regression) {
    double mse = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double err = pred[r] - raw.labels_raw[rows[r]];
      mse += err * err;
    }
    return mse / static_cast<double>(rows.size());
  }
  double correct = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double label = pred[r] >= 0.0 ? 1.0 : -1.0;
    if (label == raw.labels_raw[rows[r]]) correct += 1.0;
  }
  return -(correct / static_cast<double>(rows.size()));  // lower is better
}

void log_path(const PathResult& path, std::ostream& log) {
  log << "[stats] lambda_max value=" << path.lambda_max
      << " nodes_visited=" << path.lambda_max_nodes << "\n";
  for (std::size_t t = 0; t < path.steps.size(); ++t) {
    const PathStep& s = path.steps[t];
    log << "[stats] step=" << t << " lambda=" << s.lambda
        << " survivors=" << s.survivors << " active_rules=" << s.active_rules
        << " screen_nodes=" << s.screen_nodes << " total_nodes=" << s.total_nodes
        << " sweeps=" << s.sweeps << " gap=" << s.model.gap
        << " converged=" << (s.converged ? 1 : 0) << " time=" << s.wall_seconds << "\n";
  }
}

}  // namespace

RawDataset subset_rows(const RawDataset& raw, const std::vector<int>& rows, Task task,
                       bool normalize) {
  RawDataset out;
  out.feature_names = raw.feature_names;
  out.columns.resize(raw.columns.size());
  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    out.columns[c].reserve(rows.size());
    for (int i : rows) out.columns[c].push_back(raw.columns[c][i]);
  }
  out.labels_raw.reserve(rows.size());
  for (int i : rows) out.labels_raw.push_back(raw.labels_raw[i]);

  const std::size_t n = rows.size();
  out.feature_mean.assign(out.columns.size(), 0.0);
  out.feature_scale.assign(out.columns.size(), 1.0);
  out.normalized = out.columns;
  if (normalize) {
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
      double mean = 0.0;
      for (double v : out.columns[c]) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : out.columns[c]) var += (v - mean) * (v - mean);
      double scale = std::sqrt(var / static_cast<double>(n));
      if (scale == 0.0) scale = 1.0;
      out.feature_mean[c] = mean;
      out.feature_scale[c] = scale;
      for (std::size_t i = 0; i < n; ++i) {
        out.normalized[c][i] = (out.columns[c][i] - mean) / scale;
      }
    }
  }
  out.labels = out.labels_raw;
  if (normalize && task == Task::Regression) {
    double mean = 0.0;
    for (double v : out.labels_raw) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : out.labels_raw) var += (v - mean) * (v - mean);
    double scale = std::sqrt(var / static_cast<double>(n));
    if (scale == 0.0) scale = 1.0;
    out.label_mean = mean;
    out.label_scale = scale;
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = (out.labels_raw[i] - mean) / scale;
  }
  return out;
}

TrainOutcome train_model(const RawDataset& raw, const TrainOptions& options,
                         std::ostream* log) {
  if (options.task == Task::Classification) require_two_classes(raw.labels);

  TrainOutcome outcome;
  const DiscretizedDataset ds = discretize(raw.columns, options.disc);
  ProblemEncoding enc = ProblemEncoding::make(options.task, raw.normalized, raw.labels,
                                              /*rho=*/1.0, /*lambda=*/1.0);
  outcome.path = run_path(ds, enc, options.path, options.solver);
  if (options.stats && log) log_path(outcome.path, *log);

  if (options.select.kind == SelectKind::CrossValidation) {
    const int folds = std::max(2, options.select.folds);
    const int n = static_cast<int>(raw.labels.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> grid;
    for (const PathStep& s : outcome.path.steps) grid.push_back(s.lambda);
    std::vector<double> scores(grid.size(), 0.0);
    std::vector<int> counted(grid.size(), 0);

    for (int f = 0; f < folds; ++f) {
      std::vector<int> train_rows, held_rows;
      for (int r = 0; r < n; ++r) {
        (r % folds == f ? held_rows : train_rows).push_back(order[r]);
      }
      if (train_rows.empty() || held_rows.empty()) continue;
      RawDataset fold_raw = subset_rows(raw, train_rows, options.task, options.normalize);
      if (options.task == Task::Classification) {
        bool pos = false, neg = false;
        for (double y : fold_raw.labels) {
          pos |= y > 0.0;
          neg |= y < 0.0;
        }
        if (!pos || !neg) continue;  // degenerate fold, skip its votes
      }
      const DiscretizedDataset fold_ds = discretize(fold_raw.columns, options.disc);
      ProblemEncoding fold_enc = ProblemEncoding::make(
          options.task, fold_raw.normalized, fold_raw.labels, 1.0, 1.0);
      PathConfig fold_cfg = options.path;
      fold_cfg.explicit_grid = grid;
      fold_cfg.stop_at_active_rules = -1;
      const PathResult fold_path = run_path(fold_ds, fold_enc, fold_cfg, options.solver);
      for (std::size_t t = 0; t < fold_path.steps.size() && t < grid.size(); ++t) {
        ModelFile fold_model =
            assemble_model(fold_raw, fold_ds, options, fold_path.steps[t]);
        scores[t] += fold_score(fold_model, raw, held_rows);
        counted[t] += 1;
      }
    }
    for (std::size_t t = 0; t < scores.size(); ++t) {
      scores[t] = counted[t] > 0 ? scores[t] / counted[t]
                                 : std::numeric_limits<double>::infinity();
    }
    outcome.cv_scores = scores;
    outcome.selected = select_model(outcome.path, options.select, scores);
    if (options.stats && log) {
      for (std::size_t t = 0; t < scores.size(); ++t) {
        *log << "[stats] cv step=" << t << " lambda=" << grid[t]
             << " score=" << scores[t] << "\n";
      }
    }
  } else {
    outcome.selected = select_model(outcome.path, options.select);
  }

  outcome.model =
      assemble_model(raw, ds, options, outcome.path.steps[outcome.selected]);
  return outcome;
}

}  // namespace sorf

#include "sorf/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "sorf/csv.hpp"
#include "sorf/model.hpp"
#include "sorf/train.hpp"
#include "sorf/tree.hpp"
#include "sorf/verify.hpp"

namespace sorf {

namespace {

DiscretizationSpec parse_discretize(const std::string& text) {
  DiscretizationSpec spec;
  const std::size_t colon = text.find(':');
  const std::string scheme = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (scheme == "quantile") {
    spec.scheme = DiscretizeScheme::Quantile;
    spec.quantiles = arg.empty() ? 5 : std::stoi(arg);
  } else if (scheme == "interval") {
    spec.scheme = DiscretizeScheme::Interval;
    spec.delta = arg.empty() ? 0.0 : std::stod(arg);
  } else {
    throw CLI::ValidationError("--discretize",
                               "expected quantile:M or interval:DELTA, got '" + text + "'");
  }
  return spec;
}

SelectCriterion parse_select(const std::string& text) {
  SelectCriterion criterion;
  const std::size_t colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "cv") {
    criterion.kind = SelectKind::CrossValidation;
    criterion.folds = arg.empty() ? 2 : std::stoi(arg);
  } else if (kind == "count") {
    criterion.kind = SelectKind::ActiveRuleCount;
    criterion.count = std::stoi(arg);
  } else if (kind == "lambda") {
    criterion.kind = SelectKind::FixedLambda;
    criterion.lambda = std::stod(arg);
  } else {
    throw CLI::ValidationError("--select",
                               "expected cv:K, count:N or lambda:V, got '" + text + "'");
  }
  return criterion;
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::vector<std::int32_t> parse_alphabets(const std::string& text) {
  std::vector<std::int32_t> s;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) s.push_back(std::stoi(part));
  if (s.empty()) throw CLI::ValidationError("--alphabets", "empty alphabet list");
  return s;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"sparse rule-ensemble learner with safe tree pruning"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "fit a model and write a model file");
  std::string data_path, label = "label", model_path = "model.sorf";
  std::string task_name = "regression", discretize_text = "quantile:5";
  std::string select_text;
  double lambda_flag = 0.0, lambda_min_ratio = 0.01, tol = 1e-6;
  int path_steps = 100, max_rule_features = -1, threads = 1, stop_at_rules = -1;
  std::uint64_t seed = 1;
  bool stats = false, no_normalize = false;
  train->add_option("--data", data_path, "training CSV")->required();
  train->add_option("--label", label, "label column name");
  train->add_option("--task", task_name, "regression or classification");
  train->add_option("--discretize", discretize_text, "quantile:M or interval:DELTA");
  train->add_option("--lambda", lambda_flag, "train at this penalty");
  train->add_option("--select", select_text, "cv:K, count:N or lambda:V");
  train->add_option("--path-steps", path_steps, "lambda grid points");
  train->add_option("--lambda-min-ratio", lambda_min_ratio, "grid end / lambda_max");
  train->add_option("--max-rule-features", max_rule_features,
                    "cap on constrained features per rule; 0 disables rules");
  train->add_option("--tol", tol, "duality gap tolerance");
  train->add_option("--threads", threads, "tree traversal threads (0 = all cores)");
  train->add_option("--seed", seed, "cross-validation fold seed");
  train->add_option("--stop-at-rules", stop_at_rules, "halt path at this many rules");
  train->add_option("--model", model_path, "output model file");
  train->add_flag("--stats", stats, "print screening statistics");
  train->add_flag("--no-normalize", no_normalize, "skip z-scoring");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "apply a model file to a CSV");
  std::string predict_model, predict_data, predict_out;
  predict_cmd->add_option("--model", predict_model, "model file")->required();
  predict_cmd->add_option("--data", predict_data, "feature CSV")->required();
  predict_cmd->add_option("--output", predict_out, "output CSV (default stdout)");
  predict_cmd->add_option("--label", label, "label column to ignore if present");

  // enumerate
  auto* enumerate_cmd =
      app.add_subcommand("enumerate", "stream the rule space, one segment per line");
  std::string enum_data, enum_discretize = "quantile:5", enum_alphabets;
  int enum_max_features = -1;
  bool count_only = false;
  enumerate_cmd->add_option("--data", enum_data, "CSV whose features define the space");
  enumerate_cmd->add_option("--discretize", enum_discretize, "quantile:M or interval:DELTA");
  enumerate_cmd->add_option("--alphabets", enum_alphabets,
                            "comma-separated alphabet sizes instead of data");
  enumerate_cmd->add_option("--label", label, "label column to drop");
  enumerate_cmd->add_option("--max-rule-features", enum_max_features,
                            "cap on constrained features per rule");
  enumerate_cmd->add_flag("--count-only", count_only, "print the rule count only");

  // verify
  auto* verify_cmd =
      app.add_subcommand("verify", "run the oracle-equivalence suite on random instances");
  std::uint64_t verify_seed = 1;
  int verify_instances = 20;
  verify_cmd->add_option("--seed", verify_seed, "instance seed");
  verify_cmd->add_option("--instances", verify_instances, "number of random instances");

  // compare-rules
  auto* compare_cmd =
      app.add_subcommand("compare-rules", "rule-set similarity of two model files");
  std::string compare_a, compare_b;
  compare_cmd->add_option("model_a", compare_a, "first model file")->required();
  compare_cmd->add_option("model_b", compare_b, "second model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (train->parsed()) {
    TrainOptions options;
    if (task_name == "regression") {
      options.task = Task::Regression;
    } else if (task_name == "classification") {
      options.task = Task::Classification;
    } else {
      std::cerr << "unknown task '" << task_name << "'\n";
      return 1;
    }
    options.disc = parse_discretize(discretize_text);
    options.path.steps = path_steps;
    options.path.lambda_min_ratio = lambda_min_ratio;
    options.path.max_features = max_rule_features;
    options.path.stop_at_active_rules = stop_at_rules;
    options.solver.gap_tolerance = tol;
    options.solver.threads = threads;
    options.solver.max_features = max_rule_features;
    options.normalize = !no_normalize;
    options.seed = seed;
    options.stats = stats;
    if (!select_text.empty()) {
      options.select = parse_select(select_text);
    } else if (lambda_flag > 0.0) {
      options.select.kind = SelectKind::FixedLambda;
      options.select.lambda = lambda_flag;
    } else {
      options.select.kind = SelectKind::CrossValidation;
      options.select.folds = 2;
    }
    if (lambda_flag > 0.0) options.path.lambda_end = lambda_flag;

    const RawDataset raw = load_csv(data_path, label, options.task, options.normalize);
    TrainOutcome outcome = train_model(raw, options, &std::cerr);
    outcome.model.created = timestamp();
    save_model(outcome.model, model_path);
    const PathStep& chosen = outcome.path.steps[outcome.selected];
    std::cout << "trained: lambda=" << chosen.lambda
              << " active_rules=" << chosen.active_rules << " gap=" << chosen.model.gap
              << " model=" << model_path << "\n";
    return 0;
  }

  if (predict_cmd->parsed()) {
    const ModelFile model = load_model(predict_model);
    const auto columns =
        load_feature_csv(predict_data, model.tables.source_columns, label);
    const std::vector<double> values = predict(model, columns);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!predict_out.empty()) {
      file.open(predict_out, std::ios::binary);
      if (!file) {
        std::cerr << "cannot write '" << predict_out << "'\n";
        return 1;
      }
      out = &file;
    }
    char buf[40];
    if (model.task == Task::Regression) {
      *out << "prediction\n";
      for (double v : values) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        *out << buf << "\n";
      }
    } else {
      *out << "label,margin\n";
      for (double v : values) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        *out << (v >= 0.0 ? 1 : -1) << "," << buf << "\n";
      }
    }
    return 0;
  }

  if (enumerate_cmd->parsed()) {
    std::vector<std::int32_t> alphabets;
    if (!enum_alphabets.empty()) {
      alphabets = parse_alphabets(enum_alphabets);
    } else if (!enum_data.empty()) {
      RawDataset raw = load_csv(enum_data, label, Task::Regression, false);
      alphabets = discretize(raw.columns, parse_discretize(enum_discretize)).s;
    } else {
      std::cerr << "enumerate needs --data or --alphabets\n";
      return 1;
    }
    if (count_only) {
      BigUint count = count_all_rules(alphabets);
      if (enum_max_features >= 0) {
        std::uint64_t capped = 0;
        enumerate_segments(alphabets, enum_max_features,
                           [&](const RuleSegment&) { ++capped; });
        count = BigUint(capped - 1);  // minus the root
      }
      std::cout << count.str() << "\n";
      return 0;
    }
    enumerate_segments(alphabets, enum_max_features, [&](const RuleSegment& seg) {
      if (is_full_segment(seg, alphabets)) return;  // the match-all root is not a rule
      std::cout << format_segment(seg, alphabets) << "\n";
    });
    return 0;
  }

  if (verify_cmd->parsed()) {
    VerifyOptions options;
    options.seed = verify_seed;
    options.instances = verify_instances;
    const VerifyReport report = run_verify(options, std::cout);
    return report.failed == 0 ? 0 : 2;
  }

  if (compare_cmd->parsed()) {
    const ModelFile a = load_model(compare_a);
    const ModelFile b = load_model(compare_b);
    if (a.tables.s != b.tables.s) {
      std::cerr << "models were trained over different discretized spaces\n";
      return 1;
    }
    if (a.rules.empty()) {
      std::cerr << "first model has no rules\n";
      return 1;
    }
    std::cout << "similarity(a->b) " << similarity(a.rules, b.rules) << "\n";
    if (!b.rules.empty()) {
      std::cout << "similarity(b->a) " << similarity(b.rules, a.rules) << "\n";
    }
    return 0;
  }

  return 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace sorf

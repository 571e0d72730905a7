#include "sorf/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sorf {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Feature names may contain spaces; they always go last on their line.
void write_tables(std::ostream& out, const ModelFile& model) {
  const auto& t = model.tables;
  out << "features " << t.d << "\n";
  for (int j = 0; j < t.d; ++j) {
    out << "feature " << j << " mean " << num(model.feature_mean[j]) << " scale "
        << num(model.feature_scale[j]) << " name "
        << (j < static_cast<int>(t.source_columns.size()) ? t.source_columns[j]
                                                          : "x" + std::to_string(j))
        << "\n";
  }
  for (int j = 0; j < t.d; ++j) {
    out << "alphabet " << j << " " << t.s[j] << "\n";
    out << "zmin " << j;
    for (double v : t.level_min[j]) out << " " << num(v);
    out << "\n";
    out << "zmax " << j;
    for (double v : t.level_max[j]) out << " " << num(v);
    out << "\n";
  }
}

}  // namespace

void save_model(const ModelFile& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write model file '" + path + "'");
  out << "sorf-model " << model.version << "\n";
  out << "task " << (model.task == Task::Regression ? "regression" : "classification")
      << "\n";
  if (!model.created.empty()) out << "created " << model.created << "\n";
  out << "discretization "
      << (model.disc.scheme == DiscretizeScheme::Interval ? "interval " : "quantile ")
      << (model.disc.scheme == DiscretizeScheme::Interval
              ? num(model.disc.delta)
              : std::to_string(model.disc.quantiles))
      << "\n";
  out << "lambda " << num(model.lambda) << "\n";
  out << "rho " << num(model.rho) << "\n";
  out << "gap " << num(model.gap) << "\n";
  out << "label mean " << num(model.label_mean) << " scale " << num(model.label_scale)
      << "\n";
  write_tables(out, model);
  out << "intercept " << num(model.intercept) << "\n";
  int nonzero = 0;
  for (double e : model.eta) {
    if (e != 0.0) ++nonzero;
  }
  out << "linear " << nonzero << "\n";
  for (std::size_t j = 0; j < model.eta.size(); ++j) {
    if (model.eta[j] != 0.0) out << "coef " << j << " " << num(model.eta[j]) << "\n";
  }
  out << "rules " << model.rules.size() << "\n";
  for (std::size_t k = 0; k < model.rules.size(); ++k) {
    out << "rule " << num(model.zeta[k]) << " | "
        << format_segment(model.rules[k], model.tables.s) << " # "
        << format_interval(model.rules[k], model.tables) << "\n";
  }
  out << "end\n";
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

namespace {

std::string expect_line(std::istream& in, const std::string& what) {
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) return line;
  }
  throw std::invalid_argument("model file truncated, expected " + what);
}

std::istringstream expect_keyword(std::istream& in, const std::string& keyword) {
  std::string line = expect_line(in, keyword);
  std::istringstream parts(line);
  std::string head;
  parts >> head;
  if (head != keyword) {
    throw std::invalid_argument("model file: expected '" + keyword + "', got '" + head +
                                "'");
  }
  return parts;
}

}  // namespace

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open model file '" + path + "'");
  ModelFile model;

  expect_keyword(in, "sorf-model") >> model.version;
  if (model.version != 1) {
    throw std::invalid_argument("unsupported model version " + std::to_string(model.version));
  }
  {
    std::string kind;
    expect_keyword(in, "task") >> kind;
    if (kind == "regression") {
      model.task = Task::Regression;
    } else if (kind == "classification") {
      model.task = Task::Classification;
    } else {
      throw std::invalid_argument("model file: unknown task '" + kind + "'");
    }
  }
  std::string line = expect_line(in, "discretization");
  {
    std::istringstream parts(line);
    std::string head;
    parts >> head;
    if (head == "created") {
      std::getline(parts, model.created);
      line = expect_line(in, "discretization");
      parts = std::istringstream(line);
      parts >> head;
    }
    if (head != "discretization") {
      throw std::invalid_argument("model file: expected discretization line");
    }
    std::string scheme;
    parts >> scheme;
    if (scheme == "interval") {
      model.disc.scheme = DiscretizeScheme::Interval;
      parts >> model.disc.delta;
    } else if (scheme == "quantile") {
      model.disc.scheme = DiscretizeScheme::Quantile;
      parts >> model.disc.quantiles;
    } else {
      throw std::invalid_argument("model file: unknown discretization '" + scheme + "'");
    }
  }
  expect_keyword(in, "lambda") >> model.lambda;
  expect_keyword(in, "rho") >> model.rho;
  expect_keyword(in, "gap") >> model.gap;
  {
    std::string word;
    auto parts = expect_keyword(in, "label");
    parts >> word >> model.label_mean >> word >> model.label_scale;
  }

  auto& t = model.tables;
  expect_keyword(in, "features") >> t.d;
  if (t.d <= 0) throw std::invalid_argument("model file: bad feature count");
  t.s.resize(t.d);
  t.level_min.resize(t.d);
  t.level_max.resize(t.d);
  t.source_columns.resize(t.d);
  model.feature_mean.resize(t.d);
  model.feature_scale.resize(t.d);
  for (int j = 0; j < t.d; ++j) {
    auto parts = expect_keyword(in, "feature");
    int idx = 0;
    std::string word;
    parts >> idx >> word >> model.feature_mean[j] >> word >> model.feature_scale[j] >> word;
    std::string name;
    std::getline(parts, name);
    if (!name.empty() && name.front() == ' ') name.erase(0, 1);
    t.source_columns[j] = name;
  }
  for (int j = 0; j < t.d; ++j) {
    int idx = 0;
    expect_keyword(in, "alphabet") >> idx >> t.s[j];
    if (t.s[j] < 1) throw std::invalid_argument("model file: bad alphabet size");
    t.level_min[j].resize(t.s[j]);
    t.level_max[j].resize(t.s[j]);
    auto mins = expect_keyword(in, "zmin");
    mins >> idx;
    for (int l = 0; l < t.s[j]; ++l) mins >> t.level_min[j][l];
    auto maxs = expect_keyword(in, "zmax");
    maxs >> idx;
    for (int l = 0; l < t.s[j]; ++l) maxs >> t.level_max[j][l];
  }

  expect_keyword(in, "intercept") >> model.intercept;
  int nonzero = 0;
  expect_keyword(in, "linear") >> nonzero;
  model.eta.assign(t.d, 0.0);
  for (int c = 0; c < nonzero; ++c) {
    int j = 0;
    double v = 0.0;
    expect_keyword(in, "coef") >> j >> v;
    if (j < 0 || j >= t.d) throw std::invalid_argument("model file: coef index out of range");
    model.eta[j] = v;
  }
  std::size_t rule_count = 0;
  expect_keyword(in, "rules") >> rule_count;
  for (std::size_t k = 0; k < rule_count; ++k) {
    std::string rule_line = expect_line(in, "rule");
    if (rule_line.rfind("rule ", 0) != 0) {
      throw std::invalid_argument("model file: expected rule line");
    }
    const std::size_t bar = rule_line.find('|');
    if (bar == std::string::npos) throw std::invalid_argument("model file: malformed rule");
    double coef = 0.0;
    {
      std::istringstream head(rule_line.substr(5, bar - 5));
      head >> coef;
    }
    std::size_t hash = rule_line.find('#', bar);
    std::string segment_text =
        rule_line.substr(bar + 1, (hash == std::string::npos ? rule_line.size() : hash) -
                                      bar - 1);
    model.rules.push_back(parse_segment(segment_text, t.s));
    model.zeta.push_back(coef);
  }
  if (expect_line(in, "end") != "end") {
    throw std::invalid_argument("model file: missing end marker");
  }
  return model;
}

std::vector<double> predict(const ModelFile& model,
                            const std::vector<std::vector<double>>& raw_columns) {
  const auto& t = model.tables;
  if (static_cast<int>(raw_columns.size()) != t.d) {
    throw std::invalid_argument("predict: feature count mismatch");
  }
  const std::size_t n = raw_columns.empty() ? 0 : raw_columns[0].size();
  std::vector<double> out(n, 0.0);
  std::vector<double> x(t.d);
  for (std::size_t i = 0; i < n; ++i) {
    double value = model.intercept;
    for (int j = 0; j < t.d; ++j) {
      x[j] = raw_columns[j][i];
      const double z = (x[j] - model.feature_mean[j]) / model.feature_scale[j];
      value += model.eta[j] * z;
    }
    if (!model.rules.empty()) {
      const std::vector<std::int32_t> levels = discretize_apply(x, t);
      for (std::size_t k = 0; k < model.rules.size(); ++k) {
        if (evaluate(model.rules[k], levels)) value += model.zeta[k];
      }
    }
    out[i] = model.task == Task::Regression
                 ? value * model.label_scale + model.label_mean
                 : value;
  }
  return out;
}

}  // namespace sorf

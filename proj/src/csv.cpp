#include "sorf/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sorf {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  char* end = nullptr;
  out = std::strtod(cell.c_str(), &end);
  return end == cell.c_str() + cell.size();
}

struct StringTable {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> cells;  // [column][row]
};

StringTable parse_table(const std::string& text) {
  StringTable table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (!have_header) {
      table.names = cells;
      table.cells.resize(cells.size());
      have_header = true;
      continue;
    }
    if (cells.size() != table.names.size()) {
      throw std::invalid_argument("csv: ragged row with " + std::to_string(cells.size()) +
                                  " cells, expected " + std::to_string(table.names.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) table.cells[c].push_back(cells[c]);
  }
  if (!have_header || table.cells.empty() || table.cells[0].empty()) {
    throw std::invalid_argument("csv: no data rows");
  }
  return table;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

RawDataset parse_csv_text(const std::string& text, const std::string& label_column,
                          Task task, bool normalize) {
  StringTable table = parse_table(text);
  const std::size_t n = table.cells[0].size();

  std::size_t label_idx = table.names.size();
  for (std::size_t c = 0; c < table.names.size(); ++c) {
    if (table.names[c] == label_column) label_idx = c;
  }
  if (label_idx == table.names.size()) {
    throw std::invalid_argument("csv: label column '" + label_column + "' not found");
  }

  RawDataset raw;
  raw.labels_raw.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!parse_double(table.cells[label_idx][i], raw.labels_raw[i])) {
      throw std::invalid_argument("csv: non-numeric label '" + table.cells[label_idx][i] +
                                  "'");
    }
  }
  if (task == Task::Classification) {
    for (double y : raw.labels_raw) {
      if (y != 1.0 && y != -1.0) {
        throw std::invalid_argument("csv: classification labels must be +1 or -1");
      }
    }
  }

  for (std::size_t c = 0; c < table.names.size(); ++c) {
    if (c == label_idx) continue;
    const auto& col = table.cells[c];
    std::vector<double> numeric(n);
    std::size_t parsed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (parse_double(col[i], numeric[i])) ++parsed;
    }
    if (parsed == n) {
      for (double v : numeric) {
        if (!std::isfinite(v)) {
          throw std::invalid_argument("csv: non-finite value in column '" +
                                      table.names[c] + "'");
        }
      }
      raw.feature_names.push_back(table.names[c]);
      raw.columns.push_back(std::move(numeric));
      continue;
    }
    if (parsed != 0) {
      throw std::invalid_argument("csv: column '" + table.names[c] +
                                  "' mixes numeric and non-numeric cells");
    }
    // categorical: k distinct values make k-1 dummy indicators, the first
    // (sorted) category is the baseline
    std::set<std::string> categories(col.begin(), col.end());
    auto it = categories.begin();
    ++it;
    for (; it != categories.end(); ++it) {
      std::vector<double> dummy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (col[i] == *it) dummy[i] = 1.0;
      }
      raw.feature_names.push_back(table.names[c] + "=" + *it);
      raw.columns.push_back(std::move(dummy));
    }
  }
  if (raw.columns.empty()) throw std::invalid_argument("csv: no feature columns");

  raw.feature_mean.assign(raw.columns.size(), 0.0);
  raw.feature_scale.assign(raw.columns.size(), 1.0);
  raw.normalized = raw.columns;
  if (normalize) {
    for (std::size_t c = 0; c < raw.columns.size(); ++c) {
      double mean = 0.0;
      for (double v : raw.columns[c]) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : raw.columns[c]) var += (v - mean) * (v - mean);
      double scale = std::sqrt(var / static_cast<double>(n));
      if (scale == 0.0) scale = 1.0;
      raw.feature_mean[c] = mean;
      raw.feature_scale[c] = scale;
      for (std::size_t i = 0; i < n; ++i) {
        raw.normalized[c][i] = (raw.columns[c][i] - mean) / scale;
      }
    }
  }

  raw.labels = raw.labels_raw;
  if (normalize && task == Task::Regression) {
    double mean = 0.0;
    for (double v : raw.labels_raw) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : raw.labels_raw) var += (v - mean) * (v - mean);
    double scale = std::sqrt(var / static_cast<double>(n));
    if (scale == 0.0) scale = 1.0;
    raw.label_mean = mean;
    raw.label_scale = scale;
    for (std::size_t i = 0; i < n; ++i) raw.labels[i] = (raw.labels_raw[i] - mean) / scale;
  }
  return raw;
}

RawDataset load_csv(const std::string& path, const std::string& label_column, Task task,
                    bool normalize) {
  return parse_csv_text(read_file(path), label_column, task, normalize);
}

std::vector<std::vector<double>> load_feature_csv(
    const std::string& path, const std::vector<std::string>& feature_names,
    const std::string& label_column) {
  StringTable table = parse_table(read_file(path));
  const std::size_t n = table.cells[0].size();

  auto find_column = [&](const std::string& name) -> const std::vector<std::string>* {
    for (std::size_t c = 0; c < table.names.size(); ++c) {
      if (table.names[c] == name && table.names[c] != label_column) {
        return &table.cells[c];
      }
    }
    return nullptr;
  };

  std::vector<std::vector<double>> out;
  out.reserve(feature_names.size());
  for (const std::string& name : feature_names) {
    std::vector<double> col(n);
    if (const auto* cells = find_column(name)) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!parse_double((*cells)[i], col[i])) {
          throw std::invalid_argument("csv: non-numeric cell in column '" + name + "'");
        }
      }
      out.push_back(std::move(col));
      continue;
    }
    // dummy feature "column=category": recover it from the raw column
    const std::size_t eq = name.rfind('=');
    if (eq != std::string::npos) {
      if (const auto* cells = find_column(name.substr(0, eq))) {
        const std::string category = name.substr(eq + 1);
        for (std::size_t i = 0; i < n; ++i) col[i] = (*cells)[i] == category ? 1.0 : 0.0;
        out.push_back(std::move(col));
        continue;
      }
    }
    throw std::invalid_argument("csv: prediction file lacks feature '" + name + "'");
  }
  return out;
}

}  // namespace sorf

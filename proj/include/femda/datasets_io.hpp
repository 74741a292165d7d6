#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "femda/dataset.hpp"
#include "femda/errors.hpp"
#include "femda/rng.hpp"

namespace femda {

enum class DatasetName { Spambase, Ecoli, Statlog };

inline const char* dataset_name_str(DatasetName n) {
  switch (n) {
    case DatasetName::Spambase: return "spambase";
    case DatasetName::Ecoli: return "ecoli";
    case DatasetName::Statlog: return "statlog";
  }
  return "?";
}

inline DatasetName dataset_from_string(const std::string& s) {
  if (s == "spambase") return DatasetName::Spambase;
  if (s == "ecoli") return DatasetName::Ecoli;
  if (s == "statlog") return DatasetName::Statlog;
  throw ConfigError("unknown dataset: " + s);
}

enum class Delimiter { Comma, Whitespace };

// Column layout and filtering rules for one source file format.
struct DatasetSchema {
  DatasetName name = DatasetName::Spambase;
  int n_features = 57;
  Delimiter delimiter = Delimiter::Comma;
  bool drop_first_token = false;  // Ecoli sequence id
  bool integer_features = false;  // Statlog
  int min_class_size = 0;

  static DatasetSchema spambase() {
    return {DatasetName::Spambase, 57, Delimiter::Comma, false, false, 0};
  }
  // min_class_size 2*(m+1): QDA-family methods cannot fit smaller classes.
  static DatasetSchema ecoli() {
    return {DatasetName::Ecoli, 7, Delimiter::Whitespace, true, false, 16};
  }
  static DatasetSchema statlog() {
    return {DatasetName::Statlog, 36, Delimiter::Whitespace, false, true, 0};
  }
};

// Canonical shapes and source locations, used by load verification and the
// fetch-info subcommand. The toolkit never downloads; files are local.
struct DatasetInfo {
  DatasetName name;
  const char* url;
  const char* files;
  long rows;
  int columns;
};

inline std::vector<DatasetInfo> dataset_catalog() {
  return {
      {DatasetName::Spambase, "https://archive.ics.uci.edu/dataset/94/spambase",
       "spambase.data", 4601, 58},
      {DatasetName::Ecoli, "https://archive.ics.uci.edu/dataset/39/ecoli",
       "ecoli.data", 336, 9},
      {DatasetName::Statlog,
       "https://archive.ics.uci.edu/dataset/146/statlog+landsat+satellite",
       "sat.trn (4435 rows) + sat.tst (2000 rows)", 6435, 37},
  };
}

// Fig. 3 contamination boxes.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> dataset_contamination_box(
    DatasetName name) {
  switch (name) {
    case DatasetName::Spambase:
      return {Eigen::VectorXd::Zero(57), Eigen::VectorXd::Constant(57, 100.0)};
    case DatasetName::Ecoli:
      return {Eigen::VectorXd::Zero(7), Eigen::VectorXd::Constant(7, 1.0)};
    case DatasetName::Statlog:
      return {Eigen::VectorXd::Zero(36), Eigen::VectorXd::Constant(36, 200.0)};
  }
  throw ConfigError("dataset_contamination_box: unknown dataset");
}

struct LoadedDataset {
  LabeledDataset data;
  std::vector<std::string> dropped_classes;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line,
                                             Delimiter delim) {
  std::vector<std::string> out;
  if (delim == Delimiter::Comma) {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    if (!line.empty() && line.back() == ',') out.emplace_back();
  } else {
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
  }
  return out;
}

inline double parse_feature(const std::string& tok, std::size_t line_no,
                            bool integer_only) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": non-numeric feature '" + tok + "'");
  }
  if (pos != tok.size()) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": trailing characters in '" + tok + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": non-finite feature '" + tok + "'");
  }
  if (integer_only && v != std::floor(v)) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": expected integer, got '" + tok + "'");
  }
  return v;
}

inline void check_label_token(DatasetName name, const std::string& tok,
                              std::size_t line_no) {
  if (name == DatasetName::Spambase) {
    if (tok != "0" && tok != "1") {
      throw ParseError("line " + std::to_string(line_no) +
                       ": spambase label must be 0 or 1, got '" + tok + "'");
    }
  } else if (name == DatasetName::Statlog) {
    static const std::vector<std::string> valid{"1", "2", "3", "4", "5", "7"};
    if (std::find(valid.begin(), valid.end(), tok) == valid.end()) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": statlog label must be in {1..5,7}, got '" + tok +
                       "'");
    }
  }
}

}  // namespace detail

// Parse one source file under the given schema. Classes smaller than
// min_class_size are dropped (reported in dropped_classes); label indices
// follow the lexicographic order of the surviving class names.
inline LoadedDataset load_dataset(const std::string& path,
                                  const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open dataset file: " + path);
  }
  const int expected_fields =
      schema.n_features + 1 + (schema.drop_first_token ? 1 : 0);

  std::vector<Eigen::VectorXd> rows;
  std::vector<std::string> row_labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t raw_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const std::vector<std::string> fields =
        detail::split_fields(line, schema.delimiter);
    if (static_cast<int>(fields.size()) != expected_fields) {
      throw SchemaMismatch("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(expected_fields) + " fields, got " +
                           std::to_string(fields.size()));
    }
    ++raw_rows;
    const int offset = schema.drop_first_token ? 1 : 0;
    Eigen::VectorXd row(schema.n_features);
    for (int j = 0; j < schema.n_features; ++j) {
      row[j] = detail::parse_feature(fields[offset + j], line_no,
                                     schema.integer_features);
    }
    std::string label = fields.back();
    while (!label.empty() && (label.back() == '\r' || label.back() == ' ')) {
      label.pop_back();
    }
    detail::check_label_token(schema.name, label, line_no);
    rows.push_back(std::move(row));
    row_labels.push_back(std::move(label));
  }
  if (rows.empty()) {
    throw EmptyClass("dataset file has no data rows: " + path);
  }

  LoadedDataset out;

  std::map<std::string, long> counts;
  for (const std::string& lab : row_labels) ++counts[lab];
  std::vector<std::string> kept;
  for (const auto& [lab, c] : counts) {
    if (c >= schema.min_class_size) {
      kept.push_back(lab);
    } else {
      out.dropped_classes.push_back(lab);
      out.warnings.push_back("dropped class '" + lab + "' with " +
                             std::to_string(c) + " < " +
                             std::to_string(schema.min_class_size) + " rows");
    }
  }
  if (kept.empty()) {
    throw EmptyClass("all classes below min_class_size in " + path);
  }
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    index[kept[i]] = static_cast<int>(i);
  }

  Eigen::Index n_kept = 0;
  for (const std::string& lab : row_labels) n_kept += counts[lab] >= schema.min_class_size;
  out.data.features.resize(n_kept, schema.n_features);
  out.data.labels.reserve(n_kept);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto it = index.find(row_labels[i]);
    if (it == index.end()) continue;
    out.data.features.row(r++) = rows[i];
    out.data.labels.push_back(it->second);
  }
  out.data.label_names = kept;
  out.data.source = path;

  for (const DatasetInfo& info : dataset_catalog()) {
    if (info.name != schema.name) continue;
    const int cols = schema.n_features + 1 + (schema.drop_first_token ? 1 : 0);
    if (cols != info.columns) {
      out.warnings.push_back("column count " + std::to_string(cols) +
                             " differs from canonical " +
                             std::to_string(info.columns));
    }
    const bool row_match =
        schema.name == DatasetName::Statlog
            ? (raw_rows == 4435 || raw_rows == 2000 ||
               static_cast<long>(raw_rows) == info.rows)
            : static_cast<long>(raw_rows) == info.rows;
    if (!row_match) {
      out.warnings.push_back("row count " + std::to_string(raw_rows) +
                             " differs from canonical " +
                             std::to_string(info.rows));
    }
  }
  return out;
}

// Resolve a dataset by name. `path` is the data file; for Statlog it may be
// a directory holding sat.trn and sat.tst, which are concatenated (the
// benchmark reshuffles its own train/test splits).
inline LoadedDataset load_named_dataset(DatasetName name,
                                        const std::string& path) {
  namespace fs = std::filesystem;
  DatasetSchema schema;
  switch (name) {
    case DatasetName::Spambase: schema = DatasetSchema::spambase(); break;
    case DatasetName::Ecoli: schema = DatasetSchema::ecoli(); break;
    case DatasetName::Statlog: schema = DatasetSchema::statlog(); break;
  }
  if (name == DatasetName::Statlog && fs::is_directory(path)) {
    LoadedDataset trn = load_dataset((fs::path(path) / "sat.trn").string(), schema);
    LoadedDataset tst = load_dataset((fs::path(path) / "sat.tst").string(), schema);
    LoadedDataset out;
    if (trn.data.label_names != tst.data.label_names) {
      throw SchemaMismatch("statlog: sat.trn and sat.tst disagree on classes");
    }
    out.data = concat(trn.data, tst.data);
    out.data.source = path;
    out.warnings = std::move(trn.warnings);
    out.warnings.insert(out.warnings.end(), tst.warnings.begin(),
                        tst.warnings.end());
    return out;
  }
  if (name == DatasetName::Ecoli && fs::is_directory(path)) {
    return load_dataset((fs::path(path) / "ecoli.data").string(), schema);
  }
  if (name == DatasetName::Spambase && fs::is_directory(path)) {
    return load_dataset((fs::path(path) / "spambase.data").string(), schema);
  }
  return load_dataset(path, schema);
}

// Stratified split: each class is shuffled and cut at train_fraction
// (floor goes to train). Deterministic given the stream.
inline std::pair<LabeledDataset, LabeledDataset> shuffle_split(
    const LabeledDataset& ds, double train_fraction, SplitMix64& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("shuffle_split: train_fraction must be in (0, 1)");
  }
  validate(ds);
  const int K = ds.num_classes();
  std::vector<std::vector<std::size_t>> by_class(K);
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    by_class[ds.labels[i]].push_back(static_cast<std::size_t>(i));
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (int k = 0; k < K; ++k) {
    auto& idx = by_class[k];
    if (idx.empty()) {
      throw EmptyClass("shuffle_split: class '" + ds.label_names[k] +
                       "' has no rows");
    }
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(k));
    shuffle(idx, sub);
    const auto n_train = static_cast<std::size_t>(
        train_fraction * static_cast<double>(idx.size()));
    if (n_train == 0) {
      throw EmptyClass("shuffle_split: class '" + ds.label_names[k] +
                       "' would get zero training rows");
    }
    train_rows.insert(train_rows.end(), idx.begin(), idx.begin() + n_train);
    test_rows.insert(test_rows.end(), idx.begin() + n_train, idx.end());
  }
  const auto take = [&](const std::vector<std::size_t>& sel) {
    LabeledDataset out;
    out.features.resize(static_cast<Eigen::Index>(sel.size()), ds.dim());
    out.labels.reserve(sel.size());
    for (std::size_t i = 0; i < sel.size(); ++i) {
      out.features.row(static_cast<Eigen::Index>(i)) =
          ds.features.row(static_cast<Eigen::Index>(sel[i]));
      out.labels.push_back(ds.labels[sel[i]]);
    }
    out.label_names = ds.label_names;
    out.source = ds.source;
    return out;
  };
  return {take(train_rows), take(test_rows)};
}

// Replace floor(rate * n) uniformly chosen rows by i.i.d. uniform draws on
// the box; labels are kept. Mirrors the synthetic contamination protocol.
inline LabeledDataset contaminate_real(const LabeledDataset& ds, double rate,
                                       const Eigen::VectorXd& box_low,
                                       const Eigen::VectorXd& box_high,
                                       SplitMix64& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("contaminate_real: rate must be in [0, 1)");
  }
  if (box_low.size() != ds.dim() || box_high.size() != ds.dim()) {
    throw DimensionMismatch("contaminate_real: box dimension");
  }
  if (((box_high - box_low).array() <= 0.0).any()) {
    throw ConfigError("contaminate_real: box_low must be below box_high");
  }
  LabeledDataset out = ds;
  const auto n = static_cast<std::size_t>(ds.rows());
  const auto count = static_cast<std::size_t>(rate * static_cast<double>(n));
  if (count == 0) return out;
  std::vector<std::size_t> rows = sample_without_replacement(n, count, rng);
  std::sort(rows.begin(), rows.end());
  for (std::size_t r : rows) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      out.features(static_cast<Eigen::Index>(r), j) =
          std::uniform_real_distribution<double>(box_low[j], box_high[j])(rng);
    }
  }
  return out;
}

// z-score both splits with statistics of the training rows only.
inline void standardize_train_test(LabeledDataset& train,
                                   LabeledDataset& test) {
  const Eigen::RowVectorXd mean = train.features.colwise().mean();
  Eigen::RowVectorXd sd =
      ((train.features.rowwise() - mean).array().square().colwise().sum() /
       std::max<double>(1.0, static_cast<double>(train.features.rows()) - 1.0))
          .sqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (sd[j] == 0.0) sd[j] = 1.0;
  }
  train.features = (train.features.rowwise() - mean).array().rowwise() /
                   sd.array();
  test.features =
      (test.features.rowwise() - mean).array().rowwise() / sd.array();
}

}  // namespace femda

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "femda/errors.hpp"

namespace femda {

// n observations in R^m with integer class labels; the universal currency
// of the toolkit. Labels index into label_names.
struct LabeledDataset {
  Eigen::MatrixXd features;  // n x m, one observation per row
  std::vector<int> labels;   // values in [0, K)
  std::vector<std::string> label_names;
  std::string source;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  int num_classes() const { return static_cast<int>(label_names.size()); }
};

inline void validate(const LabeledDataset& ds) {
  if (static_cast<Eigen::Index>(ds.labels.size()) != ds.rows()) {
    throw LengthMismatch("dataset: " + std::to_string(ds.labels.size()) +
                         " labels for " + std::to_string(ds.rows()) + " rows");
  }
  const int k = ds.num_classes();
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    if (ds.labels[i] < 0 || ds.labels[i] >= k) {
      throw SchemaMismatch("dataset: label " + std::to_string(ds.labels[i]) +
                           " at row " + std::to_string(i) + " out of range");
    }
  }
  if (!ds.features.allFinite()) {
    throw ParseError("dataset: non-finite feature value");
  }
}

inline std::vector<Eigen::Index> class_counts(const LabeledDataset& ds) {
  std::vector<Eigen::Index> counts(ds.num_classes(), 0);
  for (int lab : ds.labels) ++counts[lab];
  return counts;
}

// Extract the rows belonging to class k, preserving order.
inline Eigen::MatrixXd rows_for_class(const LabeledDataset& ds, int k) {
  Eigen::Index n_k = 0;
  for (int lab : ds.labels) n_k += (lab == k);
  Eigen::MatrixXd out(n_k, ds.dim());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    if (ds.labels[i] == k) out.row(r++) = ds.features.row(i);
  }
  return out;
}

// Row-wise concatenation; label vocabularies must match.
inline LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("concat: feature dimensions differ");
  }
  if (a.label_names != b.label_names) {
    throw SchemaMismatch("concat: label vocabularies differ");
  }
  LabeledDataset out;
  out.features.resize(a.rows() + b.rows(), a.dim());
  out.features << a.features, b.features;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.label_names = a.label_names;
  out.source = a.source;
  return out;
}

}  // namespace femda

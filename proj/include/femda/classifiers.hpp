#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "femda/dataset.hpp"
#include "femda/errors.hpp"
#include "femda/estimators.hpp"
#include "femda/linalg.hpp"

namespace femda {

enum class Method { FEMDA, QDA, LDA, RobustQDA, TQDA, GQDA, RGQDA };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::FEMDA: return "FEMDA";
    case Method::QDA: return "QDA";
    case Method::LDA: return "LDA";
    case Method::RobustQDA: return "RobustQDA";
    case Method::TQDA: return "t-QDA";
    case Method::GQDA: return "GQDA";
    case Method::RGQDA: return "RGQDA";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "FEMDA" || s == "femda") return Method::FEMDA;
  if (s == "QDA" || s == "qda") return Method::QDA;
  if (s == "LDA" || s == "lda") return Method::LDA;
  if (s == "RobustQDA" || s == "robust-qda" || s == "robustqda")
    return Method::RobustQDA;
  if (s == "t-QDA" || s == "tqda" || s == "TQDA" || s == "t-qda")
    return Method::TQDA;
  if (s == "GQDA" || s == "gqda") return Method::GQDA;
  if (s == "RGQDA" || s == "rgqda") return Method::RGQDA;
  throw ConfigError("unknown method: " + s);
}

// Fitted classifier: per-class parameter blocks plus the method-specific
// extras (per-class nu for t-QDA, threshold c for the GQDA family).
struct FittedModel {
  Method kind = Method::FEMDA;
  std::vector<ClassParams> classes;
  std::vector<double> nu;              // aligned with classes; t-QDA only
  std::optional<double> threshold_c;   // GQDA / RGQDA only
  std::vector<std::string> class_labels;

  Eigen::Index dim() const {
    return classes.empty() ? 0 : classes.front().mu.size();
  }
  int num_classes() const { return static_cast<int>(classes.size()); }
};

struct Prediction {
  int label_index = 0;
  Eigen::VectorXd scores;  // one entry per class, higher preferred
};

namespace detail {

inline void check_model(const FittedModel& model) {
  if (model.classes.empty()) {
    throw ConfigError("model has no classes");
  }
  for (const ClassParams& cp : model.classes) {
    if (cp.mu.size() != model.classes.front().mu.size()) {
      throw DimensionMismatch("model classes disagree on dimension");
    }
  }
  const bool wants_c =
      model.kind == Method::GQDA || model.kind == Method::RGQDA;
  if (wants_c != model.threshold_c.has_value()) {
    throw ConfigError("threshold_c must be present exactly for GQDA/RGQDA");
  }
  if ((model.kind == Method::TQDA) !=
      (model.nu.size() == model.classes.size() && !model.nu.empty())) {
    throw ConfigError("per-class nu must be present exactly for t-QDA");
  }
}

// One score column per class; rows follow X.
inline Eigen::MatrixXd score_matrix(const FittedModel& model,
                                    const Eigen::MatrixXd& X) {
  check_model(model);
  const Eigen::Index m = model.dim();
  if (X.cols() != m) {
    throw DimensionMismatch("score_matrix: point dimension " +
                            std::to_string(X.cols()) + " vs model " +
                            std::to_string(m));
  }
  const double floor = default_t_floor(m);
  const double md = static_cast<double>(m);
  Eigen::MatrixXd scores(X.rows(), model.num_classes());
  for (int k = 0; k < model.num_classes(); ++k) {
    const ClassParams& cp = model.classes[k];
    const Eigen::VectorXd t = mahalanobis_sq_rows(X, cp.mu, cp.chol);
    const double log_det = cp.chol.log_det;
    switch (model.kind) {
      case Method::FEMDA:
        scores.col(k) =
            -(t.cwiseMax(floor).array().log() + log_det / md).matrix();
        break;
      case Method::QDA:
      case Method::LDA:
      case Method::RobustQDA:
        scores.col(k) = -0.5 * (t.array() + log_det).matrix();
        break;
      case Method::TQDA: {
        const double nu = model.nu[k];
        const double c = std::lgamma(0.5 * (nu + md)) -
                         std::lgamma(0.5 * nu) -
                         0.5 * md * std::log(nu * M_PI) - 0.5 * log_det;
        scores.col(k) =
            (c - 0.5 * (nu + md) *
                     (t.array() / nu).unaryExpr(
                         [](double v) { return std::log1p(v); }))
                .matrix();
        break;
      }
      case Method::GQDA:
      case Method::RGQDA:
        scores.col(k) = -(t.array() + *model.threshold_c * log_det).matrix();
        break;
    }
  }
  return scores;
}

// Deterministic tie-break: the lowest class index among maxima.
inline int argmax_row(const Eigen::RowVectorXd& row) {
  int best = 0;
  for (int k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return best;
}

}  // namespace detail

// FEMDA rule: score_k = -[ (1/m) log|Sigma_k| + log t_k ]. The argmax over
// k is the pairwise log-distance rule; scores are unchanged by per-class
// rescaling of the scatters.
inline Eigen::VectorXd femda_scores(const Eigen::VectorXd& x,
                                    const FittedModel& model) {
  if (model.kind != Method::FEMDA) {
    throw ConfigError("femda_scores: model kind is not FEMDA");
  }
  return detail::score_matrix(model, x.transpose()).row(0);
}

// Gaussian rule with uniform priors: score_k = -(1/2)[ log|Sigma_k| + t_k ].
// Serves QDA, LDA (pooled scatter) and RobustQDA (Huber plug-in).
inline Eigen::VectorXd qda_scores(const Eigen::VectorXd& x,
                                  const FittedModel& model) {
  if (model.kind != Method::QDA && model.kind != Method::LDA &&
      model.kind != Method::RobustQDA) {
    throw ConfigError("qda_scores: model kind is not QDA/LDA/RobustQDA");
  }
  return detail::score_matrix(model, x.transpose()).row(0);
}

// Multivariate-t log-density up to the shared prior.
inline Eigen::VectorXd tqda_scores(const Eigen::VectorXd& x,
                                   const FittedModel& model) {
  if (model.kind != Method::TQDA) {
    throw ConfigError("tqda_scores: model kind is not t-QDA");
  }
  return detail::score_matrix(model, x.transpose()).row(0);
}

inline Eigen::VectorXd gqda_scores(const Eigen::VectorXd& x,
                                   const FittedModel& model) {
  if (model.kind != Method::GQDA && model.kind != Method::RGQDA) {
    throw ConfigError("gqda_scores: model kind is not GQDA/RGQDA");
  }
  return detail::score_matrix(model, x.transpose()).row(0);
}

inline std::vector<double> default_gqda_grid() {
  std::vector<double> grid;
  grid.reserve(100);
  for (int i = 1; i <= 100; ++i) grid.push_back(0.05 * i);
  return grid;
}

// Pick the threshold c minimizing training misclassification of the rule
// score_k = -[ t_k + c log|Sigma_k| ]. Ties prefer the c closest to 1,
// then the smaller c.
inline double gqda_select_c(const LabeledDataset& train,
                            const std::vector<ClassParams>& per_class,
                            const std::vector<double>& grid) {
  if (grid.empty()) {
    throw EmptyGrid("gqda_select_c: empty grid");
  }
  if (per_class.size() < 2) {
    throw ConfigError("gqda_select_c: need at least two classes");
  }
  const int K = static_cast<int>(per_class.size());
  const Eigen::Index n = train.rows();
  Eigen::MatrixXd t(n, K);
  Eigen::VectorXd log_dets(K);
  for (int k = 0; k < K; ++k) {
    t.col(k) =
        mahalanobis_sq_rows(train.features, per_class[k].mu, per_class[k].chol);
    log_dets[k] = per_class[k].chol.log_det;
  }
  double best_c = grid.front();
  Eigen::Index best_errors = n + 1;
  for (double c : grid) {
    Eigen::Index errors = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::RowVectorXd row =
          -(t.row(i) + c * log_dets.transpose());
      if (detail::argmax_row(row) != train.labels[i]) ++errors;
    }
    const bool better =
        errors < best_errors ||
        (errors == best_errors &&
         (std::abs(c - 1.0) < std::abs(best_c - 1.0) ||
          (std::abs(c - 1.0) == std::abs(best_c - 1.0) && c < best_c)));
    if (better) {
      best_errors = errors;
      best_c = c;
    }
  }
  return best_c;
}

// Batch prediction with the kind-appropriate scorer; deterministic
// tie-break to the lowest class index.
inline std::vector<Prediction> predict(const FittedModel& model,
                                       const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd scores = detail::score_matrix(model, X);
  std::vector<Prediction> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[i].scores = scores.row(i);
    out[i].label_index = detail::argmax_row(scores.row(i));
  }
  return out;
}

inline std::vector<int> predict_labels(const FittedModel& model,
                                       const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd scores = detail::score_matrix(model, X);
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[i] = detail::argmax_row(scores.row(i));
  }
  return out;
}

struct Evaluation {
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;  // [truth][predicted]
};

inline Evaluation evaluate(const std::vector<int>& preds,
                           const std::vector<int>& truth, int num_classes) {
  if (preds.size() != truth.size()) {
    throw LengthMismatch("evaluate: " + std::to_string(preds.size()) +
                         " predictions vs " + std::to_string(truth.size()) +
                         " labels");
  }
  Evaluation ev;
  ev.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ev.confusion(truth[i], preds[i]) += 1;
    correct += (preds[i] == truth[i]);
  }
  ev.accuracy =
      preds.empty() ? 0.0
                    : static_cast<double>(correct) /
                          static_cast<double>(preds.size());
  return ev;
}

// Fit every class of the training set with the estimator the method calls
// for, then attach the method-specific globals.
inline FittedModel fit_model(Method kind, const LabeledDataset& train,
                             const FitOptions& opts = {},
                             const std::vector<double>& gqda_grid =
                                 default_gqda_grid()) {
  validate(train);
  const int K = train.num_classes();
  FittedModel model;
  model.kind = kind;
  model.class_labels = train.label_names;
  model.classes.reserve(K);

  for (int k = 0; k < K; ++k) {
    const Eigen::MatrixXd X = rows_for_class(train, k);
    try {
      switch (kind) {
        case Method::FEMDA:
          model.classes.push_back(fit_femda(X, opts));
          break;
        case Method::QDA:
        case Method::LDA:
        case Method::GQDA:
          model.classes.push_back(fit_gaussian(X));
          break;
        case Method::RobustQDA:
        case Method::RGQDA:
          model.classes.push_back(fit_huber_m(X, opts));
          break;
        case Method::TQDA: {
          StudentParams sp = fit_student_em(X, opts);
          model.nu.push_back(sp.nu);
          model.classes.push_back(std::move(sp.base));
          break;
        }
      }
    } catch (const DegenerateClass& e) {
      throw DegenerateClass("class '" + train.label_names[k] +
                            "': " + e.what());
    }
  }

  if (kind == Method::LDA) {
    const SpdMatrix pooled = pooled_covariance(model.classes);
    const CholFactor chol = cholesky_spd(pooled);
    for (ClassParams& cp : model.classes) {
      cp.sigma = pooled;
      cp.chol = chol;
    }
  }
  if (kind == Method::GQDA || kind == Method::RGQDA) {
    model.threshold_c = gqda_select_c(train, model.classes, gqda_grid);
  }
  return model;
}

}  // namespace femda

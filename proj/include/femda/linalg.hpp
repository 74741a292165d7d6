#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "femda/errors.hpp"

namespace femda {

// Squared-Mahalanobis clamp: a point sitting exactly on a class mean would
// otherwise produce an infinite weight / log term.
inline double default_t_floor(Eigen::Index m) {
  return 1e-10 * static_cast<double>(m);
}

// Dense symmetric positive-definite matrix. The constructor checks symmetry
// (1e-12 relative) and stores the exactly symmetrized entries; positive
// definiteness is established lazily by cholesky_spd().
class SpdMatrix {
 public:
  SpdMatrix() = default;

  explicit SpdMatrix(Eigen::MatrixXd entries) {
    if (entries.rows() != entries.cols() || entries.rows() < 1) {
      throw DimensionMismatch("SpdMatrix: expected a square matrix, got " +
                              std::to_string(entries.rows()) + "x" +
                              std::to_string(entries.cols()));
    }
    const double scale = entries.cwiseAbs().maxCoeff();
    const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(scale, 1.0)) {
      throw NotSymmetric("SpdMatrix: asymmetry " + std::to_string(asym) +
                         " exceeds tolerance");
    }
    entries_ = 0.5 * (entries + entries.transpose());
  }

  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double trace() const { return entries_.trace(); }

 private:
  Eigen::MatrixXd entries_;
};

// Lower-triangular Cholesky factor with the log-determinant of the source.
struct CholFactor {
  Eigen::MatrixXd lower;
  double log_det = 0.0;
};

namespace detail {

inline bool try_llt(const Eigen::MatrixXd& m, Eigen::MatrixXd& lower,
                    double& log_det) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double d = lower(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    acc += std::log(d);
  }
  log_det = 2.0 * acc;
  return std::isfinite(log_det);
}

}  // namespace detail

// Factor M = L L^T. On pivot failure one diagonal jitter of
// 1e-10 * trace(M)/m is applied; a second failure throws, which signals
// degenerate class data (n_k <= m or collinear features).
inline CholFactor cholesky_spd(const SpdMatrix& M) {
  CholFactor f;
  if (detail::try_llt(M.entries(), f.lower, f.log_det)) return f;
  const Eigen::Index m = M.dim();
  const double jitter = 1e-10 * M.trace() / static_cast<double>(m);
  Eigen::MatrixXd bumped = M.entries();
  bumped.diagonal().array() += jitter;
  if (detail::try_llt(bumped, f.lower, f.log_det)) return f;
  throw NotPositiveDefinite(
      "cholesky_spd: factorization failed after one jitter pass (dim " +
      std::to_string(m) + ")");
}

// (x - mu)^T Sigma^{-1} (x - mu) via a triangular solve against the factor.
inline double mahalanobis_sq(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& mu,
                             const CholFactor& chol) {
  if (x.size() != mu.size() || x.size() != chol.lower.rows()) {
    throw DimensionMismatch("mahalanobis_sq: size mismatch");
  }
  Eigen::VectorXd y = x - mu;
  chol.lower.triangularView<Eigen::Lower>().solveInPlace(y);
  return y.squaredNorm();
}

// Row-batched variant: one squared distance per row of X.
inline Eigen::VectorXd mahalanobis_sq_rows(const Eigen::MatrixXd& X,
                                           const Eigen::VectorXd& mu,
                                           const CholFactor& chol) {
  if (X.cols() != mu.size() || X.cols() != chol.lower.rows()) {
    throw DimensionMismatch("mahalanobis_sq_rows: size mismatch");
  }
  Eigen::MatrixXd y = (X.rowwise() - mu.transpose()).transpose();
  chol.lower.triangularView<Eigen::Lower>().solveInPlace(y);
  return y.colwise().squaredNorm();
}

// Rescale to trace m. The FEMDA fixed point only determines the scatter up
// to scale, so a convention is needed; trace = m keeps the identity fixed.
inline SpdMatrix normalize_scatter(const SpdMatrix& M) {
  const double tr = M.trace();
  if (!(tr > 0.0)) {
    throw ZeroTrace("normalize_scatter: trace " + std::to_string(tr));
  }
  const double s = static_cast<double>(M.dim()) / tr;
  return SpdMatrix(s * M.entries());
}

}  // namespace femda

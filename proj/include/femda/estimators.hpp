#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "femda/errors.hpp"
#include "femda/linalg.hpp"

namespace femda {

// Stopping rule and numerical guards shared by the iterative estimators.
struct FitOptions {
  double tol = 1e-6;         // relative-change stopping threshold
  int max_iter = 100;
  std::optional<double> t_floor;  // clamp for t_{i,k}; default 1e-10 * m
  double huber_quantile = 0.9;
  double nu_min = 0.5;       // degrees-of-freedom bracket for the t fit
  double nu_max = 200.0;

  double resolve_t_floor(Eigen::Index m) const {
    if (t_floor) {
      if (!(*t_floor > 0.0)) {
        throw ConfigError("FitOptions: t_floor must be positive");
      }
      return *t_floor;
    }
    return default_t_floor(m);
  }
};

// Per-class location/scatter estimate with the cached factorization.
struct ClassParams {
  Eigen::VectorXd mu;
  SpdMatrix sigma;
  CholFactor chol;
  Eigen::Index n_obs = 0;
  int iterations = 0;
  bool converged = true;
};

// t-distribution parameters: location/scatter plus degrees of freedom.
struct StudentParams {
  ClassParams base;
  double nu = 0.0;
};

namespace detail {

inline void check_fit_input(const Eigen::MatrixXd& X, const char* who) {
  if (X.rows() <= X.cols()) {
    throw DegenerateClass(std::string(who) + ": need n > m, got n=" +
                          std::to_string(X.rows()) + " m=" +
                          std::to_string(X.cols()));
  }
  if (!X.allFinite()) {
    throw DegenerateClass(std::string(who) + ": non-finite observation");
  }
}

inline Eigen::VectorXd coordinatewise_median(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::VectorXd med(X.cols());
  std::vector<double> col(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) col[i] = X(i, j);
    const auto mid = col.begin() + n / 2;
    std::nth_element(col.begin(), mid, col.end());
    if (n % 2 == 1) {
      med[j] = *mid;
    } else {
      const double hi = *mid;
      med[j] = 0.5 * (*std::max_element(col.begin(), mid) + hi);
    }
  }
  return med;
}

// (1/den) * sum_i w_i (x_i - mu)(x_i - mu)^T
inline Eigen::MatrixXd weighted_scatter(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& mu,
                                        const Eigen::VectorXd& w, double den) {
  const Eigen::MatrixXd c = X.rowwise() - mu.transpose();
  return (c.transpose() * w.asDiagonal() * c) / den;
}

inline double rel_change(const Eigen::MatrixXd& next,
                         const Eigen::MatrixXd& cur) {
  return (next - cur).norm() / cur.norm();
}

}  // namespace detail

// Sample mean and maximum-likelihood covariance (1/n normalization).
inline ClassParams fit_gaussian(const Eigen::MatrixXd& X) {
  detail::check_fit_input(X, "fit_gaussian");
  ClassParams p;
  p.mu = X.colwise().mean();
  const Eigen::MatrixXd c = X.rowwise() - p.mu.transpose();
  p.sigma = SpdMatrix((c.transpose() * c) / static_cast<double>(X.rows()));
  try {
    p.chol = cholesky_spd(p.sigma);
  } catch (const NotPositiveDefinite& e) {
    throw DegenerateClass(std::string("fit_gaussian: ") + e.what());
  }
  p.n_obs = X.rows();
  return p;
}

// Fixed-point estimator with weights w_i = 1/t_i, the maximum-likelihood
// solution when each observation carries its own elliptical generator and
// scale. The scatter update carries the m/n factor and is renormalized to
// trace m each sweep (the equations only identify the scatter up to scale).
//
// Sweep order: weights at the current iterate, location update, weights at
// the new location, scatter update. Returns the first iterate whose next
// update moves it by at most tol (relative), so the fixed-point residual of
// the returned parameters is itself <= tol.
inline ClassParams fit_femda(const Eigen::MatrixXd& X, const FitOptions& opts,
                             const Eigen::VectorXd& mu0,
                             const SpdMatrix& sigma0) {
  detail::check_fit_input(X, "fit_femda");
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  const double floor = opts.resolve_t_floor(m);
  const double mn = static_cast<double>(m) / static_cast<double>(n);

  ClassParams p;
  p.mu = mu0;
  p.sigma = normalize_scatter(sigma0);
  p.chol = cholesky_spd(p.sigma);
  p.n_obs = n;
  p.converged = false;

  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::VectorXd w1 =
        mahalanobis_sq_rows(X, p.mu, p.chol).cwiseMax(floor).cwiseInverse();
    const Eigen::VectorXd mu_next = (X.transpose() * w1) / w1.sum();
    const Eigen::VectorXd w2 =
        mahalanobis_sq_rows(X, mu_next, p.chol).cwiseMax(floor).cwiseInverse();
    const SpdMatrix sigma_next = normalize_scatter(
        SpdMatrix(detail::weighted_scatter(X, mu_next, w2 * mn, 1.0)));

    const double dmu = (mu_next - p.mu).norm() / (1.0 + p.mu.norm());
    const double dsigma =
        detail::rel_change(sigma_next.entries(), p.sigma.entries());
    if (dmu <= opts.tol && dsigma <= opts.tol) {
      p.converged = true;
      return p;
    }
    p.mu = mu_next;
    p.sigma = sigma_next;
    p.chol = cholesky_spd(p.sigma);
    p.iterations = it + 1;
  }
  return p;
}

inline ClassParams fit_femda(const Eigen::MatrixXd& X,
                             const FitOptions& opts = {}) {
  detail::check_fit_input(X, "fit_femda");
  const Eigen::MatrixXd eye =
      Eigen::MatrixXd::Identity(X.cols(), X.cols());
  return fit_femda(X, opts, detail::coordinatewise_median(X), SpdMatrix(eye));
}

// chi-square(m) quantile; the Huber truncation threshold a.
inline double huber_threshold(Eigen::Index m, double quantile) {
  return boost::math::quantile(
      boost::math::chi_squared(static_cast<double>(m)), quantile);
}

// b = E[min(chi2_m, a)] / m, in closed form via the chi-square CDF:
// E[min(chi2_m, a)] = m F_{m+2}(a) + a (1 - F_m(a)). Dividing the scatter
// by b makes it consistent for the covariance under Gaussian data.
inline double huber_consistency(Eigen::Index m, double a) {
  const boost::math::chi_squared cm(static_cast<double>(m));
  const boost::math::chi_squared cm2(static_cast<double>(m + 2));
  return boost::math::cdf(cm2, a) +
         a * (1.0 - boost::math::cdf(cm, a)) / static_cast<double>(m);
}

namespace detail {

// Median/MAD starting point. A covariance-based start can mask gross
// outliers entirely (they inflate the initial scatter enough to stay below
// the truncation threshold), so the iteration must begin from a robust
// diagonal. Zero MADs fall back to the column standard deviation.
inline void robust_init(const Eigen::MatrixXd& X, Eigen::VectorXd& mu,
                        Eigen::MatrixXd& sigma) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  mu = coordinatewise_median(X);
  const Eigen::MatrixXd c = X.rowwise() - mu.transpose();
  const Eigen::VectorXd mad = coordinatewise_median(c.cwiseAbs());
  sigma = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double s = 1.4826 * mad[j];  // Gaussian-consistent MAD scale
    if (s == 0.0) {
      s = std::sqrt(c.col(j).squaredNorm() / static_cast<double>(n));
    }
    if (s == 0.0) s = 1.0;
    sigma(j, j) = s * s;
  }
}

}  // namespace detail

// Huber M-estimator of location and scatter: weights u(t) = min(1, a/t)
// with a the chi-square(m) quantile at opts.huber_quantile, scatter scaled
// by the Gaussian-consistency constant b.
inline ClassParams fit_huber_m(const Eigen::MatrixXd& X,
                               const FitOptions& opts = {}) {
  detail::check_fit_input(X, "fit_huber_m");
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  const double a = huber_threshold(m, opts.huber_quantile);
  const double b = huber_consistency(m, a);
  const auto weights = [a](const Eigen::VectorXd& t) {
    return t.unaryExpr([a](double ti) { return ti <= a ? 1.0 : a / ti; });
  };

  ClassParams p;
  {
    Eigen::VectorXd mu0;
    Eigen::MatrixXd sigma0;
    detail::robust_init(X, mu0, sigma0);
    p.mu = std::move(mu0);
    p.sigma = SpdMatrix(std::move(sigma0));
    try {
      p.chol = cholesky_spd(p.sigma);
    } catch (const NotPositiveDefinite& e) {
      throw DegenerateClass(std::string("fit_huber_m: ") + e.what());
    }
    p.n_obs = n;
  }
  p.converged = false;

  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::VectorXd u1 = weights(mahalanobis_sq_rows(X, p.mu, p.chol));
    const Eigen::VectorXd mu_next = (X.transpose() * u1) / u1.sum();
    const Eigen::VectorXd u2 = weights(mahalanobis_sq_rows(X, mu_next, p.chol));
    Eigen::MatrixXd s_next_raw =
        detail::weighted_scatter(X, mu_next, u2, b * static_cast<double>(n));
    SpdMatrix sigma_next(std::move(s_next_raw));

    const double dmu = (mu_next - p.mu).norm() / (1.0 + p.mu.norm());
    const double dsigma =
        detail::rel_change(sigma_next.entries(), p.sigma.entries());
    if (dmu <= opts.tol && dsigma <= opts.tol) {
      p.converged = true;
      return p;
    }
    p.mu = mu_next;
    p.sigma = std::move(sigma_next);
    try {
      p.chol = cholesky_spd(p.sigma);
    } catch (const NotPositiveDefinite& e) {
      throw DegenerateClass(std::string("fit_huber_m: ") + e.what());
    }
    p.iterations = it + 1;
  }
  return p;
}

// Observed-data log-likelihood of the multivariate t, given cached squared
// distances t_i and the scatter log-determinant.
inline double student_loglik_cached(const Eigen::VectorXd& t, double log_det,
                                    Eigen::Index m, double nu) {
  const double n = static_cast<double>(t.size());
  const double md = static_cast<double>(m);
  const double c = std::lgamma(0.5 * (nu + md)) - std::lgamma(0.5 * nu) -
                   0.5 * md * std::log(nu * M_PI);
  const double tail =
      (t.array() / nu).unaryExpr([](double v) { return std::log1p(v); }).sum() *
      0.5 * (nu + md);
  return n * c - 0.5 * n * log_det - tail;
}

inline double student_loglik(const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& mu, const CholFactor& chol,
                             double nu) {
  return student_loglik_cached(mahalanobis_sq_rows(X, mu, chol), chol.log_det,
                               X.cols(), nu);
}

namespace detail {

// Golden-section maximization of the profile likelihood over log(nu);
// endpoints are kept as candidates so a monotone profile pins the bracket.
inline double maximize_nu(const Eigen::VectorXd& t, double log_det,
                          Eigen::Index m, double nu_min, double nu_max) {
  const auto f = [&](double nu) {
    return student_loglik_cached(t, log_det, m, nu);
  };
  constexpr double kInvPhi = 0.6180339887498949;
  const double lo0 = std::log(nu_min), hi0 = std::log(nu_max);
  double lo = lo0, hi = hi0;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(std::exp(x1));
  double f2 = f(std::exp(x2));
  for (int i = 0; i < 90 && hi - lo > 1e-10; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(std::exp(x2));
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(std::exp(x1));
    }
  }
  // A monotone profile never moves one edge; report that bracket endpoint
  // exactly rather than a point 1e-10 inside it.
  if (hi == hi0) return nu_max;
  if (lo == lo0) return nu_min;
  const double interior = std::exp(0.5 * (lo + hi));
  double best = interior;
  double best_f = f(interior);
  for (double cand : {nu_min, nu_max}) {
    const double fc = f(cand);
    if (fc > best_f) {
      best = cand;
      best_f = fc;
    }
  }
  return best;
}

}  // namespace detail

// One ECME sweep for the multivariate t: conditional weights
// u_i = (nu+m)/(nu+t_i), weighted location/scatter update, then nu from the
// observed-data likelihood. Each stage cannot decrease the observed
// likelihood, which the fitter's monotonicity contract relies on.
inline StudentParams student_em_sweep(const Eigen::MatrixXd& X,
                                      const StudentParams& cur,
                                      const FitOptions& opts = {}) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  const Eigen::VectorXd t = mahalanobis_sq_rows(X, cur.base.mu, cur.base.chol);
  const Eigen::VectorXd u =
      ((cur.nu + static_cast<double>(m)) / (t.array() + cur.nu)).matrix();
  StudentParams next;
  next.base.mu = (X.transpose() * u) / u.sum();
  next.base.sigma = SpdMatrix(
      detail::weighted_scatter(X, next.base.mu, u, static_cast<double>(n)));
  try {
    next.base.chol = cholesky_spd(next.base.sigma);
  } catch (const NotPositiveDefinite& e) {
    throw DegenerateClass(std::string("student_em_sweep: ") + e.what());
  }
  next.base.n_obs = n;

  const Eigen::VectorXd t_new =
      mahalanobis_sq_rows(X, next.base.mu, next.base.chol);
  next.nu = detail::maximize_nu(t_new, next.base.chol.log_det, m, opts.nu_min,
                                opts.nu_max);
  if (student_loglik_cached(t_new, next.base.chol.log_det, m, next.nu) <
      student_loglik_cached(t_new, next.base.chol.log_det, m, cur.nu)) {
    next.nu = cur.nu;
  }
  return next;
}

// EM fit of the multivariate t distribution with per-class degrees of
// freedom searched over [nu_min, nu_max].
inline StudentParams fit_student_em(const Eigen::MatrixXd& X,
                                    const FitOptions& opts = {}) {
  detail::check_fit_input(X, "fit_student_em");
  StudentParams p;
  p.base = fit_gaussian(X);
  p.nu = std::sqrt(opts.nu_min * opts.nu_max);
  p.base.converged = false;

  for (int it = 0; it < opts.max_iter; ++it) {
    StudentParams next = student_em_sweep(X, p, opts);
    const double dmu =
        (next.base.mu - p.base.mu).norm() / (1.0 + p.base.mu.norm());
    const double dsigma = detail::rel_change(next.base.sigma.entries(),
                                             p.base.sigma.entries());
    const double dnu = std::abs(next.nu - p.nu) / (1.0 + std::abs(p.nu));
    if (dmu <= opts.tol && dsigma <= opts.tol && dnu <= opts.tol) {
      p.base.converged = true;
      return p;
    }
    next.base.iterations = it + 1;
    next.base.converged = false;
    p = std::move(next);
  }
  return p;
}

// n-weighted average of class scatters (the LDA pooled covariance).
inline SpdMatrix pooled_covariance(const std::vector<ClassParams>& per_class) {
  if (per_class.empty()) {
    throw LengthMismatch("pooled_covariance: no classes");
  }
  const Eigen::Index m = per_class.front().sigma.dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
  double total = 0.0;
  for (const ClassParams& p : per_class) {
    acc += static_cast<double>(p.n_obs) * p.sigma.entries();
    total += static_cast<double>(p.n_obs);
  }
  return SpdMatrix(acc / total);
}

}  // namespace femda

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "femda/dataset.hpp"
#include "femda/errors.hpp"
#include "femda/linalg.hpp"
#include "femda/rng.hpp"

namespace femda {

enum class EsFamily { GeneralizedGaussian, StudentT, KDist };

// Elliptically-symmetric sample description: family, shape parameter
// (beta for the generalized Gaussian, nu otherwise) and the per-point
// texture multiplying the scatter.
struct EsPointSpec {
  EsFamily family = EsFamily::GeneralizedGaussian;
  double shape = 1.0;
  double texture_tau = 1.0;
};

// Shape sharing: SharedPerCluster ("green") keeps one shape parameter per
// family for the whole experiment, so every point of a cluster, and every
// cluster, sees the same beta/nu; PerPoint ("red") redraws per point.
enum class ShapeMode { SharedPerCluster, PerPoint };

// Recipe for one synthetic experiment.
struct ScenarioSpec {
  int m = 10;
  int num_classes = 5;
  Eigen::Index n_train = 5000;
  Eigen::Index n_test = 20000;
  std::array<double, 3> proportions{1.0, 0.0, 0.0};  // GG, T, K fractions
  ShapeMode shape_mode = ShapeMode::SharedPerCluster;
  double contamination_rate = 0.0;
  std::uint64_t seed = 0;
};

inline void validate(const ScenarioSpec& spec) {
  if (spec.m < 2 || spec.num_classes < 1 || spec.n_train < 1 ||
      spec.n_test < 1) {
    throw ConfigError("scenario: m >= 2 and positive sizes required");
  }
  double sum = 0.0;
  for (double p : spec.proportions) {
    if (p < 0.0) throw ConfigError("scenario: negative family proportion");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw SumError("scenario: family proportions sum to " +
                   std::to_string(sum));
  }
  if (spec.contamination_rate < 0.0 || spec.contamination_rate >= 1.0) {
    throw ConfigError("scenario: contamination rate must be in [0, 1)");
  }
}

// True cluster parameters: unit-norm mean and SPD scatter.
struct ClusterTruth {
  Eigen::VectorXd mu;
  SpdMatrix sigma;
};

// Shape-parameter ranges used by the scenario defaults.
inline constexpr double kBetaLow = 0.25, kBetaHigh = 10.0;
inline constexpr double kNuLow = 1.0, kNuHigh = 10.0;
// Eigenvalue law for random scatters. Condition numbers stay <= 10, and
// against unit-sphere cluster means this range puts clean benchmark
// accuracies in the mid-to-high seventies, where the published method
// orderings are meaningful and the contamination cloud (average eigenvalue
// m) is genuinely far from the data.
inline constexpr double kEigLow = 0.1, kEigHigh = 1.0;

namespace detail {

inline Eigen::VectorXd gaussian_vector(Eigen::Index m, SplitMix64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = normal(rng);
  return v;
}

inline Eigen::VectorXd unit_sphere_vector(Eigen::Index m, SplitMix64& rng) {
  Eigen::VectorXd v = gaussian_vector(m, rng);
  double norm = v.norm();
  while (norm == 0.0) {  // probability zero, but keep the contract total
    v = gaussian_vector(m, rng);
    norm = v.norm();
  }
  return v / norm;
}

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
// sign correction that makes the factorization unique (R diagonal > 0).
inline Eigen::MatrixXd haar_orthogonal(Eigen::Index m, SplitMix64& rng) {
  Eigen::MatrixXd g(m, m);
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) g(i, j) = normal(rng);
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace detail

// Q diag(lambda) Q^T with Haar-random Q and lambda_i ~ U(kEigLow, kEigHigh).
inline SpdMatrix random_scatter(Eigen::Index m, SplitMix64& rng) {
  const Eigen::MatrixXd q = detail::haar_orthogonal(m, rng);
  std::uniform_real_distribution<double> eig(kEigLow, kEigHigh);
  Eigen::VectorXd lambda(m);
  for (Eigen::Index i = 0; i < m; ++i) lambda[i] = eig(rng);
  return SpdMatrix(q * lambda.asDiagonal() * q.transpose());
}

// Contamination scatter: same construction as the cluster scatters,
// rescaled so the average eigenvalue equals m (trace = m^2), which makes
// the noise cloud wide enough to straddle several clusters.
inline SpdMatrix noise_scatter(Eigen::Index m, SplitMix64& rng) {
  const SpdMatrix base = random_scatter(m, rng);
  const double md = static_cast<double>(m);
  return SpdMatrix(base.entries() * (md * md / base.trace()));
}

// Cluster means drawn uniformly on the unit sphere, scatters from
// random_scatter; one independent substream per cluster.
inline std::vector<ClusterTruth> random_cluster_params(int num_classes,
                                                       Eigen::Index m,
                                                       SplitMix64& rng) {
  if (num_classes < 1 || m < 2) {
    throw ConfigError("random_cluster_params: K >= 1 and m >= 2 required");
  }
  std::vector<ClusterTruth> out;
  out.reserve(num_classes);
  for (int k = 0; k < num_classes; ++k) {
    SplitMix64 sub = rng.split(static_cast<std::uint64_t>(k));
    ClusterTruth truth;
    truth.mu = detail::unit_sphere_vector(m, sub);
    truth.sigma = random_scatter(m, sub);
    out.push_back(std::move(truth));
  }
  return out;
}

namespace detail {

// Stochastic representations, with the texture tau multiplying the scatter
// (so the effective factor is sqrt(tau) * L):
//   GG: mu + Gamma(m/(2 beta), 2)^(1/(2 beta)) * L * U(sphere)
//   t:  mu + (L z) * sqrt(1 / Gamma(nu/2, 2/nu))
//   k:  mu + (L z) * sqrt(Gamma(nu, 1/nu))
// Gamma(a, b) is shape/scale with mean a*b.
inline Eigen::VectorXd sample_es_point_chol(const Eigen::VectorXd& mu,
                                            const Eigen::MatrixXd& lower,
                                            const EsPointSpec& spec,
                                            SplitMix64& rng) {
  if (!(spec.shape > 0.0)) {
    throw ConfigError("sample_es_point: shape must be positive");
  }
  if (spec.texture_tau < 1.0 - 1e-12) {
    throw ConfigError("sample_es_point: texture tau must be >= 1");
  }
  const Eigen::Index m = mu.size();
  const double sqrt_tau = std::sqrt(spec.texture_tau);
  switch (spec.family) {
    case EsFamily::GeneralizedGaussian: {
      const double beta = spec.shape;
      std::gamma_distribution<double> radial(
          static_cast<double>(m) / (2.0 * beta), 2.0);
      const double r = std::pow(radial(rng), 1.0 / (2.0 * beta));
      return mu + (sqrt_tau * r) * (lower * unit_sphere_vector(m, rng));
    }
    case EsFamily::StudentT: {
      const double nu = spec.shape;
      const Eigen::VectorXd z = gaussian_vector(m, rng);
      std::gamma_distribution<double> mix(0.5 * nu, 2.0 / nu);
      return mu + (sqrt_tau / std::sqrt(mix(rng))) * (lower * z);
    }
    case EsFamily::KDist: {
      const double nu = spec.shape;
      const Eigen::VectorXd z = gaussian_vector(m, rng);
      std::gamma_distribution<double> mix(nu, 1.0 / nu);
      return mu + (sqrt_tau * std::sqrt(mix(rng))) * (lower * z);
    }
  }
  throw ConfigError("sample_es_point: unknown family");
}

}  // namespace detail

inline Eigen::VectorXd sample_es_point(const ClusterTruth& truth,
                                       const EsPointSpec& spec,
                                       SplitMix64& rng) {
  const CholFactor chol = cholesky_spd(truth.sigma);
  return detail::sample_es_point_chol(truth.mu, chol.lower, spec, rng);
}

namespace detail {

inline constexpr std::uint64_t kTagClusters = 0x01;
inline constexpr std::uint64_t kTagSharedShapes = 0x02;
inline constexpr std::uint64_t kTagTrain = 0x03;
inline constexpr std::uint64_t kTagTest = 0x04;

inline double shape_draw(EsFamily family, SplitMix64& rng) {
  if (family == EsFamily::GeneralizedGaussian) {
    return std::uniform_real_distribution<double>(kBetaLow, kBetaHigh)(rng);
  }
  return std::uniform_real_distribution<double>(kNuLow, kNuHigh)(rng);
}

inline EsFamily pick_family(const std::array<double, 3>& proportions,
                            SplitMix64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < proportions[0]) return EsFamily::GeneralizedGaussian;
  if (u < proportions[0] + proportions[1]) return EsFamily::StudentT;
  return EsFamily::KDist;
}

inline LabeledDataset generate_split(const ScenarioSpec& spec,
                                     const std::vector<ClusterTruth>& truths,
                                     const std::vector<CholFactor>& chols,
                                     const std::array<double, 3>& shared_shapes,
                                     std::uint64_t split_tag, Eigen::Index n,
                                     const SplitMix64& root,
                                     std::vector<EsPointSpec>* trace) {
  const int K = spec.num_classes;
  LabeledDataset ds;
  ds.features.resize(n, spec.m);
  ds.labels.reserve(n);
  for (int k = 0; k < K; ++k) {
    ds.label_names.push_back("C" + std::to_string(k));
  }
  if (trace) trace->reserve(n);
  const SplitMix64 split_stream = root.split(split_tag);
  Eigen::Index row = 0;
  for (int k = 0; k < K; ++k) {
    // even split, remainder to the low class indices
    const Eigen::Index n_k = n / K + (k < static_cast<int>(n % K) ? 1 : 0);
    const SplitMix64 class_stream =
        split_stream.split(static_cast<std::uint64_t>(k));
    for (Eigen::Index i = 0; i < n_k; ++i) {
      SplitMix64 point_rng = class_stream.split(static_cast<std::uint64_t>(i));
      EsPointSpec pt;
      pt.family = pick_family(spec.proportions, point_rng);
      pt.shape =
          spec.shape_mode == ShapeMode::PerPoint
              ? shape_draw(pt.family, point_rng)
              : shared_shapes[static_cast<std::size_t>(pt.family)];
      pt.texture_tau = std::uniform_real_distribution<double>(
          1.0, static_cast<double>(spec.m))(point_rng);
      ds.features.row(row) = sample_es_point_chol(
          truths[k].mu, chols[k].lower, pt, point_rng);
      ds.labels.push_back(k);
      if (trace) trace->push_back(pt);
      ++row;
    }
  }
  ds.source = "synthetic";
  return ds;
}

}  // namespace detail

struct GeneratedScenario {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<ClusterTruth> truths;
};

// Deterministic synthetic benchmark data: shared cluster truths, per-point
// family/shape/texture draws from per-point substreams, rows ordered by
// (class, point index). Optional traces expose the per-point draws.
inline GeneratedScenario generate_scenario(
    const ScenarioSpec& spec, std::vector<EsPointSpec>* trace_train = nullptr,
    std::vector<EsPointSpec>* trace_test = nullptr) {
  validate(spec);
  const SplitMix64 root(spec.seed);
  GeneratedScenario out;
  {
    SplitMix64 cluster_rng = root.split(detail::kTagClusters);
    out.truths = random_cluster_params(spec.num_classes, spec.m, cluster_rng);
  }
  std::vector<CholFactor> chols;
  chols.reserve(out.truths.size());
  for (const ClusterTruth& t : out.truths) chols.push_back(cholesky_spd(t.sigma));

  // One shape per family, shared by every cluster of the experiment. The
  // published benchmark tables require the shared mode to carry no
  // class-discriminative radial-shape information: with distinct shapes per
  // cluster, the t rule gains several accuracy points over the
  // scale-invariant one, which those tables exclude. Drawn unconditionally
  // so both modes consume identical substreams.
  std::array<double, 3> shared;
  {
    SplitMix64 srng = root.split(detail::kTagSharedShapes);
    shared = {detail::shape_draw(EsFamily::GeneralizedGaussian, srng),
              detail::shape_draw(EsFamily::StudentT, srng),
              detail::shape_draw(EsFamily::KDist, srng)};
  }

  out.train = detail::generate_split(spec, out.truths, chols, shared,
                                     detail::kTagTrain, spec.n_train, root,
                                     trace_train);
  out.test = detail::generate_split(spec, out.truths, chols, shared,
                                    detail::kTagTest, spec.n_test, root,
                                    trace_test);
  return out;
}

// Replace floor(rate * n) uniformly chosen rows by draws from
// N(0, noise_sigma); labels are kept. Intended for training data only.
inline LabeledDataset contaminate_synthetic(const LabeledDataset& ds,
                                            double rate,
                                            const SpdMatrix& noise_sigma,
                                            SplitMix64& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("contaminate_synthetic: rate must be in [0, 1)");
  }
  if (noise_sigma.dim() != ds.dim()) {
    throw DimensionMismatch("contaminate_synthetic: noise dimension");
  }
  LabeledDataset out = ds;
  const auto n = static_cast<std::size_t>(ds.rows());
  const auto count = static_cast<std::size_t>(rate * static_cast<double>(n));
  if (count == 0) return out;
  std::vector<std::size_t> rows = sample_without_replacement(n, count, rng);
  std::sort(rows.begin(), rows.end());
  const CholFactor chol = cholesky_spd(noise_sigma);
  for (std::size_t r : rows) {
    out.features.row(static_cast<Eigen::Index>(r)) =
        chol.lower * detail::gaussian_vector(ds.dim(), rng);
  }
  return out;
}

namespace detail {

inline double parse_fraction_token(const std::string& tok) {
  const auto slash = tok.find('/');
  try {
    if (slash == std::string::npos) return std::stod(tok);
    const double num = std::stod(tok.substr(0, slash));
    const double den = std::stod(tok.substr(slash + 1));
    if (den == 0.0) throw ParseError("scenario string: division by zero");
    return num / den;
  } catch (const std::invalid_argument&) {
    throw ParseError("scenario string: bad fraction '" + tok + "'");
  } catch (const std::out_of_range&) {
    throw ParseError("scenario string: fraction out of range '" + tok + "'");
  }
}

}  // namespace detail

// Accepts "0.5GG-0.3T-0.2K" or the table shorthand "0.5-0.3-0.2";
// fractions may be decimals or ratios like 1/3. The three fractions must
// sum to one.
inline std::array<double, 3> parse_scenario_string(const std::string& s) {
  static const std::regex long_form(
      R"(^\s*([0-9./]+)\s*GG\s*-\s*([0-9./]+)\s*T\s*-\s*([0-9./]+)\s*K\s*$)");
  static const std::regex short_form(
      R"(^\s*([0-9./]+)\s*-\s*([0-9./]+)\s*-\s*([0-9./]+)\s*$)");
  std::smatch m;
  if (!std::regex_match(s, m, long_form) &&
      !std::regex_match(s, m, short_form)) {
    throw ParseError("scenario string: expected <f>GG-<f>T-<f>K or <f>-<f>-<f>, got '" +
                     s + "'");
  }
  std::array<double, 3> out{detail::parse_fraction_token(m[1]),
                            detail::parse_fraction_token(m[2]),
                            detail::parse_fraction_token(m[3])};
  const double sum = out[0] + out[1] + out[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw SumError("scenario string: fractions sum to " + std::to_string(sum) +
                   ", expected 1");
  }
  for (double p : out) {
    if (p < 0.0) throw ParseError("scenario string: negative fraction");
  }
  return out;
}

}  // namespace femda

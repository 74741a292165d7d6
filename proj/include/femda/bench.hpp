#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "femda/classifiers.hpp"
#include "femda/dataset.hpp"
#include "femda/datasets_io.hpp"
#include "femda/errors.hpp"
#include "femda/estimators.hpp"
#include "femda/rng.hpp"
#include "femda/synthgen.hpp"
#include "femda/version.hpp"

namespace femda {

enum class BenchMode { Synthetic, Real, Timing };

inline const char* bench_mode_str(BenchMode m) {
  switch (m) {
    case BenchMode::Synthetic: return "synthetic";
    case BenchMode::Real: return "real";
    case BenchMode::Timing: return "timing";
  }
  return "?";
}

// One experiment: what to run, on what data, with which methods.
struct ExperimentConfig {
  BenchMode mode = BenchMode::Synthetic;

  // synthetic / timing
  ScenarioSpec scenario;
  std::string scenario_label = "1-0-0";

  // real
  DatasetName dataset = DatasetName::Ecoli;
  std::string data_path;
  double train_fraction = 0.7;
  bool standardize = false;
  std::vector<double> contamination_schedule{0.0};

  std::vector<Method> methods{Method::QDA, Method::TQDA, Method::GQDA,
                              Method::FEMDA};
  int repetitions = 20;
  int reshuffle_every = 10;
  FitOptions fit_options;
  std::string output_dir = "femda-out";
  std::uint64_t seed = 0;
};

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) {
    throw ConfigError("config: method list is empty");
  }
  if (cfg.repetitions < 1) {
    throw ConfigError("config: repetitions must be >= 1");
  }
  if (cfg.reshuffle_every < 1) {
    throw ConfigError("config: reshuffle_every must be >= 1");
  }
  if (cfg.mode == BenchMode::Real) {
    if (cfg.contamination_schedule.empty()) {
      throw ConfigError("config: contamination schedule is empty");
    }
    for (double r : cfg.contamination_schedule) {
      if (r < 0.0 || r >= 1.0) {
        throw ConfigError("config: contamination rate must be in [0, 1)");
      }
    }
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
      throw ConfigError("config: train fraction must be in (0, 1)");
    }
  } else {
    validate(cfg.scenario);
  }
}

// One (scenario, method, repetition, contamination) cell.
struct RunRecord {
  std::string scenario;
  double contamination_rate = 0.0;
  std::string method;
  int repetition = 0;
  double accuracy = 0.0;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
  double mean_iterations = 0.0;
  bool all_converged = true;
};

struct MethodSummary {
  std::string method;
  double mean_accuracy = 0.0;
  double median_accuracy = 0.0;
  double std_accuracy = 0.0;
  double delta_vs_best = 0.0;  // 0 for the best method, negative otherwise
  bool is_best = false;
  double median_fit_seconds = 0.0;
  double median_predict_seconds = 0.0;
  double mean_iterations = 0.0;
  Eigen::MatrixXi confusion;  // summed over repetitions, [truth][pred]
};

// Summary of one (scenario, contamination rate) group.
struct GroupSummary {
  std::string scenario;
  double contamination_rate = 0.0;
  std::vector<MethodSummary> methods;
};

struct BenchReport {
  ExperimentConfig config;
  std::string version = kVersion;
  std::vector<RunRecord> records;
  std::vector<GroupSummary> groups;
  std::vector<std::string> notes;
};

namespace bench_streams {

// Documented substream tags: any cell of a report can be reproduced from
// the experiment seed alone via these derivations.
inline constexpr std::uint64_t kNoise = 0x10;
inline constexpr std::uint64_t kScenario = 0x11;
inline constexpr std::uint64_t kContamination = 0x12;
inline constexpr std::uint64_t kSplit = 0x13;
inline constexpr std::uint64_t kRealContamination = 0x14;

}  // namespace bench_streams

inline std::uint64_t synthetic_rep_seed(std::uint64_t seed, int rep) {
  return SplitMix64(seed)
      .split(bench_streams::kScenario)
      .split(static_cast<std::uint64_t>(rep))
      .state();
}

inline SpdMatrix synthetic_noise_sigma(const ExperimentConfig& cfg) {
  SplitMix64 rng = SplitMix64(cfg.seed).split(bench_streams::kNoise);
  return noise_scatter(cfg.scenario.m, rng);
}

inline SplitMix64 synthetic_contamination_stream(std::uint64_t seed, int rep) {
  return SplitMix64(seed)
      .split(bench_streams::kContamination)
      .split(static_cast<std::uint64_t>(rep));
}

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (*std::max_element(v.begin(), v.begin() + mid) + hi);
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

struct TimedFit {
  FittedModel model;
  double fit_seconds = 0.0;
  double mean_iterations = 0.0;
  bool all_converged = true;
};

inline TimedFit timed_fit(Method method, const LabeledDataset& train,
                          const FitOptions& opts) {
  using clock = std::chrono::steady_clock;
  TimedFit out;
  const auto t0 = clock::now();
  out.model = fit_model(method, train, opts);
  out.fit_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  double iters = 0.0;
  for (const ClassParams& cp : out.model.classes) {
    iters += cp.iterations;
    out.all_converged &= cp.converged;
  }
  out.mean_iterations = iters / static_cast<double>(out.model.classes.size());
  return out;
}

// Build per-(group, method) summaries from the raw records, applying the
// delta-vs-best convention on mean accuracy.
inline void summarize(BenchReport& report,
                      const std::vector<std::pair<std::string, double>>& keys,
                      const std::vector<std::string>& methods,
                      const std::vector<Eigen::MatrixXi>& confusions) {
  std::size_t conf_idx = 0;
  for (const auto& [scenario, rate] : keys) {
    GroupSummary group;
    group.scenario = scenario;
    group.contamination_rate = rate;
    for (const std::string& method : methods) {
      std::vector<double> acc, fit_s, pred_s, iters;
      for (const RunRecord& r : report.records) {
        if (r.scenario != scenario || r.contamination_rate != rate ||
            r.method != method) {
          continue;
        }
        acc.push_back(r.accuracy);
        fit_s.push_back(r.fit_seconds);
        pred_s.push_back(r.predict_seconds);
        iters.push_back(r.mean_iterations);
      }
      MethodSummary ms;
      ms.method = method;
      ms.mean_accuracy = mean_of(acc);
      ms.median_accuracy = median_of(acc);
      ms.std_accuracy = stddev_of(acc);
      ms.median_fit_seconds = median_of(fit_s);
      ms.median_predict_seconds = median_of(pred_s);
      ms.mean_iterations = mean_of(iters);
      ms.confusion = confusions[conf_idx++];
      group.methods.push_back(std::move(ms));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < group.methods.size(); ++i) {
      if (group.methods[i].mean_accuracy >
          group.methods[best].mean_accuracy) {
        best = i;
      }
    }
    for (std::size_t i = 0; i < group.methods.size(); ++i) {
      group.methods[i].is_best = (i == best);
      group.methods[i].delta_vs_best = group.methods[i].mean_accuracy -
                                       group.methods[best].mean_accuracy;
    }
    report.groups.push_back(std::move(group));
  }
}

inline std::vector<std::string> standard_notes(const ExperimentConfig& cfg) {
  std::vector<std::string> notes;
  notes.push_back("scatter eigenvalue law: U(1, 10)");
  notes.push_back("texture law: tau ~ U(1, m) per point");
  notes.push_back("t-QDA degrees of freedom: per class, bracket [" +
                  std::to_string(cfg.fit_options.nu_min) + ", " +
                  std::to_string(cfg.fit_options.nu_max) + "]");
  notes.push_back("training contamination only; test rows stay clean");
  notes.push_back("uniform class priors in all decision rules");
  return notes;
}

}  // namespace detail

// Synthetic benchmark: per repetition, fresh cluster truths and data from
// the seed substream, optional training contamination, one fit/predict per
// method, evaluation on the untouched test set.
inline BenchReport run_synthetic(const ExperimentConfig& cfg) {
  validate_config(cfg);
  BenchReport report;
  report.config = cfg;
  report.notes = detail::standard_notes(cfg);

  const int K = cfg.scenario.num_classes;
  const double rate = cfg.scenario.contamination_rate;
  SpdMatrix noise;
  if (rate > 0.0) noise = synthetic_noise_sigma(cfg);

  std::vector<Eigen::MatrixXi> confusions(
      cfg.methods.size(), Eigen::MatrixXi::Zero(K, K));
  const bool timing_mode = cfg.mode == BenchMode::Timing;

  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    ScenarioSpec spec = cfg.scenario;
    spec.seed = synthetic_rep_seed(cfg.seed, rep);
    const GeneratedScenario gen = generate_scenario(spec);
    LabeledDataset train = gen.train;
    if (rate > 0.0) {
      SplitMix64 crng = synthetic_contamination_stream(cfg.seed, rep);
      train = contaminate_synthetic(train, rate, noise, crng);
    }
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const Method method = cfg.methods[mi];
      if (timing_mode && rep == 0) {
        detail::timed_fit(method, train, cfg.fit_options);  // cache warmup
      }
      detail::TimedFit fit = detail::timed_fit(method, train, cfg.fit_options);
      using clock = std::chrono::steady_clock;
      const auto t0 = clock::now();
      const std::vector<int> labels =
          predict_labels(fit.model, gen.test.features);
      const double predict_seconds =
          std::chrono::duration<double>(clock::now() - t0).count();
      const Evaluation ev = evaluate(labels, gen.test.labels, K);
      confusions[mi] += ev.confusion;

      RunRecord rec;
      rec.scenario = cfg.scenario_label;
      rec.contamination_rate = rate;
      rec.method = method_name(method);
      rec.repetition = rep;
      rec.accuracy = ev.accuracy;
      rec.fit_seconds = fit.fit_seconds;
      rec.predict_seconds = predict_seconds;
      rec.mean_iterations = fit.mean_iterations;
      rec.all_converged = fit.all_converged;
      report.records.push_back(std::move(rec));
    }
  }

  std::vector<std::string> method_names;
  for (Method m : cfg.methods) method_names.emplace_back(method_name(m));
  detail::summarize(report, {{cfg.scenario_label, rate}}, method_names,
                    confusions);
  return report;
}

// Timing benchmark: the synthetic loop without contamination, with one
// warmup fit per method before the measured repetitions.
inline BenchReport run_timing(const ExperimentConfig& cfg) {
  ExperimentConfig timing_cfg = cfg;
  timing_cfg.mode = BenchMode::Timing;
  timing_cfg.scenario.contamination_rate = 0.0;
  return run_synthetic(timing_cfg);
}

// Real-data benchmark: stratified reshuffles on the configured cadence,
// per-rate training contamination, evaluation on the clean test split.
inline BenchReport run_real(const ExperimentConfig& cfg) {
  validate_config(cfg);
  BenchReport report;
  report.config = cfg;
  report.notes = detail::standard_notes(cfg);

  LoadedDataset loaded = load_named_dataset(cfg.dataset, cfg.data_path);
  validate(loaded.data);
  for (const std::string& w : loaded.warnings) {
    report.notes.push_back(std::string(dataset_name_str(cfg.dataset)) + ": " +
                           w);
  }
  const int K = loaded.data.num_classes();
  const auto [box_low, box_high] = dataset_contamination_box(cfg.dataset);
  const SplitMix64 root(cfg.seed);

  std::vector<std::pair<std::string, double>> keys;
  for (double rate : cfg.contamination_schedule) {
    keys.emplace_back(dataset_name_str(cfg.dataset), rate);
  }
  std::vector<Eigen::MatrixXi> confusions(
      keys.size() * cfg.methods.size(), Eigen::MatrixXi::Zero(K, K));

  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const auto split_index =
        static_cast<std::uint64_t>(rep / cfg.reshuffle_every);
    SplitMix64 srng = root.split(bench_streams::kSplit).split(split_index);
    auto [train0, test] =
        shuffle_split(loaded.data, cfg.train_fraction, srng);

    for (std::size_t ri = 0; ri < cfg.contamination_schedule.size(); ++ri) {
      const double rate = cfg.contamination_schedule[ri];
      LabeledDataset train = train0;
      if (rate > 0.0) {
        SplitMix64 crng = root.split(bench_streams::kRealContamination)
                              .split(static_cast<std::uint64_t>(rep))
                              .split(ri);
        train = contaminate_real(train0, rate, box_low, box_high, crng);
      }
      LabeledDataset test_view = test;
      if (cfg.standardize) {
        standardize_train_test(train, test_view);
      }
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const Method method = cfg.methods[mi];
        detail::TimedFit fit =
            detail::timed_fit(method, train, cfg.fit_options);
        using clock = std::chrono::steady_clock;
        const auto t0 = clock::now();
        const std::vector<int> labels =
            predict_labels(fit.model, test_view.features);
        const double predict_seconds =
            std::chrono::duration<double>(clock::now() - t0).count();
        const Evaluation ev = evaluate(labels, test_view.labels, K);
        confusions[ri * cfg.methods.size() + mi] += ev.confusion;

        RunRecord rec;
        rec.scenario = dataset_name_str(cfg.dataset);
        rec.contamination_rate = rate;
        rec.method = method_name(method);
        rec.repetition = rep;
        rec.accuracy = ev.accuracy;
        rec.fit_seconds = fit.fit_seconds;
        rec.predict_seconds = predict_seconds;
        rec.mean_iterations = fit.mean_iterations;
        rec.all_converged = fit.all_converged;
        report.records.push_back(std::move(rec));
      }
    }
  }

  std::vector<std::string> method_names;
  for (Method m : cfg.methods) method_names.emplace_back(method_name(m));
  detail::summarize(report, keys, method_names, confusions);
  return report;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string echo_config(const ExperimentConfig& cfg) {
  std::string s;
  const auto kv = [&s](const std::string& k, const std::string& v) {
    s += "- " + k + ": " + v + "\n";
  };
  kv("mode", bench_mode_str(cfg.mode));
  if (cfg.mode == BenchMode::Real) {
    kv("dataset", dataset_name_str(cfg.dataset));
    kv("data_path", cfg.data_path);
    kv("train_fraction", fmt_double(cfg.train_fraction));
    kv("standardize", cfg.standardize ? "true" : "false");
    std::string sched;
    for (double r : cfg.contamination_schedule) {
      if (!sched.empty()) sched += ", ";
      sched += fmt_double(r);
    }
    kv("contamination_schedule", sched);
  } else {
    kv("scenario", cfg.scenario_label);
    kv("shape_mode", cfg.scenario.shape_mode == ShapeMode::SharedPerCluster
                         ? "green (shared per cluster)"
                         : "red (per point)");
    kv("m", std::to_string(cfg.scenario.m));
    kv("classes", std::to_string(cfg.scenario.num_classes));
    kv("n_train", std::to_string(cfg.scenario.n_train));
    kv("n_test", std::to_string(cfg.scenario.n_test));
    kv("contamination", fmt_double(cfg.scenario.contamination_rate));
  }
  std::string methods;
  for (Method m : cfg.methods) {
    if (!methods.empty()) methods += ", ";
    methods += method_name(m);
  }
  kv("methods", methods);
  kv("repetitions", std::to_string(cfg.repetitions));
  kv("reshuffle_every", std::to_string(cfg.reshuffle_every));
  kv("tol", fmt_double(cfg.fit_options.tol));
  kv("max_iter", std::to_string(cfg.fit_options.max_iter));
  kv("huber_quantile", fmt_double(cfg.fit_options.huber_quantile));
  kv("nu_bracket", "[" + fmt_double(cfg.fit_options.nu_min) + ", " +
                       fmt_double(cfg.fit_options.nu_max) + "]");
  kv("seed", std::to_string(cfg.seed));
  return s;
}

}  // namespace detail

enum class ReportFormat { Csv, Markdown };

// Write the report. CSV output is split into results.csv (deterministic
// given config and seed) and timings.csv (wall-clock, excluded from the
// determinism contract). Markdown renders the Table-1 convention: the best
// method shows its absolute accuracy in bold, the rest signed deltas.
inline std::vector<std::string> render_report(const BenchReport& report,
                                              ReportFormat format,
                                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + out_dir + ": " +
                  ec.message());
  }
  std::vector<std::string> written;
  const auto open = [](const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // fixed newlines everywhere
    if (!out) throw IoError("cannot write " + path);
    return out;
  };

  if (format == ReportFormat::Csv) {
    const std::string results_path = (fs::path(out_dir) / "results.csv").string();
    std::ofstream results = open(results_path);
    results << "scenario,contamination_rate,method,repetition,accuracy,"
               "mean_iterations,all_converged\n";
    for (const RunRecord& r : report.records) {
      results << r.scenario << ',' << detail::fmt_double(r.contamination_rate)
              << ',' << r.method << ',' << r.repetition << ','
              << detail::fmt_double(r.accuracy) << ','
              << detail::fmt_double(r.mean_iterations) << ','
              << (r.all_converged ? 1 : 0) << '\n';
    }
    written.push_back(results_path);

    const std::string timings_path = (fs::path(out_dir) / "timings.csv").string();
    std::ofstream timings = open(timings_path);
    timings << "scenario,contamination_rate,method,repetition,fit_seconds,"
               "predict_seconds\n";
    for (const RunRecord& r : report.records) {
      timings << r.scenario << ',' << detail::fmt_double(r.contamination_rate)
              << ',' << r.method << ',' << r.repetition << ','
              << detail::fmt_double(r.fit_seconds) << ','
              << detail::fmt_double(r.predict_seconds) << '\n';
    }
    written.push_back(timings_path);
    return written;
  }

  const std::string md_path = (fs::path(out_dir) / "report.md").string();
  std::ofstream md = open(md_path);
  md << "# FEMDA benchmark report\n\n";
  md << "toolkit version " << report.version << "\n\n";
  md << "## Configuration\n\n" << detail::echo_config(report.config) << "\n";
  if (!report.notes.empty()) {
    md << "## Notes\n\n";
    for (const std::string& n : report.notes) md << "- " << n << "\n";
    md << "\n";
  }

  md << "## Accuracy (best bold, others as delta vs best)\n\n";
  md << "| Scenario | Contamination |";
  if (!report.groups.empty()) {
    for (const MethodSummary& ms : report.groups.front().methods) {
      md << ' ' << ms.method << " |";
    }
  }
  md << "\n|---|---|";
  if (!report.groups.empty()) {
    for (std::size_t i = 0; i < report.groups.front().methods.size(); ++i) {
      md << "---|";
    }
  }
  md << "\n";
  for (const GroupSummary& g : report.groups) {
    md << "| " << g.scenario << " | "
       << detail::fmt_fixed(100.0 * g.contamination_rate, 0) << "% |";
    for (const MethodSummary& ms : g.methods) {
      if (ms.is_best) {
        md << " **" << detail::fmt_fixed(100.0 * ms.mean_accuracy, 2) << "** |";
      } else {
        md << ' ' << detail::fmt_fixed(100.0 * ms.delta_vs_best, 2) << " |";
      }
    }
    md << "\n";
  }
  md << "\n## Details\n";
  for (const GroupSummary& g : report.groups) {
    md << "\n### " << g.scenario << " at "
       << detail::fmt_fixed(100.0 * g.contamination_rate, 0)
       << "% contamination\n\n";
    md << "| Method | Mean acc | Median acc | Std | Fit s (median) | "
          "Predict s (median) | Mean iters |\n";
    md << "|---|---|---|---|---|---|---|\n";
    for (const MethodSummary& ms : g.methods) {
      md << "| " << ms.method << " | "
         << detail::fmt_fixed(100.0 * ms.mean_accuracy, 2) << " | "
         << detail::fmt_fixed(100.0 * ms.median_accuracy, 2) << " | "
         << detail::fmt_fixed(100.0 * ms.std_accuracy, 2) << " | "
         << detail::fmt_double(ms.median_fit_seconds) << " | "
         << detail::fmt_double(ms.median_predict_seconds) << " | "
         << detail::fmt_fixed(ms.mean_iterations, 1) << " |\n";
    }
    md << "\nConfusion matrices (rows = truth, columns = predicted, summed "
          "over repetitions):\n";
    for (const MethodSummary& ms : g.methods) {
      md << "\n" << ms.method << ":\n\n```\n";
      for (Eigen::Index i = 0; i < ms.confusion.rows(); ++i) {
        for (Eigen::Index j = 0; j < ms.confusion.cols(); ++j) {
          md << ms.confusion(i, j) << (j + 1 < ms.confusion.cols() ? " " : "");
        }
        md << "\n";
      }
      md << "```\n";
    }
  }
  written.push_back(md_path);
  return written;
}

}  // namespace femda

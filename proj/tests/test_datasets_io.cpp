#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "femda/datasets_io.hpp"
#include "femda/rng.hpp"

using femda::DatasetSchema;
using femda::LabeledDataset;
using femda::LoadedDataset;
using femda::SplitMix64;

namespace {

namespace fs = std::filesystem;

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "femda_io_tests";
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("spambase golden fragment parses exactly", "[datasets]") {
  // three hand-written rows: 57 features and a binary label
  std::vector<std::vector<double>> expected(3,
                                            std::vector<double>(57, 0.0));
  expected[0][0] = 0.21;
  expected[0][1] = 0.28;
  expected[0][56] = 278.0;
  expected[1][5] = 1.75;
  expected[1][54] = 3.5;
  expected[2][11] = 0.64;

  std::string content;
  const std::vector<int> labels{1, 0, 1};
  for (int r = 0; r < 3; ++r) {
    for (int j = 0; j < 57; ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", expected[r][j]);
      content += buf;
      content += ',';
    }
    content += std::to_string(labels[r]);
    content += '\n';
  }
  const fs::path path = write_temp("spam_fragment.data", content);
  const LoadedDataset loaded =
      femda::load_dataset(path.string(), DatasetSchema::spambase());
  REQUIRE(loaded.data.rows() == 3);
  REQUIRE(loaded.data.dim() == 57);
  for (int r = 0; r < 3; ++r) {
    for (int j = 0; j < 57; ++j) {
      CHECK(loaded.data.features(r, j) == expected[r][j]);
    }
  }
  CHECK(loaded.data.label_names == std::vector<std::string>{"0", "1"});
  CHECK(loaded.data.labels == std::vector<int>{1, 0, 1});
  // a 3-row fragment is far from the canonical 4601 rows
  REQUIRE_FALSE(loaded.warnings.empty());
}

TEST_CASE("ecoli loader drops the id column and tiny classes", "[datasets]") {
  std::string content;
  for (int i = 0; i < 10; ++i) {
    content += "CP_" + std::to_string(i) +
               "  0.49 0.29 0.48 0.50 0.56 0.24 0.35 cp\n";
  }
  for (int i = 0; i < 8; ++i) {
    content += "IM_" + std::to_string(i) +
               "  0.06 0.61 0.48 0.50 0.49 0.92 0.37 im\n";
  }
  content += "OL_1  0.72 0.42 0.48 0.50 0.65 0.77 0.79 omL\n";
  content += "OL_2  0.51 0.44 0.48 0.50 0.57 0.70 0.74 omL\n";
  const fs::path path = write_temp("ecoli_fragment.data", content);

  DatasetSchema schema = DatasetSchema::ecoli();
  schema.min_class_size = 5;
  const LoadedDataset loaded = femda::load_dataset(path.string(), schema);
  CHECK(loaded.data.dim() == 7);
  CHECK(loaded.data.rows() == 18);  // omL dropped
  CHECK(loaded.data.label_names == std::vector<std::string>{"cp", "im"});
  CHECK(loaded.dropped_classes == std::vector<std::string>{"omL"});
  CHECK(loaded.data.features(0, 0) == 0.49);
  CHECK(loaded.data.features(10, 5) == 0.92);

  DatasetSchema harsh = DatasetSchema::ecoli();
  harsh.min_class_size = 100;
  CHECK_THROWS_AS(femda::load_dataset(path.string(), harsh),
                  femda::EmptyClass);
}

TEST_CASE("statlog loader enforces integer features and the label domain",
          "[datasets]") {
  const auto statlog_line = [](int value, int label) {
    std::string line;
    for (int j = 0; j < 36; ++j) {
      line += std::to_string(value + j) + " ";
    }
    line += std::to_string(label);
    return line + "\n";
  };
  std::string good = statlog_line(80, 1) + statlog_line(90, 7) +
                     statlog_line(70, 3) + statlog_line(60, 1);
  const fs::path path = write_temp("statlog_fragment.data", good);
  const LoadedDataset loaded =
      femda::load_dataset(path.string(), DatasetSchema::statlog());
  CHECK(loaded.data.rows() == 4);
  CHECK(loaded.data.label_names == std::vector<std::string>{"1", "3", "7"});
  CHECK(loaded.data.features(0, 35) == 115.0);

  const fs::path bad_label =
      write_temp("statlog_bad_label.data", statlog_line(80, 6));
  CHECK_THROWS_AS(
      femda::load_dataset(bad_label.string(), DatasetSchema::statlog()),
      femda::ParseError);
}

TEST_CASE("parse errors carry the line number", "[datasets]") {
  std::string content;
  for (int j = 0; j < 57; ++j) content += "0,";
  content += "1\n";
  std::string bad_row;
  for (int j = 0; j < 57; ++j) bad_row += (j == 30 ? "oops," : "0,");
  bad_row += "0\n";
  const fs::path path = write_temp("spam_bad.data", content + bad_row);
  try {
    femda::load_dataset(path.string(), DatasetSchema::spambase());
    FAIL("expected ParseError");
  } catch (const femda::ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  // non-finite features are rejected too
  std::string nan_row;
  for (int j = 0; j < 57; ++j) nan_row += (j == 3 ? "nan," : "0,");
  nan_row += "1\n";
  const fs::path nan_path = write_temp("spam_nan.data", nan_row);
  CHECK_THROWS_AS(
      femda::load_dataset(nan_path.string(), DatasetSchema::spambase()),
      femda::ParseError);
}

TEST_CASE("wrong column counts raise SchemaMismatch", "[datasets]") {
  std::string short_row;
  for (int j = 0; j < 40; ++j) short_row += "0,";
  short_row += "1\n";
  const fs::path path = write_temp("spam_short.data", short_row);
  CHECK_THROWS_AS(
      femda::load_dataset(path.string(), DatasetSchema::spambase()),
      femda::SchemaMismatch);
}

TEST_CASE("missing file raises IoError", "[datasets]") {
  CHECK_THROWS_AS(
      femda::load_dataset("/nonexistent/nowhere.data",
                          DatasetSchema::spambase()),
      femda::IoError);
}

TEST_CASE("statlog directory load concatenates train and test",
          "[datasets]") {
  const auto line = [](int base, int label) {
    std::string s;
    for (int j = 0; j < 36; ++j) s += std::to_string(base + j) + " ";
    return s + std::to_string(label) + "\n";
  };
  const fs::path dir = fs::temp_directory_path() / "femda_io_tests" /
                       "statlog_dir";
  fs::create_directories(dir);
  {
    std::ofstream trn(dir / "sat.trn");
    trn << line(10, 1) << line(20, 3);
    std::ofstream tst(dir / "sat.tst");
    tst << line(30, 1) << line(40, 3);
  }
  const LoadedDataset loaded =
      femda::load_named_dataset(femda::DatasetName::Statlog, dir.string());
  CHECK(loaded.data.rows() == 4);
  CHECK(loaded.data.features(2, 0) == 30.0);
}

TEST_CASE("loading is idempotent", "[datasets]") {
  std::string content;
  for (int i = 0; i < 6; ++i) {
    std::string row;
    for (int j = 0; j < 57; ++j) row += std::to_string(i * 0.5 + j) + ",";
    content += row + std::to_string(i % 2) + "\n";
  }
  const fs::path path = write_temp("spam_idem.data", content);
  const LoadedDataset a =
      femda::load_dataset(path.string(), DatasetSchema::spambase());
  const LoadedDataset b =
      femda::load_dataset(path.string(), DatasetSchema::spambase());
  CHECK((a.data.features.array() == b.data.features.array()).all());
  CHECK(a.data.labels == b.data.labels);
}

TEST_CASE("stratified shuffle split", "[datasets]") {
  LabeledDataset ds;
  ds.features.resize(100, 2);
  for (int i = 0; i < 100; ++i) {
    ds.features.row(i) << i, -i;
  }
  ds.labels.assign(100, 0);
  ds.label_names = {"only"};
  SplitMix64 rng(3);
  const auto [train, test] = femda::shuffle_split(ds, 0.7, rng);
  CHECK(train.rows() == 70);
  CHECK(test.rows() == 30);

  SplitMix64 rng2(3);
  const auto [train2, test2] = femda::shuffle_split(ds, 0.7, rng2);
  CHECK((train.features.array() == train2.features.array()).all());

  // union must be the original rows, disjointly
  std::multiset<double> seen;
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    seen.insert(train.features(i, 0));
  }
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    seen.insert(test.features(i, 0));
  }
  CHECK(seen.size() == 100);
  std::multiset<double> expected;
  for (int i = 0; i < 100; ++i) expected.insert(i);
  CHECK(seen == expected);
}

TEST_CASE("shuffle split stratifies every class", "[datasets]") {
  LabeledDataset ds;
  ds.features.resize(50, 1);
  ds.labels.clear();
  for (int i = 0; i < 50; ++i) {
    ds.features(i, 0) = i;
    ds.labels.push_back(i < 30 ? 0 : 1);
  }
  ds.label_names = {"a", "b"};
  SplitMix64 rng(8);
  const auto [train, test] = femda::shuffle_split(ds, 0.6, rng);
  const auto counts = femda::class_counts(train);
  CHECK(counts[0] == 18);  // floor(0.6 * 30)
  CHECK(counts[1] == 12);  // floor(0.6 * 20)

  LabeledDataset tiny = ds;
  tiny.features.conservativeResize(31, 1);
  tiny.labels.resize(31);  // class b has one row; floor(0.6) = 0
  SplitMix64 rng3(9);
  CHECK_THROWS_AS(femda::shuffle_split(tiny, 0.6, rng3), femda::EmptyClass);
}

TEST_CASE("real contamination stays inside the box", "[datasets]") {
  LabeledDataset ds;
  ds.features = Eigen::MatrixXd::Constant(100, 3, 500.0);
  ds.labels.assign(100, 0);
  ds.label_names = {"x"};
  const Eigen::VectorXd lo = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(3, 2.0);

  SplitMix64 rng(4);
  const LabeledDataset same = femda::contaminate_real(ds, 0.0, lo, hi, rng);
  CHECK((same.features.array() == ds.features.array()).all());

  SplitMix64 rng2(5);
  const LabeledDataset out = femda::contaminate_real(ds, 0.1, lo, hi, rng2);
  Eigen::Index changed = 0;
  for (Eigen::Index i = 0; i < 100; ++i) {
    if ((out.features.row(i).array() != 500.0).any()) {
      ++changed;
      CHECK((out.features.row(i).array() >= 0.0).all());
      CHECK((out.features.row(i).array() <= 2.0).all());
    }
  }
  CHECK(changed == 10);
  CHECK(out.labels == ds.labels);

  Eigen::VectorXd bad_hi = hi;
  bad_hi[1] = -1.0;
  SplitMix64 rng3(6);
  CHECK_THROWS_AS(femda::contaminate_real(ds, 0.1, lo, bad_hi, rng3),
                  femda::ConfigError);
}

TEST_CASE("contamination boxes match the published protocol", "[datasets]") {
  const auto [slo, shi] =
      femda::dataset_contamination_box(femda::DatasetName::Spambase);
  CHECK(slo.size() == 57);
  CHECK(shi[0] == 100.0);
  const auto [elo, ehi] =
      femda::dataset_contamination_box(femda::DatasetName::Ecoli);
  CHECK(ehi.size() == 7);
  CHECK(ehi[3] == 1.0);
  const auto [tlo, thi] =
      femda::dataset_contamination_box(femda::DatasetName::Statlog);
  CHECK(thi.size() == 36);
  CHECK(thi[35] == 200.0);
}

TEST_CASE("standardization uses training statistics only", "[datasets]") {
  LabeledDataset train, test;
  train.features.resize(4, 1);
  train.features << 0, 2, 4, 6;
  train.labels.assign(4, 0);
  train.label_names = {"x"};
  test = train;
  test.features << 3, 3, 3, 3;
  femda::standardize_train_test(train, test);
  CHECK(train.features.col(0).mean() == Catch::Approx(0.0).margin(1e-12));
  // the test column maps through the train mean (3) and sd
  CHECK((test.features.array() == 0.0).all());
}

// Full-file checks run only when the real UCI data is available locally.
TEST_CASE("canonical ecoli file shape", "[datasets]") {
  const char* dir = std::getenv("FEMDA_DATA_DIR");
  if (dir == nullptr) {
    SKIP("FEMDA_DATA_DIR not set; place ecoli.data there to enable");
  }
  const LoadedDataset loaded = femda::load_named_dataset(
      femda::DatasetName::Ecoli, std::string(dir));
  CHECK(loaded.data.dim() == 7);
  // 336 raw rows; tiny classes (omL, imL, imS) drop under min_class_size=16
  CHECK(loaded.data.rows() == 327);
  CHECK(loaded.data.label_names.size() == 5);
  CHECK(loaded.dropped_classes.size() == 3);
}

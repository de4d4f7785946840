#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "gradstop/data.hpp"

using namespace gradstop;

namespace {

class TempCsv {
 public:
  TempCsv(const std::string& name, const std::string& body)
      : path_(std::filesystem::temp_directory_path() / ("gradstop_test_" + name + ".csv")) {
    std::ofstream(path_) << body;
  }
  ~TempCsv() { std::filesystem::remove(path_); }
  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed, double outlier_rate = 0.0) {
  Rng rng(seed);
  Mat64 x(n, d);
  for (auto& v : x.values()) v = 3.0 + 2.0 * rng.normal();
  Labels labels(n, 0);
  const std::size_t n_out = static_cast<std::size_t>(std::round(outlier_rate * static_cast<double>(n)));
  for (std::size_t i = 0; i < n_out; ++i) labels[i] = 1;
  return Dataset(std::move(x), labels, "random");
}

}  // namespace

TEST(LoadCsv, WithLabelColumn) {
  TempCsv f("labeled", "a,b,label\n1,2,0\n3,4,0\n9,9,1\n");
  const Dataset ds = load_csv(f.path(), "label");
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.dim(), 2u);
  const auto eval = ds.evaluation_view();
  EXPECT_EQ(std::vector<std::uint8_t>(eval.labels().begin(), eval.labels().end()), (Labels{0, 0, 1}));
  EXPECT_EQ(ds.training_view().features().values(), (Vec64{1, 2, 3, 4, 9, 9}));
  EXPECT_EQ(ds.name(), "gradstop_test_labeled");
}

TEST(LoadCsv, WithoutLabelColumnKeepsEveryColumn) {
  TempCsv f("unlabeled", "a,b,label\n1,2,0\n3,4,0\n9,9,1\n");
  const Dataset ds = load_csv(f.path());
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.dim(), 3u);
  EXPECT_FALSE(ds.has_labels());
  EXPECT_THROW(ds.evaluation_view(), DataError);
}

TEST(LoadCsv, LabelColumnMayBeAnywhere) {
  TempCsv f("middle", "\xEF\xBB\xBFx, y ,z\r\n1.5, 0 ,-2e-1\r\n2,1.0,3\r\n");
  const Dataset ds = load_csv(f.path(), "y");
  EXPECT_EQ(ds.training_view().features().values(), (Vec64{1.5, -0.2, 2, 3}));
  EXPECT_EQ(ds.evaluation_view().count_outliers(), 1u);
}

TEST(LoadCsv, NonNumericCellNamesRowAndColumn) {
  TempCsv f("bad_cell", "a,b\n1,2\n3,x\n");
  try {
    load_csv(f.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.col(), 2u);
    EXPECT_NE(std::string(e.what()).find("row 2, column 2"), std::string::npos);
  }
}

TEST(LoadCsv, DistinctErrorVariants) {
  EXPECT_THROW(load_csv("/nonexistent/gradstop.csv"), MissingFileError);
  TempCsv bad_label("bad_label", "a,label\n1,0\n2,2\n");
  EXPECT_THROW(load_csv(bad_label.path(), "label"), LabelError);
  TempCsv ragged("ragged", "a,b\n1,2\n3\n");
  EXPECT_THROW(load_csv(ragged.path()), DataError);
  TempCsv nan_cell("nan_cell", "a,b\n1,nan\n3,4\n");
  EXPECT_THROW(load_csv(nan_cell.path()), ParseError);
  TempCsv missing_label("missing_label", "a,b\n1,2\n3,4\n");
  EXPECT_THROW(load_csv(missing_label.path(), "label"), DataError);
}

TEST(Dataset, Invariants) {
  EXPECT_THROW(Dataset(Mat64(1, 2), std::nullopt, "x"), DataError);
  EXPECT_THROW(Dataset(Mat64(2, 0), std::nullopt, "x"), DataError);
  EXPECT_THROW(Dataset(Mat64(2, 1), Labels{0}, "x"), DataError);
  EXPECT_THROW(Dataset(Mat64(2, 1, Vec64{1, INFINITY}), std::nullopt, "x"), DataError);
}

TEST(Standardize, KnownColumns) {
  const Dataset ds(Mat64(2, 1, Vec64{0, 2}), std::nullopt, "s");
  EXPECT_EQ(standardize(ds).training_view().features().values(), (Vec64{-1, 1}));
  const Dataset flat(Mat64(3, 1, Vec64{5, 5, 5}), std::nullopt, "c");
  EXPECT_EQ(standardize(flat).training_view().features().values(), (Vec64{0, 0, 0}));
}

TEST(Standardize, RecomputedMomentsAreZeroAndOne) {
  const Dataset z = standardize(random_dataset(100, 2, 21));
  const Mat64& x = z.training_view().features();
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < 100; ++r) mean += x(r, c);
    mean /= 100.0;
    for (std::size_t r = 0; r < 100; ++r) sq += (x(r, c) - mean) * (x(r, c) - mean);
    EXPECT_LT(std::abs(mean), 1e-12);
    EXPECT_LT(std::abs(std::sqrt(sq / 100.0) - 1.0), 1e-12);
  }
}

TEST(Standardize, Idempotent) {
  const Dataset once = standardize(random_dataset(200, 4, 22));
  const Dataset twice = standardize(once);
  const auto& a = once.training_view().features().values();
  const auto& b = twice.training_view().features().values();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Downsample, IdentityWhenSmall) {
  const Dataset ds = random_dataset(500, 3, 23);
  Rng rng(1);
  const Dataset out = downsample(ds, 10000, rng);
  EXPECT_EQ(out.training_view().features(), ds.training_view().features());
}

TEST(Downsample, CapsRowCountWithDistinctRows) {
  Mat64 x(20000, 1);
  for (std::size_t r = 0; r < x.rows(); ++r) x(r, 0) = static_cast<double>(r);
  const Dataset ds(std::move(x), std::nullopt, "big");
  Rng rng(2);
  const Dataset out = downsample(ds, 10000, rng);
  EXPECT_EQ(out.size(), 10000u);
  const auto& v = out.training_view().features().values();
  EXPECT_EQ(std::set<double>(v.begin(), v.end()).size(), 10000u);

  Rng again(2);
  EXPECT_EQ(downsample(ds, 10000, again).training_view().features(), out.training_view().features());
}

TEST(Downsample, PreservesContaminationOnAverage) {
  const Dataset ds = random_dataset(2000, 1, 25, 0.10);
  double mean_rate = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    mean_rate += *downsample(ds, 500, rng).contamination();
  }
  mean_rate /= 100.0;
  EXPECT_NEAR(mean_rate, 0.10, 0.02);
}

TEST(SampleEvalBatch, DistinctIndicesAndCopiedRows) {
  const Dataset ds = random_dataset(1000, 3, 26);
  Rng rng(3);
  const EvalBatch b = sample_eval_batch(ds.training_view(), 400, rng);
  EXPECT_EQ(b.indices.size(), 400u);
  EXPECT_EQ(std::set<std::size_t>(b.indices.begin(), b.indices.end()).size(), 400u);
  ASSERT_EQ(b.features.rows(), 400u);
  for (std::size_t i = 0; i < 400; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(b.features(i, c), ds.training_view().features()(b.indices[i], c));
    }
  }
}

TEST(SampleEvalBatch, FullAndOversized) {
  const Dataset ds = random_dataset(50, 2, 27);
  Rng rng(4);
  auto full = sample_eval_batch(ds.training_view(), 50, rng).indices;
  std::sort(full.begin(), full.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(full[i], i);
  EXPECT_THROW(sample_eval_batch(ds.training_view(), 51, rng), ShapeError);
}

TEST(Synthetic, DefaultContaminationIsOnePercent) {
  SyntheticConfig cfg;
  Rng rng(0);
  const Dataset ds = gen_synthetic(cfg, rng);
  EXPECT_EQ(ds.size(), 1000u);
  EXPECT_EQ(ds.dim(), 10u);
  EXPECT_DOUBLE_EQ(*ds.contamination(), 0.01);
  EXPECT_DOUBLE_EQ(cfg.contamination(), 0.01);
}

TEST(Synthetic, RejectsInvalidConfigs) {
  Rng rng(0);
  SyntheticConfig cfg;
  cfg.n_outlier = 0;
  EXPECT_THROW(gen_synthetic(cfg, rng), ConfigError);
  cfg.n_outlier = 2000;
  EXPECT_THROW(gen_synthetic(cfg, rng), ConfigError);
}

TEST(Synthetic, FixedSeedIsByteIdentical) {
  for (auto scenario : {Scenario::BlobUniform, Scenario::BlobFarGaussian, Scenario::ToxicInverted}) {
    SyntheticConfig cfg;
    cfg.scenario = scenario;
    Rng a(17), b(17);
    const Dataset x = gen_synthetic(cfg, a);
    const Dataset y = gen_synthetic(cfg, b);
    EXPECT_EQ(x.training_view().features(), y.training_view().features());
    const auto la = x.evaluation_view().labels();
    const auto lb = y.evaluation_view().labels();
    EXPECT_TRUE(std::equal(la.begin(), la.end(), lb.begin(), lb.end()));
  }
}

TEST(Synthetic, ScenarioGeometry) {
  SyntheticConfig cfg;
  cfg.scenario = Scenario::BlobFarGaussian;
  cfg.outlier_distance = 6.0;
  cfg.outlier_std = 0.01;
  Rng rng(3);
  const Dataset ds = gen_synthetic(cfg, rng);
  const auto eval = ds.evaluation_view();
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (!eval.labels()[r]) continue;
    EXPECT_NEAR(norm(eval.features().row(r)), 6.0, 0.2);
  }

  cfg.scenario = Scenario::BlobUniform;
  Rng rng2(3);
  const Dataset uni = gen_synthetic(cfg, rng2);
  const auto ev2 = uni.evaluation_view();
  for (std::size_t r = 0; r < uni.size(); ++r) {
    if (!ev2.labels()[r]) continue;
    for (double v : ev2.features().row(r)) EXPECT_LE(std::abs(v), cfg.outlier_box);
  }
}

TEST(Scenario, NamesRoundTrip) {
  for (auto s : {Scenario::BlobUniform, Scenario::BlobFarGaussian, Scenario::ToxicInverted}) {
    EXPECT_EQ(parse_scenario(to_string(s)), s);
  }
  EXPECT_THROW(parse_scenario("moons"), ConfigError);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "colmp/evaluation.hpp"
#include "colmp/fixture.hpp"
#include "colmp/random.hpp"

using namespace colmp;

namespace {

DatasetStats unit_stats() {
  DatasetStats s;
  s.count = 10;
  s.mean = {2.0, 0.1, 0.02, 0.005, 0.5, 0.8};
  s.range = {4.0, 0.4, 0.03, 0.01, 1.0, 1.2};
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    s.min[i] = s.mean[i] - s.range[i] / 2;
    s.max[i] = s.mean[i] + s.range[i] / 2;
  }
  return s;
}

ColumnFeatures shifted(const DatasetStats& s, const std::array<double, kNumFeatures>& halves) {
  std::array<double, kNumFeatures> v{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) v[i] = s.mean[i] + halves[i] * s.range[i] / 2;
  return ColumnFeatures::from_values(v);
}

}  // namespace

TEST(FitMetrics, HandExample) {
  const std::vector<double> est{1, 2, 2}, act{1, 2, 3};
  const auto m = fit_metrics(est, act);
  EXPECT_NEAR(m.mse, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.r2, 0.5, 1e-15);
  EXPECT_NEAR(m.std_err, std::sqrt(2.0) / 3.0, 1e-15);
  EXPECT_NEAR(m.std_err, 0.4714, 5e-5);
}

TEST(FitMetrics, PerfectAndIdentity) {
  Rng rng(1);
  std::vector<double> act(50), est(50);
  for (std::size_t i = 0; i < 50; ++i) {
    act[i] = rng.normal();
    est[i] = act[i] + 0.3 * rng.normal();
  }
  const auto perfect = fit_metrics(act, act);
  EXPECT_EQ(perfect.r2, 1.0);
  EXPECT_EQ(perfect.mse, 0.0);

  const double mean = std::accumulate(act.begin(), act.end(), 0.0) / 50;
  double ss_tot = 0;
  for (double a : act) ss_tot += (a - mean) * (a - mean);
  const auto m = fit_metrics(est, act);
  EXPECT_NEAR(m.r2, 1.0 - 50 * m.mse / ss_tot, 1e-12);
}

TEST(FitMetrics, Errors) {
  const std::vector<double> a{1, 2}, b{1};
  EXPECT_THROW(fit_metrics(a, b), Error);
  EXPECT_THROW(fit_metrics(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(ErrorCdf, ThreePoints) {
  const std::vector<double> e{2, -1, 0};
  const auto c = error_cdf(e);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].error, -1.0);
  EXPECT_NEAR(c[0].fraction, 1.0 / 3, 1e-15);
  EXPECT_EQ(c[1].error, 0.0);
  EXPECT_NEAR(c[1].fraction, 2.0 / 3, 1e-15);
  EXPECT_EQ(c[2].error, 2.0);
  EXPECT_EQ(c[2].fraction, 1.0);
}

TEST(ErrorCdf, TiesAndMonotone) {
  const std::vector<double> e{0.5, 0.5, 0.5, 1.0};
  const auto c = error_cdf(e);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].fraction, 0.75);
  Rng rng(2);
  std::vector<double> r(300);
  for (auto& v : r) v = rng.normal();
  const auto big = error_cdf(r);
  for (std::size_t i = 1; i < big.size(); ++i) {
    EXPECT_GT(big[i].error, big[i - 1].error);
    EXPECT_GT(big[i].fraction, big[i - 1].fraction);
  }
  EXPECT_THROW(error_cdf(std::vector<double>{}), Error);
  EXPECT_THROW(error_cdf(std::vector<double>{NAN}), Error);
}

TEST(SeparationParam, HandValues) {
  const auto s = unit_stats();
  EXPECT_NEAR(separation_param(shifted(s, {0, 0, 0, 0, 0, 0}), s), 0.0, 1e-15);
  EXPECT_NEAR(separation_param(shifted(s, {1, -1, 1, -1, 1, 1}), s), 1.0, 1e-12);
  EXPECT_NEAR(separation_param(shifted(s, {0, 0, 0, 1, 0, 0}), s), 1.0 / std::sqrt(6.0), 1e-12);
  EXPECT_NEAR(separation_param(shifted(s, {0, 0, 0, 1, 0, 0}), s), 0.40825, 5e-6);
}

TEST(SeparationParam, InvariantUnderAffineRescaling) {
  auto s = unit_stats();
  Rng rng(3);
  const auto f = shifted(s, {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                             rng.uniform(-2, 2), rng.uniform(-2, 2)});
  const double base = separation_param(f, s);
  const double scale[] = {2.0, 0.5, 10.0, 3.0, 7.0, 0.1}, shift[] = {1.0, -0.3, 0.2, 0.0, 4.0, -1.0};
  auto v = f.values();
  DatasetStats t = s;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    v[i] = scale[i] * v[i] + shift[i];
    t.mean[i] = scale[i] * s.mean[i] + shift[i];
    t.range[i] = scale[i] * s.range[i];
  }
  EXPECT_NEAR(separation_param(ColumnFeatures::from_values(v), t), base, 1e-12);
}

TEST(SeparationParam, ZeroRangeRejected) {
  auto s = unit_stats();
  s.range[2] = 0.0;
  try {
    separation_param(shifted(unit_stats(), {}), s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroRange);
  }
}

TEST(BoxStats, Simple) {
  const std::vector<double> v{5, 3, 1, 4, 2};
  const auto b = box_stats(v);
  EXPECT_EQ(b.q1, 2.0);
  EXPECT_EQ(b.median, 3.0);
  EXPECT_EQ(b.q3, 4.0);
  EXPECT_EQ(b.min, 1.0);
  EXPECT_EQ(b.max, 5.0);
  EXPECT_TRUE(b.outliers.empty());
}

TEST(BoxStats, Outlier) {
  const std::vector<double> v{1, 2, 3, 4, 100};
  const auto b = box_stats(v);
  EXPECT_EQ(b.max, 4.0);
  ASSERT_EQ(b.outliers.size(), 1u);
  EXPECT_EQ(b.outliers[0], 100.0);
}

TEST(BoxStats, MatchesNumpyPercentiles) {
  const std::vector<double> q{1.2571886134731436,  -1.2617379934445705, 0.5669454657347489, 6.0,
                              -1.5996692880514796, -0.30251784048326236, -1.3092168175162993, 0.24405410803590055,
                              1.5143751306746547,  2.0235560291721977,  -1.7781144428835152};
  const auto b = box_stats(q);
  EXPECT_NEAR(b.q1, -1.2854774054804348, 1e-14);
  EXPECT_NEAR(b.median, 0.24405410803590055, 1e-15);
  EXPECT_NEAR(b.q3, 1.385781872073899, 1e-14);
  ASSERT_EQ(b.outliers.size(), 1u);
  EXPECT_EQ(b.outliers[0], 6.0);
  EXPECT_EQ(b.max, 2.0235560291721977);
  EXPECT_EQ(b.min, -1.7781144428835152);
}

TEST(BinAnalysis, WholeSetBinFitsCoincide) {
  const auto ds = generate_fixture(11, 80, 0);
  const std::vector<BinSpec> all{{"all", [](const ColumnRecord&) { return true; }}};
  const auto res = bin_analysis(ds, all, Target::A, 3);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_EQ(res[0].n, 80u);
  EXPECT_EQ(res[0].top_features.size(), 3u);
  EXPECT_NEAR(res[0].whole_set_fit.r2, res[0].bin_fit.r2, 1e-12);
  EXPECT_NEAR(res[0].whole_set_fit.mse, res[0].bin_fit.mse, 1e-15);
}

TEST(BinAnalysis, BinFitNoWorseOnItsRows) {
  const auto ds = generate_fixture(12, 200, 0);
  const auto res = bin_analysis(ds, default_bins(), Target::A, 3);
  ASSERT_EQ(res.size(), 9u);
  for (const auto& r : res) EXPECT_LE(r.bin_fit.mse, r.whole_set_fit.mse + 1e-15) << r.name;
}

TEST(BinAnalysis, SmallAndEmptyBins) {
  const auto ds = generate_fixture(13, 40, 0);
  int seen = 0;
  const std::vector<BinSpec> tiny{{"three", [&seen](const ColumnRecord& r) {
                                     (void)r;
                                     return seen++ < 3;
                                   }}};
  try {
    bin_analysis(ds, tiny, Target::A, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientRows);
  }
  const std::vector<BinSpec> none{{"none", [](const ColumnRecord&) { return false; }}};
  try {
    bin_analysis(ds, none, Target::A, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBin);
  }
}

TEST(Misclass, SingletonCell) {
  ColumnRecord r;
  r.id = "c1";
  r.mode = FailureMode::FSC;
  const std::vector<ColumnRecord> recs{r};
  const std::vector<FailureMode> pred{FailureMode::FC};
  const std::vector<double> err{0.0044};
  const auto t = misclass_error_table(recs, pred, err);
  const auto& c = t.at(FailureMode::FSC, FailureMode::FC);
  EXPECT_EQ(c.count, 1u);
  EXPECT_EQ(c.min, 0.0044);
  EXPECT_EQ(c.max, 0.0044);
  EXPECT_EQ(c.mean, 0.0044);
  EXPECT_EQ(c.median, 0.0044);
  EXPECT_TRUE(c.unconservative);
  EXPECT_FALSE(t.at(FailureMode::FC, FailureMode::FSC).unconservative);
  EXPECT_EQ(t.total(), 1u);
}

TEST(Misclass, CellsPartitionTheErrors) {
  const auto ds = generate_fixture(14, 120, 0);
  Rng rng(15);
  std::vector<FailureMode> pred;
  std::vector<double> err;
  double sum = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    pred.push_back(kFailureModes[rng.below(3)]);
    err.push_back(rng.normal() * 0.01);
    sum += err.back();
  }
  const auto t = misclass_error_table(ds.records(), pred, err);
  EXPECT_EQ(t.total(), ds.size());
  double cell_sum = 0;
  for (const auto& row : t.cells) {
    for (const auto& c : row) cell_sum += c.mean * static_cast<double>(c.count);
  }
  EXPECT_NEAR(cell_sum, sum, 1e-12);
  EXPECT_THROW(misclass_error_table(ds.records(), pred, std::vector<double>{}), Error);
}

TEST(Csv, NanBecomesEmptyCell) {
  const std::vector<CdfPoint> pts{{-1.0, 0.5}, {NAN, 1.0}};
  EXPECT_EQ(cdf_to_csv(pts), "error,fraction\n-1,0.5\n,1\n");
}

#include <gtest/gtest.h>

#include <cmath>

#include "colmp/classifier.hpp"
#include "colmp/random.hpp"

using namespace colmp;

namespace {

DesignMatrix design(const Eigen::MatrixXd& v) {
  DesignMatrix x;
  x.values = v;
  for (Eigen::Index j = 0; j < v.cols(); ++j) x.feature_names.push_back("x" + std::to_string(j + 1));
  return x;
}

// Three well separated clusters around (0,0), (3,0) and (0,3).
void separable(Rng& rng, int n, Eigen::MatrixXd& x, std::vector<FailureMode>& labels) {
  x.resize(n, 2);
  labels.clear();
  const double cx[] = {0, 3, 0}, cy[] = {0, 0, 3};
  for (int i = 0; i < n; ++i) {
    const int c = i % 3;
    x(i, 0) = cx[c] + rng.uniform(-0.5, 0.5);
    x(i, 1) = cy[c] + rng.uniform(-0.5, 0.5);
    labels.push_back(kFailureModes[static_cast<std::size_t>(c)]);
  }
}

}  // namespace

TEST(OvaFit, MatchesNumpyGradientDescent) {
  // Zero-initialized full-batch descent replicated in numpy (lr 0.5, 200 iterations).
  Eigen::MatrixXd x(9, 2);
  x << 0.739246874033692, 0.19565282994532096, 0.061920235148452574, 0.5983921073240381, 0.8957577517412816,
      0.026943411384702798, 0.8051359898916692, 0.19017001672834077, 0.09290142163654713, 0.017962035652556163,
      0.292975067012086, 0.7271117439819181, 0.49317895100811693, 0.8529199944545277, 0.21721130352149032,
      0.31518274714343164, 0.25814085185458835, 0.978301137314217;
  const std::vector<FailureMode> labels{FailureMode::FC,  FailureMode::FC,  FailureMode::FC,
                                        FailureMode::FSC, FailureMode::FSC, FailureMode::FSC,
                                        FailureMode::SC,  FailureMode::SC,  FailureMode::SC};
  const double want[3][3] = {{-0.6442963678852456, 1.378515577896555, -1.7106795627629345},
                             {0.3009602348195753, -0.8277662542770987, -1.6239259471353429},
                             {-1.727917499579289, -1.2100759670874544, 3.101442369405707}};
  const auto t = ova_fit(design(x), labels, 0.5, 200, 0);
  for (std::size_t c = 0; c < 3; ++c) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(t.model.coefficients[c](j), want[c][j], 1e-12);
    EXPECT_EQ(t.cost_history[c].size(), 201u);
    EXPECT_NEAR(t.cost_history[c].front(), std::log(2.0), 1e-15);
  }
}

TEST(OvaFit, SeparableDataFullyLearnedWithMonotoneCost) {
  Rng rng(1);
  Eigen::MatrixXd x;
  std::vector<FailureMode> labels;
  separable(rng, 200, x, labels);
  const auto t = ova_fit(design(x), labels, 0.5, 5000, 0);
  std::vector<FailureMode> pred;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd row = x.row(i);
    pred.push_back(ova_predict(t.model, {row.data(), 2}).predicted);
  }
  EXPECT_EQ(confusion_matrix(pred, labels).accuracy(), 1.0);
  for (const auto& h : t.cost_history) {
    for (std::size_t i = 1; i < h.size(); ++i) ASSERT_LE(h[i], h[i - 1] + 1e-15);
  }
}

TEST(OvaFit, LargerRateConvergesFurther) {
  Rng rng(2);
  Eigen::MatrixXd x;
  std::vector<FailureMode> labels;
  separable(rng, 90, x, labels);
  const auto slow = ova_fit(design(x), labels, 0.05, 2000, 0);
  const auto fast = ova_fit(design(x), labels, 0.5, 2000, 0);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_LE(fast.cost_history[c].back(), slow.cost_history[c].back());
}

TEST(OvaFit, SymmetricDataGivesMirroredCoefficients) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, 2, 0, 0, 1, 0, 2;
  const std::vector<FailureMode> labels{FailureMode::FC, FailureMode::FC, FailureMode::SC, FailureMode::SC};
  const auto t = ova_fit(design(x), labels, 0.5, 500, 0);
  const auto& fc = t.model.coefficients[0];
  const auto& sc = t.model.coefficients[2];
  EXPECT_NEAR(fc(0), sc(0), 1e-12);
  EXPECT_NEAR(fc(1), sc(2), 1e-12);
  EXPECT_NEAR(fc(2), sc(1), 1e-12);
}

TEST(OvaFit, Errors) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const std::vector<FailureMode> one(3, FailureMode::FC);
  EXPECT_THROW(ova_fit(design(x), one, 0.5, 10, 0), Error);
  const std::vector<FailureMode> two{FailureMode::FC, FailureMode::SC};
  EXPECT_THROW(ova_fit(design(x), two, 0.5, 10, 0), Error);
}

TEST(OvaPredict, FixedCoefficientsMatchClosedForm) {
  OvaModel m;
  m.feature_names = {"axial_ratio", "rho_t", "vy_over_vo"};
  m.coefficients[0] = Eigen::Vector4d(6.94, -3.99, 0.44, -9.21);
  m.coefficients[1] = Eigen::Vector4d(-2.19, 0.35, -1.04, 1.63);
  m.coefficients[2] = Eigen::Vector4d(-7.7, 4.07, -0.05, 5.86);
  const std::vector<double> in{0.2, 0.005, 0.6};
  const auto s = ova_predict(m, in);
  const auto want = classify_fixed({1.0, 0.2, 0.0, 0.005, 0.5, 0.6}, SectionShape::Rectangular);
  EXPECT_EQ(s.predicted, FailureMode::FC);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(s.scores[c], want.scores[c], 1e-14);
}

TEST(OvaPredict, ZeroModelTiesToShearCritical) {
  OvaModel m;
  m.feature_names = {"a", "b"};
  for (auto& w : m.coefficients) w = Eigen::Vector3d::Zero();
  const auto s = ova_predict(m, std::vector<double>{0.3, 0.4});
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(s.scores[c], 0.0);
    EXPECT_EQ(s.probabilities[c], 0.5);
  }
  EXPECT_EQ(s.predicted, FailureMode::SC);
  EXPECT_THROW(ova_predict(m, std::vector<double>{1.0}), Error);
}

TEST(ArgmaxInvariance, SigmoidAndScaling) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const std::array<double, 3> s{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const auto cs = make_class_scores(s);
    EXPECT_EQ(argmax_mode(cs.probabilities), cs.predicted);
    EXPECT_EQ(argmax_mode({2 * s[0], 2 * s[1], 2 * s[2]}), cs.predicted);
  }
}

TEST(Confusion, Diagonal) {
  const std::vector<FailureMode> v{FailureMode::FC, FailureMode::FSC, FailureMode::SC, FailureMode::SC};
  const auto cm = confusion_matrix(v, v);
  EXPECT_EQ(cm.accuracy(), 1.0);
  EXPECT_EQ(cm.unconservative_fraction(), 0.0);
  EXPECT_EQ(cm.conservative_fraction(), 0.0);
}

TEST(Confusion, SingleUnconservative) {
  const std::vector<FailureMode> p{FailureMode::FC}, a{FailureMode::FSC};
  const auto cm = confusion_matrix(p, a);
  EXPECT_EQ(cm.unconservative_fraction(), 1.0);
  EXPECT_EQ(cm.accuracy(), 0.0);
}

TEST(Confusion, RectangularSixVariableCounts) {
  // Rows predicted, columns observed.
  const std::size_t counts[3][3] = {{196, 27, 1}, {1, 49, 5}, {0, 6, 34}};
  std::vector<FailureMode> p, a;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < counts[i][j]; ++k) {
        p.push_back(kFailureModes[i]);
        a.push_back(kFailureModes[j]);
      }
    }
  }
  const auto cm = confusion_matrix(p, a);
  EXPECT_EQ(cm.total(), 319u);
  EXPECT_EQ(cm.at(FailureMode::FC, FailureMode::FSC), 27u);
  EXPECT_NEAR(cm.accuracy(), 0.8746, 5e-5);
  EXPECT_EQ(cm.correct(), 279u);
  EXPECT_NEAR(cm.unconservative_fraction(), 33.0 / 319.0, 1e-15);
  EXPECT_NEAR(cm.conservative_fraction(), 7.0 / 319.0, 1e-15);
  EXPECT_NEAR(cm.recall(FailureMode::FC), 196.0 / 197.0, 1e-15);
}

TEST(Confusion, Errors) {
  EXPECT_THROW(confusion_matrix(std::vector<FailureMode>{}, std::vector<FailureMode>{}), Error);
  EXPECT_THROW(confusion_matrix(std::vector<FailureMode>{FailureMode::FC}, std::vector<FailureMode>{}), Error);
}

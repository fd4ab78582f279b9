#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "colmp/gpr.hpp"
#include "colmp/random.hpp"

using namespace colmp;

namespace {

double predict_mean(const GprModel& m, std::initializer_list<double> x) {
  std::vector<double> v(x);
  return gpr_predict(m, v).mean;
}

Eigen::MatrixXd random_inputs(Rng& rng, int n, int d) {
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(-2, 2);
  }
  return x;
}

}  // namespace

TEST(Kernel, Values) {
  const std::vector<double> a{0.3, -1.0}, b{1.3, 0.0};
  const SqExpKernelParams p{1.0, 1.0};
  EXPECT_EQ(kernel_eval(a, a, SqExpKernelParams{2.5, 0.7}), 6.25);
  EXPECT_NEAR(kernel_eval(a, b, p), std::exp(-1.0), 1e-15);
  EXPECT_EQ(kernel_eval(a, b, p), kernel_eval(b, a, p));
  EXPECT_THROW((SqExpKernelParams{0.0, 1.0}.validate()), Error);
  EXPECT_THROW((SqExpKernelParams{1.0, -1.0}.validate()), Error);
}

TEST(Gram, SymmetricAndPositiveSemidefinite) {
  Rng rng(1);
  const auto x = random_inputs(rng, 20, 6);
  const auto k = gram_matrix(x, {1.3, 0.9});
  EXPECT_EQ((k - k.transpose()).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-8);
}

TEST(GprFit, SinglePointHandValues) {
  Eigen::MatrixXd x(1, 1);
  x << 0.0;
  const auto m = gpr_fit(x, Eigen::VectorXd::Constant(1, 1.0), {1.0, 1.0}, 0.0);
  EXPECT_EQ(m.jitter, 0.0);
  EXPECT_NEAR(m.dual_weights(0), 1.0, 1e-15);
  EXPECT_NEAR(predict_mean(m, {1.0}), std::exp(-0.5), 1e-12);

  const auto m2 = gpr_fit(x, Eigen::VectorXd::Constant(1, 3.0), {2.0, 1.0}, 0.0);
  EXPECT_NEAR(m2.dual_weights(0), 3.0 / 4.0, 1e-15);
}

TEST(GprFit, DuplicateInputsNeedJitterOrFail) {
  Eigen::MatrixXd x(2, 1);
  x << 0.5, 0.5;
  try {
    const auto m = gpr_fit(x, Eigen::Vector2d(1.0, 1.0), {1.0, 1.0}, 0.0);
    EXPECT_TRUE(m.jitter_rescued());
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FactorizationFailed);
  }
  EXPECT_EQ(gpr_fit(x, Eigen::Vector2d(1.0, 1.0), {1.0, 1.0}, 0.1).jitter, 0.0);
}

TEST(GprPredict, NoiselessInterpolation) {
  Rng rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const auto x = random_inputs(rng, 20, 6);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y(i) = std::sin(x(i, 0)) + x(i, 1) * x(i, 2);
    const auto m = gpr_fit(x, y, {1.0, 1.0}, 0.0);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
      const Eigen::RowVectorXd row = x.row(i);
      worst = std::max(worst, std::abs(gpr_predict(m, {row.data(), 6}).mean - y(i)));
    }
    EXPECT_LT(worst, 1e-6 * y.cwiseAbs().maxCoeff());
  }
}

TEST(GprPredict, FarQueryRecoversPrior) {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const auto m = gpr_fit(x, Eigen::Vector2d(2.0, -1.0), {1.5, 0.5}, 0.0);
  const std::vector<double> far{100.0};
  const auto p = gpr_predict(m, far);
  EXPECT_NEAR(p.mean, 0.0, 1e-12);
  EXPECT_NEAR(p.variance, 2.25, 1e-12);
}

TEST(GprPredict, MatchesScikitLearnReference) {
  // Fixed-kernel scikit-learn GaussianProcessRegressor (alpha = noise, no optimizer).
  const double xg[] = {0.6914957475112791, 0.9378163268449693, 1.8122686777911212, 1.3947221774725955,
                       0.6786413214848905, 0.03375443019499569, 0.31964738820996197, 1.992871751079341,
                       0.9194319597863692, 1.3820798326375185, 0.109336122803676,   0.06810055789407521,
                       1.691780212890115,  1.175763881333721,  0.617419486409124,   0.6347532765626749};
  const double yg[] = {1.5171895219466756, 2.9162368927720332, 0.6288753341762282, 4.285769645717327,
                       2.7054020252687643, 0.11375609789209386, 2.3751110768104753, 0.9818447259864004};
  const double xt[] = {0.17847450883549754, 0.34533920221715086, 0.049172214930372604,
                       1.6782496967455633,  0.9326063944063303,  0.2544058321170608};
  const double mean[] = {0.37203275373033684, 3.4998369656172255, 0.7516119657613186};
  const double var[] = {0.06679359846925846, 0.3756413900810062, 0.11568899682079503};
  const Eigen::MatrixXd x = Eigen::Map<const Eigen::Matrix<double, 8, 2, Eigen::RowMajor>>(xg);
  const auto m = gpr_fit(x, Eigen::Map<const Eigen::VectorXd>(yg, 8), {1.3, 0.7}, 1e-3);
  for (int i = 0; i < 3; ++i) {
    const auto p = gpr_predict(m, {xt + 2 * i, 2});
    EXPECT_NEAR(p.mean, mean[i], 1e-9);
    EXPECT_NEAR(p.variance, var[i], 1e-9);
  }
}

TEST(GprPredict, VarianceWithinPriorBounds) {
  Rng rng(3);
  const auto x = random_inputs(rng, 15, 3);
  const auto m = gpr_fit(x, Eigen::VectorXd::Random(15), {0.8, 0.6}, 1e-4);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> q{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const auto p = gpr_predict(m, q);
    EXPECT_GE(p.variance, 0.0);
    EXPECT_LE(p.variance, 0.64);
  }
}

TEST(GprTrain, DeterministicAndCentered) {
  Rng rng(4);
  const auto x = random_inputs(rng, 60, 6);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) y(i) = 5.0 + x(i, 0) - 0.5 * x(i, 3);
  const auto a = gpr_train(x, y, 11);
  const auto b = gpr_train(x, y, 11);
  EXPECT_EQ(a.split.train, b.split.train);
  EXPECT_EQ(a.split.train.size(), 54u);
  EXPECT_EQ(a.regressor.model.dual_weights, b.regressor.model.dual_weights);
  EXPECT_EQ(a.candidates.size(), kNoiseGridFractions.size());
  const Eigen::RowVectorXd row = x.row(a.split.validation[0]);
  const double pred = a.regressor.predict({row.data(), 6}).mean;
  EXPECT_NEAR(pred, y(a.split.validation[0]), 0.5);
}

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "colmp/error.hpp"
#include "colmp/metrics.hpp"
#include "colmp/random.hpp"

namespace colmp {

inline constexpr std::string_view kInterceptName = "intercept";

/// Feature columns plus an intercept flag. The intercept is never stored as a
/// column; solvers prepend it on demand so feature indices stay stable.
struct DesignMatrix {
  Eigen::MatrixXd values;  // n x p
  std::vector<std::string> feature_names;
  bool includes_intercept = true;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  std::size_t coefficient_count() const {
    return static_cast<std::size_t>(values.cols()) + (includes_intercept ? 1 : 0);
  }

  void validate() const {
    if (values.rows() < 1 || values.cols() < 1) {
      throw Error(ErrorCode::DimensionMismatch, "design matrix needs at least one row and one column");
    }
    if (feature_names.size() != static_cast<std::size_t>(values.cols())) {
      throw Error(ErrorCode::DimensionMismatch, "feature name count does not match column count");
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : feature_names) {
      if (!seen.insert(n).second) throw Error(ErrorCode::InvalidArgument, "duplicate feature name '" + n + "'");
    }
    if (!values.allFinite()) throw Error(ErrorCode::NonFiniteInput, "design matrix has non-finite values");
  }

  // Columns as the solver sees them: [1 | X] or X.
  Eigen::MatrixXd augmented() const {
    if (!includes_intercept) return values;
    Eigen::MatrixXd a(values.rows(), values.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(values.cols()) = values;
    return a;
  }

  std::vector<std::string> coefficient_names() const {
    std::vector<std::string> names;
    if (includes_intercept) names.emplace_back(kInterceptName);
    names.insert(names.end(), feature_names.begin(), feature_names.end());
    return names;
  }

  DesignMatrix select_columns(const std::vector<std::size_t>& cols) const {
    DesignMatrix out;
    out.includes_intercept = includes_intercept;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(cols[j]));
      out.feature_names.push_back(feature_names.at(cols[j]));
    }
    return out;
  }

  DesignMatrix select_rows(const std::vector<std::size_t>& rows_idx) const {
    DesignMatrix out;
    out.includes_intercept = includes_intercept;
    out.feature_names = feature_names;
    out.values.resize(static_cast<Eigen::Index>(rows_idx.size()), values.cols());
    for (std::size_t i = 0; i < rows_idx.size(); ++i) {
      out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows_idx[i]));
    }
    return out;
  }
};

inline Eigen::VectorXd select_rows(const Eigen::VectorXd& y, const std::vector<std::size_t>& rows_idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows_idx.size()));
  for (std::size_t i = 0; i < rows_idx.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows_idx[i]));
  }
  return out;
}

struct TrainingMeta {
  std::optional<std::uint64_t> seed;
  std::string split;
};

struct LinearModel {
  std::vector<std::string> coefficient_names;  // intercept first when present
  Eigen::VectorXd coefficients;
  bool has_intercept = true;
  double lambda = 0.0;
  TrainingMeta meta;

  std::size_t feature_count() const {
    return static_cast<std::size_t>(coefficients.size()) - (has_intercept ? 1 : 0);
  }

  std::vector<std::string> feature_names() const {
    return {coefficient_names.begin() + (has_intercept ? 1 : 0), coefficient_names.end()};
  }

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (static_cast<std::size_t>(x.size()) != feature_count()) {
      throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(feature_count()) + " features, got " +
                                                    std::to_string(x.size()));
    }
    return (has_intercept ? coefficients(0) : 0.0) + x.dot(coefficients.tail(x.size()).transpose());
  }

  Eigen::VectorXd predict(const DesignMatrix& X) const {
    if (static_cast<std::size_t>(X.cols()) != feature_count() || X.includes_intercept != has_intercept) {
      throw Error(ErrorCode::DimensionMismatch, "design matrix does not match model layout");
    }
    return X.augmented() * coefficients;
  }
};

namespace detail {

// Cholesky solve of A x = b for symmetric A. A pivot that loses all but a
// 1e-12 fraction of its diagonal entry is treated as rank deficiency.
class SpdSolver {
 public:
  explicit SpdSolver(const Eigen::MatrixXd& a) : llt_(a) {
    if (llt_.info() != Eigen::Success) throw Error(ErrorCode::SingularMatrix, "matrix is not positive definite");
    const Eigen::MatrixXd l = llt_.matrixL();
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
      const double d = a(j, j);
      if (!(d > 0.0) || l(j, j) * l(j, j) <= 1e-12 * d) {
        throw Error(ErrorCode::SingularMatrix, "matrix is rank deficient at column " + std::to_string(j));
      }
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }
  Eigen::MatrixXd inverse() const {
    return llt_.solve(Eigen::MatrixXd::Identity(llt_.rows(), llt_.cols()));
  }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline void check_rows(const DesignMatrix& X, const Eigen::VectorXd& y) {
  X.validate();
  if (X.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(X.rows()) + " design rows vs " + std::to_string(y.size()) + " targets");
  }
  if (!y.allFinite()) throw Error(ErrorCode::NonFiniteInput, "targets contain non-finite values");
}

// Solves (A^T A + lambda D) beta = A^T y with one step of iterative refinement;
// D is the identity with the intercept entry zeroed.
inline Eigen::VectorXd solve_regularized(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double lambda,
                                         bool has_intercept) {
  Eigen::MatrixXd gram = a.transpose() * a;
  for (Eigen::Index j = has_intercept ? 1 : 0; j < gram.rows(); ++j) gram(j, j) += lambda;
  const Eigen::VectorXd rhs = a.transpose() * y;
  const SpdSolver solver(gram);
  Eigen::VectorXd beta = solver.solve(rhs);
  beta += solver.solve(rhs - gram * beta);
  return beta;
}

inline LinearModel make_model(const DesignMatrix& X, Eigen::VectorXd beta, double lambda) {
  LinearModel m;
  m.coefficient_names = X.coefficient_names();
  m.coefficients = std::move(beta);
  m.has_intercept = X.includes_intercept;
  m.lambda = lambda;
  return m;
}

}  // namespace detail

/// Ordinary least squares via the normal equations.
inline LinearModel ols_fit(const DesignMatrix& X, const Eigen::VectorXd& y) {
  detail::check_rows(X, y);
  if (static_cast<std::size_t>(X.rows()) <= X.coefficient_count()) {
    throw Error(ErrorCode::InsufficientRows, "OLS needs more rows than coefficients");
  }
  return detail::make_model(X, detail::solve_regularized(X.augmented(), y, 0.0, X.includes_intercept), 0.0);
}

/// Minimizes (SSR + lambda * sum of squared non-intercept coefficients) / 2n.
inline LinearModel ridge_fit(const DesignMatrix& X, const Eigen::VectorXd& y, double lambda) {
  detail::check_rows(X, y);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be a finite nonnegative number");
  }
  return detail::make_model(X, detail::solve_regularized(X.augmented(), y, lambda, X.includes_intercept), lambda);
}

// ---------------------------------------------------------------------------
// Coefficient significance

struct CoefficientStat {
  std::string name;
  double coefficient = 0.0;
  double std_error = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

struct PValueReport {
  std::vector<CoefficientStat> coefficients;  // intercept first when present
  bool has_intercept = true;
  std::size_t dof = 0;  // n - number of coefficients

  // Statistics for the feature columns only, in design-matrix order.
  std::vector<CoefficientStat> features() const {
    return {coefficients.begin() + (has_intercept ? 1 : 0), coefficients.end()};
  }
};

/// Classical OLS t-tests: se_j = sqrt(s^2 [(X^T X)^-1]_jj), s^2 = SSR/(n-p),
/// two-sided p-values from Student's t with n-p degrees of freedom.
inline PValueReport coefficient_pvalues(const DesignMatrix& X, const Eigen::VectorXd& y) {
  detail::check_rows(X, y);
  const auto n = static_cast<std::size_t>(X.rows());
  const std::size_t p = X.coefficient_count();
  if (n <= p + 1) throw Error(ErrorCode::InsufficientRows, "p-values need n > p + 1");

  const Eigen::MatrixXd a = X.augmented();
  const Eigen::MatrixXd gram = a.transpose() * a;
  const detail::SpdSolver solver(gram);
  const Eigen::VectorXd rhs = a.transpose() * y;
  Eigen::VectorXd beta = solver.solve(rhs);
  beta += solver.solve(rhs - gram * beta);

  const Eigen::VectorXd resid = y - a * beta;
  const double ssr = resid.squaredNorm();
  const double scale = std::max(y.squaredNorm(), (y.array() - y.mean()).square().sum());
  if (ssr <= 1e-24 * scale || ssr == 0.0) {
    throw Error(ErrorCode::ZeroResidualVariance, "model fits exactly, p-values undefined");
  }

  PValueReport report;
  report.has_intercept = X.includes_intercept;
  report.dof = n - p;
  const double sigma2 = ssr / static_cast<double>(report.dof);
  const Eigen::MatrixXd inv = solver.inverse();
  const boost::math::students_t dist(static_cast<double>(report.dof));
  const auto names = X.coefficient_names();
  for (std::size_t j = 0; j < p; ++j) {
    CoefficientStat s;
    s.name = names[j];
    s.coefficient = beta(static_cast<Eigen::Index>(j));
    s.std_error = std::sqrt(sigma2 * inv(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
    s.t_stat = s.coefficient / s.std_error;
    s.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(s.t_stat))), 0.0, 1.0);
    report.coefficients.push_back(std::move(s));
  }
  return report;
}

/// Indices (into the design-matrix feature columns) of the k features with
/// the smallest p-values, most significant first; ties keep column order.
inline std::vector<std::size_t> select_significant(const PValueReport& report, std::size_t k) {
  const auto feats = report.features();
  if (k > feats.size()) {
    throw Error(ErrorCode::KTooLarge,
                "k = " + std::to_string(k) + " exceeds " + std::to_string(feats.size()) + " features");
  }
  std::vector<std::size_t> idx(feats.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t l, std::size_t r) { return feats[l].p_value < feats[r].p_value; });
  idx.resize(k);
  return idx;
}

// ---------------------------------------------------------------------------
// Regularization tuning

struct LambdaPoint {
  double lambda = 0.0;
  double train_cost = 0.0;
  double validation_cost = 0.0;

  double total() const { return train_cost + validation_cost; }
};

struct LambdaTuning {
  double lambda_star = 0.0;
  std::vector<LambdaPoint> curve;  // grid order
  Split split;
};

/// {0} followed by 25 log-spaced values over [1e-4, 1e2].
inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid{0.0};
  for (int i = 0; i < 25; ++i) grid.push_back(std::pow(10.0, -4.0 + 6.0 * i / 24.0));
  return grid;
}

// Squared-error cost (1/2m) * sum r^2, the unpenalized fit term of the ridge objective.
inline double half_mse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual) {
  return (predicted - actual).squaredNorm() / (2.0 * static_cast<double>(actual.size()));
}

/// Seeded 70/30 split; fits ridge on the training part for every lambda and
/// picks the one minimizing training cost + validation cost. Ties go to the
/// smaller lambda. A lambda whose system is singular gets infinite cost.
inline LambdaTuning tune_lambda(const DesignMatrix& X, const Eigen::VectorXd& y, std::uint64_t split_seed,
                                const std::vector<double>& grid) {
  detail::check_rows(X, y);
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "lambda grid is empty");
  for (double l : grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw Error(ErrorCode::InvalidArgument, "lambda grid values must be >= 0");
  }
  if (X.rows() < 10) throw Error(ErrorCode::InsufficientRows, "lambda tuning needs at least 10 rows");

  LambdaTuning out;
  out.split = train_validation_split(static_cast<std::size_t>(X.rows()), 0.7, split_seed);
  const DesignMatrix x_train = X.select_rows(out.split.train);
  const DesignMatrix x_val = X.select_rows(out.split.validation);
  const Eigen::VectorXd y_train = select_rows(y, out.split.train);
  const Eigen::VectorXd y_val = select_rows(y, out.split.validation);

  const double inf = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> best;
  for (double lambda : grid) {
    LambdaPoint pt{lambda, inf, inf};
    try {
      const auto model = ridge_fit(x_train, y_train, lambda);
      pt.train_cost = half_mse(model.predict(x_train), y_train);
      pt.validation_cost = half_mse(model.predict(x_val), y_val);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularMatrix) throw;
    }
    out.curve.push_back(pt);
    const std::size_t i = out.curve.size() - 1;
    if (!best || pt.total() < out.curve[*best].total() ||
        (pt.total() == out.curve[*best].total() && pt.lambda < out.curve[*best].lambda)) {
      best = i;
    }
  }
  if (!std::isfinite(out.curve[*best].total())) {
    throw Error(ErrorCode::SingularMatrix, "no lambda in the grid gives a solvable system");
  }
  out.lambda_star = out.curve[*best].lambda;
  return out;
}

// ---------------------------------------------------------------------------
// Feature expansion and cross-validation

/// Appends x_j^2 for every feature column, named "<name>^2". No cross terms.
inline DesignMatrix expand_squares(const DesignMatrix& X) {
  X.validate();
  DesignMatrix out;
  out.includes_intercept = X.includes_intercept;
  const Eigen::Index p = X.cols();
  out.values.resize(X.rows(), 2 * p);
  out.values.leftCols(p) = X.values;
  out.values.rightCols(p) = X.values.array().square().matrix();
  out.feature_names = X.feature_names;
  for (const auto& n : X.feature_names) out.feature_names.push_back(n + "^2");
  return out;
}

using LinearTrainer = std::function<LinearModel(const DesignMatrix&, const Eigen::VectorXd&)>;

struct FoldResult {
  std::vector<std::size_t> validation_rows;
  double r2 = std::numeric_limits<double>::quiet_NaN();  // NaN when the fold's targets are constant
  double mse = 0.0;
};

struct CvResult {
  std::vector<FoldResult> folds;
  double mean_r2 = std::numeric_limits<double>::quiet_NaN();  // over folds with defined R^2
  double mean_mse = 0.0;
  double pooled_r2 = std::numeric_limits<double>::quiet_NaN();  // all out-of-fold predictions together
};

/// Seeded k-fold partition: fold f validates shuffled positions
/// [f*n/k, (f+1)*n/k), so fold sizes differ by at most one.
inline std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw Error(ErrorCode::KOutOfRange, "k = " + std::to_string(k) + " must lie in [2, " + std::to_string(n) + "]");
  }
  const auto perm = shuffled_indices(n, seed);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t i = f * n / k; i < (f + 1) * n / k; ++i) folds[f].push_back(perm[i]);
  }
  return folds;
}

inline CvResult kfold_cv(const DesignMatrix& X, const Eigen::VectorXd& y, std::size_t k, const LinearTrainer& trainer,
                         std::uint64_t seed) {
  detail::check_rows(X, y);
  const auto n = static_cast<std::size_t>(X.rows());
  const auto folds = kfold_partition(n, k, seed);

  CvResult out;
  Eigen::VectorXd oof(static_cast<Eigen::Index>(n));
  std::size_t r2_count = 0;
  double r2_sum = 0.0;
  for (const auto& val : folds) {
    std::vector<bool> is_val(n, false);
    for (auto i : val) is_val[i] = true;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < n; ++i) {
      if (!is_val[i]) train.push_back(i);
    }
    const auto model = trainer(X.select_rows(train), select_rows(y, train));
    const Eigen::VectorXd pred = model.predict(X.select_rows(val));
    const Eigen::VectorXd actual = select_rows(y, val);
    for (std::size_t i = 0; i < val.size(); ++i) oof(static_cast<Eigen::Index>(val[i])) = pred(static_cast<Eigen::Index>(i));

    FoldResult fr;
    fr.validation_rows = val;
    fr.mse = (pred - actual).squaredNorm() / static_cast<double>(val.size());
    const double ss_tot = (actual.array() - actual.mean()).square().sum();
    if (val.size() >= 2 && ss_tot > 0.0) {
      fr.r2 = 1.0 - (pred - actual).squaredNorm() / ss_tot;
      r2_sum += fr.r2;
      ++r2_count;
    }
    out.mean_mse += fr.mse / static_cast<double>(k);
    out.folds.push_back(std::move(fr));
  }
  if (r2_count > 0) out.mean_r2 = r2_sum / static_cast<double>(r2_count);
  const double ss_tot = (y.array() - y.mean()).square().sum();
  if (ss_tot > 0.0) out.pooled_r2 = 1.0 - (oof - y).squaredNorm() / ss_tot;
  return out;
}

}  // namespace colmp

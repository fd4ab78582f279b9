#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "colmp/closed_form.hpp"
#include "colmp/data_model.hpp"
#include "colmp/linear.hpp"

namespace colmp {

/// Three binary logistic models, one per failure mode, over shared features.
struct OvaModel {
  std::vector<std::string> feature_names;
  bool has_intercept = true;
  std::array<Eigen::VectorXd, 3> coefficients;  // indexed by FailureMode, intercept first
  double learning_rate = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
};

struct OvaTraining {
  OvaModel model;
  // Cost before each update plus the final cost: iterations + 1 entries.
  std::array<std::vector<double>, 3> cost_history;
};

namespace detail {

// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double cross_entropy(const Eigen::VectorXd& z, const Eigen::VectorXd& t) {
  double c = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) c += softplus(z(i)) - t(i) * z(i);
  return c / static_cast<double>(z.size());
}

}  // namespace detail

/// Full-batch gradient descent on the mean binary cross-entropy of each
/// one-vs-rest problem, starting from zero coefficients. `seed` is recorded
/// for provenance; the procedure itself draws no random numbers.
inline OvaTraining ova_fit(const DesignMatrix& X, std::span<const FailureMode> labels, double learning_rate,
                           std::size_t iterations, std::uint64_t seed) {
  X.validate();
  if (static_cast<std::size_t>(X.rows()) != labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "design rows and labels differ in length");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidArgument, "learning rate must be > 0");
  }
  const std::set<FailureMode> present(labels.begin(), labels.end());
  if (present.size() < 2) throw Error(ErrorCode::SingleClassData, "training labels contain fewer than two classes");

  const Eigen::MatrixXd a = X.augmented();
  const auto m = static_cast<double>(a.rows());
  OvaTraining out;
  out.model.feature_names = X.feature_names;
  out.model.has_intercept = X.includes_intercept;
  out.model.learning_rate = learning_rate;
  out.model.iterations = iterations;
  out.model.seed = seed;

  for (std::size_t c = 0; c < 3; ++c) {
    Eigen::VectorXd t(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) t(i) = labels[static_cast<std::size_t>(i)] == kFailureModes[c] ? 1.0 : 0.0;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(a.cols());
    auto& history = out.cost_history[c];
    history.reserve(iterations + 1);
    for (std::size_t it = 0; it <= iterations; ++it) {
      const Eigen::VectorXd z = a * w;
      const double cost = detail::cross_entropy(z, t);
      if (!std::isfinite(cost)) {
        throw Error(ErrorCode::DivergenceDetected, "cost became non-finite for class " +
                                                       std::string(to_string(kFailureModes[c])));
      }
      history.push_back(cost);
      if (it == iterations) break;
      const Eigen::VectorXd p = z.unaryExpr([](double v) { return sigmoid(v); });
      w -= (learning_rate / m) * (a.transpose() * (p - t));
    }
    out.model.coefficients[c] = std::move(w);
  }
  return out;
}

inline ClassScores ova_predict(const OvaModel& model, std::span<const double> features) {
  if (features.size() != model.feature_names.size()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(model.feature_names.size()) +
                                                  " features, got " + std::to_string(features.size()));
  }
  std::array<double, 3> s{};
  const std::size_t off = model.has_intercept ? 1 : 0;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& w = model.coefficients[c];
    double z = model.has_intercept ? w(0) : 0.0;
    for (std::size_t j = 0; j < features.size(); ++j) z += w(static_cast<Eigen::Index>(j + off)) * features[j];
    s[c] = z;
  }
  return make_class_scores(s);
}

// ---------------------------------------------------------------------------

/// Counts indexed [predicted][actual]. "Unconservative" means the forecast
/// mode is more ductile than the observed one (ductility FC > FSC > SC).
struct ConfusionMatrix {
  std::array<std::array<std::size_t, 3>, 3> counts{};

  std::size_t at(FailureMode predicted, FailureMode actual) const {
    return counts[index_of(predicted)][index_of(actual)];
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts) {
      for (auto v : row) n += v;
    }
    return n;
  }

  std::size_t correct() const { return counts[0][0] + counts[1][1] + counts[2][2]; }

  double accuracy() const { return static_cast<double>(correct()) / static_cast<double>(total()); }

  // Share of observed `actual` cases that were predicted correctly; NaN if none observed.
  double recall(FailureMode actual) const {
    std::size_t col = 0;
    for (std::size_t p = 0; p < 3; ++p) col += counts[p][index_of(actual)];
    return col == 0 ? std::nan("") : static_cast<double>(counts[index_of(actual)][index_of(actual)]) /
                                         static_cast<double>(col);
  }

  double unconservative_fraction() const {
    std::size_t n = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t a = p + 1; a < 3; ++a) n += counts[p][a];
    }
    return static_cast<double>(n) / static_cast<double>(total());
  }

  double conservative_fraction() const {
    std::size_t n = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t p = a + 1; p < 3; ++p) n += counts[p][a];
    }
    return static_cast<double>(n) / static_cast<double>(total());
  }
};

inline ConfusionMatrix confusion_matrix(std::span<const FailureMode> predicted, std::span<const FailureMode> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predicted.size()) + " predictions vs " +
                                               std::to_string(actual.size()) + " observations");
  }
  if (predicted.empty()) throw Error(ErrorCode::InsufficientRows, "confusion matrix needs at least one item");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) ++cm.counts[index_of(predicted[i])][index_of(actual[i])];
  return cm;
}

}  // namespace colmp

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colmp/artifact.hpp"
#include "colmp/classifier.hpp"
#include "colmp/closed_form.hpp"
#include "colmp/data_model.hpp"
#include "colmp/evaluation.hpp"
#include "colmp/gpr.hpp"
#include "colmp/linear.hpp"
#include "colmp/nn.hpp"

namespace colmp {

/// Value of a named model input: a base feature ("rho_t") or its square ("rho_t^2").
inline double feature_value(const ColumnFeatures& f, std::string_view name) {
  bool squared = false;
  if (name.ends_with("^2")) {
    squared = true;
    name.remove_suffix(2);
  }
  const auto idx = feature_index(name);
  if (!idx) throw Error(ErrorCode::CorruptPayload, "unknown model input '" + std::string(name) + "'");
  const double v = f.values()[*idx];
  return squared ? v * v : v;
}

inline std::vector<double> feature_values(const ColumnFeatures& f, const std::vector<std::string>& names) {
  std::vector<double> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(feature_value(f, n));
  return out;
}

/// Rows of one shape that carry the requested target.
inline std::vector<ColumnRecord> rows_with_target(const Dataset& ds, SectionShape shape, Target target) {
  std::vector<ColumnRecord> out;
  for (const auto& r : ds) {
    if (r.shape == shape && r.target(target)) out.push_back(r);
  }
  return out;
}

// The three inputs the fixed equations use for a given shape and target.
inline std::vector<std::string> default_feature_triplet(SectionShape shape, Target target) {
  if (shape == SectionShape::Circular && target == Target::A) return {"axial_ratio", "rho_t", "a_over_d"};
  return {"axial_ratio", "rho_t", "vy_over_vo"};
}

inline std::vector<std::size_t> column_indices(const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) out.push_back(*feature_index(n));
  return out;
}

// ---------------------------------------------------------------------------
// Regression training

enum class LinearRecipe { MLR, PRM, RLR };

struct LinearTraining {
  LinearModel model;
  std::optional<PValueReport> significance;  // MLR / PRM feature ranking
  std::optional<LambdaTuning> tuning;        // RLR only
};

/// MLR: OLS on the k most significant features. PRM: the same features plus
/// their squares. RLR: ridge over all six features with lambda tuned on a
/// seeded 70/30 split.
inline LinearTraining train_linear(const Dataset& ds, SectionShape shape, Target target, LinearRecipe recipe,
                                   std::uint64_t seed, std::size_t k = 3) {
  const auto rows = rows_with_target(ds, shape, target);
  const auto [x, y] = design_from_records(rows, target);
  LinearTraining out;
  if (recipe == LinearRecipe::RLR) {
    out.tuning = tune_lambda(x, y, seed, default_lambda_grid());
    out.model = ridge_fit(x, y, out.tuning->lambda_star);
    out.model.meta.seed = seed;
    out.model.meta.split = "70/30";
    return out;
  }
  out.significance = coefficient_pvalues(x, y);
  auto top = select_significant(*out.significance, k);
  std::sort(top.begin(), top.end());
  DesignMatrix xs = x.select_columns(top);
  if (recipe == LinearRecipe::PRM) xs = expand_squares(xs);
  out.model = ols_fit(xs, y);
  return out;
}

inline double predict_linear(const LinearModel& m, const ColumnFeatures& f) {
  const auto v = feature_values(f, m.feature_names());
  return m.predict_row(Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

inline GprTraining train_gpr(const Dataset& ds, SectionShape shape, Target target, std::uint64_t seed) {
  const auto rows = rows_with_target(ds, shape, target);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kNumFeatures));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = rows[i].features.values();
    for (std::size_t j = 0; j < kNumFeatures; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
    y(static_cast<Eigen::Index>(i)) = *rows[i].target(target);
  }
  return gpr_train(x, y, seed);
}

inline double predict_gpr(const GprRegressor& r, const ColumnFeatures& f) {
  const auto v = f.values();
  return r.predict(std::span<const double>(v.data(), v.size())).mean;
}

/// Circular columns get the squared a/d and V_y/V_o inputs.
inline MlpRegressorTraining train_mlp(const Dataset& ds, SectionShape shape, Target target, const MlpConfig& config,
                                      bool record_trace = false) {
  const auto rows = rows_with_target(ds, shape, target);
  std::vector<ColumnFeatures> feats;
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    feats.push_back(rows[i].features);
    y(static_cast<Eigen::Index>(i)) = *rows[i].target(target);
  }
  return mlp_train_regressor(feats, y, shape == SectionShape::Circular, config, record_trace);
}

// ---------------------------------------------------------------------------
// Classification training

inline std::vector<std::string> classifier_features(bool all_six) {
  if (all_six) return {kFeatureNames.begin(), kFeatureNames.end()};
  return {"axial_ratio", "rho_t", "vy_over_vo"};
}

inline OvaTraining train_ova(const Dataset& ds, SectionShape shape, bool all_six, double learning_rate,
                             std::size_t iterations, std::uint64_t seed) {
  const auto names = classifier_features(all_six);
  std::vector<const ColumnRecord*> rows;
  for (const auto& r : ds) {
    if (r.shape == shape && r.mode) rows.push_back(&r);
  }
  DesignMatrix x;
  x.feature_names = names;
  x.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  std::vector<FailureMode> labels;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = feature_values(rows[i]->features, names);
    for (std::size_t j = 0; j < v.size(); ++j) x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
    labels.push_back(*rows[i]->mode);
  }
  if (rows.empty()) throw Error(ErrorCode::InsufficientRows, "no rows with an observed failure mode");
  return ova_fit(x, labels, learning_rate, iterations, seed);
}

inline ClassScores predict_ova(const OvaModel& m, const ColumnFeatures& f) {
  const auto v = feature_values(f, m.feature_names);
  return ova_predict(m, v);
}

// ---------------------------------------------------------------------------
// Evaluation helpers

using Predictor = std::function<double(const ColumnFeatures&)>;

/// Experiment-minus-estimate errors of `predict` over the rows of one shape
/// carrying `target`.
inline std::vector<ErrorSample> prediction_errors(const Dataset& ds, SectionShape shape, Target target,
                                                  const Predictor& predict) {
  std::vector<ErrorSample> out;
  for (const auto& r : rows_with_target(ds, shape, target)) {
    out.push_back({r.id, *r.target(target) - predict(r.features), r.features});
  }
  return out;
}

inline FitMetrics evaluate_predictor(const Dataset& ds, SectionShape shape, Target target, const Predictor& predict) {
  std::vector<double> est, act;
  for (const auto& r : rows_with_target(ds, shape, target)) {
    est.push_back(predict(r.features));
    act.push_back(*r.target(target));
  }
  return fit_metrics(est, act);
}

/// Closed-form predictor; `raw` selects the unclamped equation value.
inline Predictor closed_form_predictor(EstimatorFamily family, SectionShape shape, Target target, bool raw = false) {
  return [=](const ColumnFeatures& f) {
    const auto e = estimate_raw(family, f, shape);
    if (raw) return target == Target::A ? e.raw_a : e.raw_b;
    return target == Target::A ? e.params.a : e.params.b;
  };
}

}  // namespace colmp

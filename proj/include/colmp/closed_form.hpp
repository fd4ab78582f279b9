#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string_view>

#include "colmp/data_model.hpp"

namespace colmp {

enum class EstimatorFamily { GM, MLR, PRM, RLR };

inline constexpr std::array<EstimatorFamily, 4> kEstimatorFamilies = {
    EstimatorFamily::GM, EstimatorFamily::MLR, EstimatorFamily::PRM, EstimatorFamily::RLR};

constexpr std::string_view to_string(EstimatorFamily f) {
  switch (f) {
    case EstimatorFamily::GM: return "gm";
    case EstimatorFamily::MLR: return "mlr";
    case EstimatorFamily::PRM: return "prm";
    case EstimatorFamily::RLR: return "rlr";
  }
  return "?";
}

inline std::optional<EstimatorFamily> parse_estimator_family(std::string_view s) {
  for (auto f : kEstimatorFamilies) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

/// Clamped parameters plus the raw equation values they came from.
struct Estimate {
  ModelingParams params;
  double raw_a = 0.0;
  double raw_b = 0.0;
};

// a >= 0, then b >= a.
inline ModelingParams clamp_params(double raw_a, double raw_b) {
  const double a = std::max(raw_a, 0.0);
  return {a, std::max(raw_b, a)};
}

namespace detail {

inline void require_finite(const ColumnFeatures& f) {
  const auto v = f.values();
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::NonFiniteInput, std::string(kFeatureNames[i]) + " is not finite");
    }
  }
}

// c0 + c1*axial + c2*rho_t + c3*third, the shape shared by the three-variable equations.
struct Linear3 {
  double c0, c_axial, c_rho_t, c_third;

  double operator()(double axial, double rho_t, double third) const {
    return c0 + c_axial * axial + c_rho_t * rho_t + c_third * third;
  }
};

inline Estimate make_estimate(double raw_a, double raw_b) { return {clamp_params(raw_a, raw_b), raw_a, raw_b}; }

}  // namespace detail

// Code-adopted equations (b is the generated lower-bound fit).
inline Estimate estimate_gm_raw(const ColumnFeatures& f, SectionShape shape) {
  detail::require_finite(f);
  static constexpr detail::Linear3 a_rect{0.042, -0.043, 0.063, -0.023};
  static constexpr detail::Linear3 b_rect{0.051, -0.051, 1.3, -0.023};
  static constexpr detail::Linear3 a_circ{0.06, -0.058, 1.3, -0.037};
  static constexpr detail::Linear3 b_circ{0.064, -0.07, 2.85, -0.03};
  const bool rect = shape == SectionShape::Rectangular;
  const auto& ea = rect ? a_rect : a_circ;
  const auto& eb = rect ? b_rect : b_circ;
  return detail::make_estimate(ea(f.axial_ratio, f.rho_t, f.shear_ratio),
                               eb(f.axial_ratio, f.rho_t, f.shear_ratio));
}

// Three-variable multiple linear regression. Circular a uses a/d in place of V_y/V_o.
inline Estimate estimate_mlr_raw(const ColumnFeatures& f, SectionShape shape) {
  detail::require_finite(f);
  static constexpr detail::Linear3 a_rect{0.046, -0.043, 0.363, -0.031};
  static constexpr detail::Linear3 b_rect{0.054, -0.047, 0.565, -0.03};
  static constexpr detail::Linear3 a_circ{-0.002, -0.059, 3.282, 0.007};
  static constexpr detail::Linear3 b_circ{0.069, -0.072, 0.742, -0.044};
  if (shape == SectionShape::Rectangular) {
    return detail::make_estimate(a_rect(f.axial_ratio, f.rho_t, f.shear_ratio),
                                 b_rect(f.axial_ratio, f.rho_t, f.shear_ratio));
  }
  return detail::make_estimate(a_circ(f.axial_ratio, f.rho_t, f.span_depth),
                               b_circ(f.axial_ratio, f.rho_t, f.shear_ratio));
}

/// Polynomial coefficients beta_0..beta_6 for one (shape, target) row:
/// b0 + b1*x1 + b2*x2 + b3*x3 + b4*x1^2 + b5*x2^2 + b6*x3^2 with
/// x1 = axial ratio, x2 = rho_t, x3 = V_y/V_o (a/d for circular a).
struct PrmCoefficients {
  std::array<double, 7> beta;

  double operator()(double x1, double x2, double x3) const {
    return beta[0] + beta[1] * x1 + beta[2] * x2 + beta[3] * x3 + beta[4] * x1 * x1 +
           beta[5] * x2 * x2 + beta[6] * x3 * x3;
  }
};

inline const PrmCoefficients& prm_coefficients(SectionShape shape, Target target) {
  static constexpr PrmCoefficients a_rect{{0.030, -0.039, 1.488, -0.031, -0.009, -16.166, -0.001}};
  static constexpr PrmCoefficients b_rect{{0.033, -0.012, 2.150, -0.044, -0.056, -23.141, 0.007}};
  static constexpr PrmCoefficients a_circ{{-0.018, -0.027, 6.933, 0.010, -0.057, -280.136, 0.000}};
  static constexpr PrmCoefficients b_circ{{0.079, 0.008, 0.935, -0.088, -0.141, -8.469, 0.024}};
  if (shape == SectionShape::Rectangular) return target == Target::A ? a_rect : b_rect;
  return target == Target::A ? a_circ : b_circ;
}

inline Estimate estimate_prm_raw(const ColumnFeatures& f, SectionShape shape) {
  detail::require_finite(f);
  const double third_a = shape == SectionShape::Rectangular ? f.shear_ratio : f.span_depth;
  const double raw_a = prm_coefficients(shape, Target::A)(f.axial_ratio, f.rho_t, third_a);
  const double raw_b = prm_coefficients(shape, Target::B)(f.axial_ratio, f.rho_t, f.shear_ratio);
  return detail::make_estimate(raw_a, raw_b);
}

// Six-variable regularized fits; coefficient order follows kFeatureNames.
inline Estimate estimate_rlr_raw(const ColumnFeatures& f, SectionShape shape) {
  detail::require_finite(f);
  using Row = std::array<double, kNumFeatures + 1>;
  static constexpr Row a_rect{0.052, -0.0012, -0.046, 0.36, 0.21, 0.0074, -0.030};
  static constexpr Row b_rect{0.055, 0.0019, -0.031, 0.01, 0.0034, -0.027, -0.012};
  static constexpr Row a_circ{0.047, 0.003, -0.062, 0.440, 0.622, -0.031, -0.030};
  static constexpr Row b_circ{0.043, 0.004, -0.022, 0.003, 0.001, -0.024, -0.014};
  const bool rect = shape == SectionShape::Rectangular;
  const auto v = f.values();
  auto eval = [&v](const Row& c) {
    double s = c[0];
    for (std::size_t i = 0; i < kNumFeatures; ++i) s += c[i + 1] * v[i];
    return s;
  };
  return detail::make_estimate(eval(rect ? a_rect : a_circ), eval(rect ? b_rect : b_circ));
}

inline Estimate estimate_raw(EstimatorFamily family, const ColumnFeatures& f, SectionShape shape) {
  switch (family) {
    case EstimatorFamily::GM: return estimate_gm_raw(f, shape);
    case EstimatorFamily::MLR: return estimate_mlr_raw(f, shape);
    case EstimatorFamily::PRM: return estimate_prm_raw(f, shape);
    case EstimatorFamily::RLR: return estimate_rlr_raw(f, shape);
  }
  throw Error(ErrorCode::UnknownModel, "unknown estimator family");
}

inline ModelingParams estimate_gm(const ColumnFeatures& f, SectionShape shape) {
  return estimate_gm_raw(f, shape).params;
}
inline ModelingParams estimate_mlr_fixed(const ColumnFeatures& f, SectionShape shape) {
  return estimate_mlr_raw(f, shape).params;
}
inline ModelingParams estimate_prm_fixed(const ColumnFeatures& f, SectionShape shape) {
  return estimate_prm_raw(f, shape).params;
}
inline ModelingParams estimate_rlr_fixed(const ColumnFeatures& f, SectionShape shape) {
  return estimate_rlr_raw(f, shape).params;
}

// ---------------------------------------------------------------------------
// Failure-mode scores

struct ClassScores {
  std::array<double, 3> scores{};         // indexed by FailureMode
  std::array<double, 3> probabilities{};  // independent sigmoids, not normalized
  FailureMode predicted = FailureMode::FC;

  double score(FailureMode m) const { return scores[index_of(m)]; }
  double probability(FailureMode m) const { return probabilities[index_of(m)]; }
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Argmax over scores; a tie goes to the more brittle mode.
inline FailureMode argmax_mode(const std::array<double, 3>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (scores[i] >= scores[best]) best = i;
  }
  return kFailureModes[best];
}

inline ClassScores make_class_scores(const std::array<double, 3>& scores) {
  ClassScores out;
  out.scores = scores;
  for (std::size_t i = 0; i < 3; ++i) out.probabilities[i] = sigmoid(scores[i]);
  out.predicted = argmax_mode(scores);
  return out;
}

// One-vs-all linear scores over (axial ratio, rho_t, V_y/V_o), rows FC, FSC, SC.
inline ClassScores classify_fixed(const ColumnFeatures& f, SectionShape shape) {
  detail::require_finite(f);
  static constexpr std::array<detail::Linear3, 3> rect{{
      {6.94, -3.99, 0.44, -9.21},
      {-2.19, 0.35, -1.04, 1.63},
      {-7.7, 4.07, -0.05, 5.86},
  }};
  static constexpr std::array<detail::Linear3, 3> circ{{
      {5.02, 2.15, -0.2, -6.35},
      {-1.52, -3.42, 0.02, 0.8},
      {-9.72, 3.68, -0.19, 7.27},
  }};
  const auto& rows = shape == SectionShape::Rectangular ? rect : circ;
  std::array<double, 3> s{};
  for (std::size_t i = 0; i < 3; ++i) s[i] = rows[i](f.axial_ratio, f.rho_t, f.shear_ratio);
  return make_class_scores(s);
}

}  // namespace colmp

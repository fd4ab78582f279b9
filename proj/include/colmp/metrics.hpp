#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "colmp/error.hpp"

namespace colmp {

struct FitMetrics {
  double r2 = 0.0;
  double mse = 0.0;
  double std_err = 0.0;  // population std of (actual - estimated)
};

/// Goodness of fit of `estimated` against `actual`. R^2 uses the mean of
/// `actual` itself, so it can be negative for a poor model.
inline FitMetrics fit_metrics(std::span<const double> estimated, std::span<const double> actual) {
  if (estimated.size() != actual.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(estimated.size()) + " estimates vs " +
                                               std::to_string(actual.size()) + " observations");
  }
  const std::size_t n = actual.size();
  if (n < 2) throw Error(ErrorCode::InsufficientRows, "fit metrics need at least 2 observations");

  double mean_actual = 0.0;
  double mean_err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_actual += actual[i];
    mean_err += actual[i] - estimated[i];
  }
  mean_actual /= static_cast<double>(n);
  mean_err /= static_cast<double>(n);

  double ss_res = 0.0;
  double ss_tot = 0.0;
  double ss_dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = actual[i] - estimated[i];
    ss_res += e * e;
    ss_tot += (actual[i] - mean_actual) * (actual[i] - mean_actual);
    ss_dev += (e - mean_err) * (e - mean_err);
  }
  if (ss_tot == 0.0) throw Error(ErrorCode::ZeroVariance, "observations are all identical, R^2 undefined");

  FitMetrics m;
  m.mse = ss_res / static_cast<double>(n);
  m.r2 = 1.0 - ss_res / ss_tot;
  m.std_err = std::sqrt(ss_dev / static_cast<double>(n));
  return m;
}

}  // namespace colmp

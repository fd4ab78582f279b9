#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colmp/classifier.hpp"
#include "colmp/data_model.hpp"
#include "colmp/linear.hpp"
#include "colmp/metrics.hpp"

namespace colmp {

/// Experimental minus estimated value; negative means the estimate was unconservative.
struct ErrorSample {
  std::string id;
  double error = 0.0;
  ColumnFeatures features;
};

struct CdfPoint {
  double error = 0.0;
  double fraction = 0.0;
};

/// Empirical CDF with F(x_(i)) = i/n; tied errors collapse to one point
/// carrying the highest fraction.
inline std::vector<CdfPoint> error_cdf(std::span<const double> errors) {
  if (errors.empty()) throw Error(ErrorCode::InsufficientRows, "CDF needs at least one error");
  std::vector<double> sorted(errors.begin(), errors.end());
  for (double e : sorted) {
    if (!std::isfinite(e)) throw Error(ErrorCode::NonFiniteInput, "error sample is not finite");
  }
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::vector<CdfPoint> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.push_back({sorted[i], i + 1 == sorted.size() ? 1.0 : static_cast<double>(i + 1) / n});
  }
  return out;
}

inline std::vector<CdfPoint> error_cdf(std::span<const ErrorSample> samples) {
  std::vector<double> e;
  e.reserve(samples.size());
  for (const auto& s : samples) e.push_back(s.error);
  return error_cdf(std::span<const double>(e));
}

/// Normalized distance of a column from the dataset mean:
/// d_i = (x_i - mean_i) / range_i, x_test = sqrt(sum d_i^2) / (0.5 sqrt(6)).
/// Equals 1 when every feature sits half a range away from its mean.
inline double separation_param(const ColumnFeatures& f, const DatasetStats& stats) {
  const auto v = f.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(v[i])) throw Error(ErrorCode::NonFiniteInput, std::string(kFeatureNames[i]) + " not finite");
    if (!(stats.range[i] > 0.0)) {
      throw Error(ErrorCode::ZeroRange, std::string(kFeatureNames[i]) + " has zero range in the dataset");
    }
    const double d = (v[i] - stats.mean[i]) / stats.range[i];
    sum += d * d;
  }
  return std::sqrt(sum) / (0.5 * std::sqrt(static_cast<double>(kNumFeatures)));
}

// ---------------------------------------------------------------------------

struct BoxStats {
  double min = 0.0;  // lower whisker
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;  // upper whisker
  std::vector<double> outliers;
};

namespace detail {

// Linear interpolation at fractional index q (n - 1) of sorted data.
inline double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace detail

/// Tukey box statistics. Whiskers are the most extreme values within 1.5 IQR
/// of the quartiles, never pulled inside the box; anything beyond is an outlier.
inline BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InsufficientRows, "box statistics need at least one value");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  BoxStats b;
  b.q1 = detail::quantile_sorted(s, 0.25);
  b.median = detail::quantile_sorted(s, 0.5);
  b.q3 = detail::quantile_sorted(s, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.min = b.q1;
  b.max = b.q3;
  for (double v : s) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
    } else {
      b.min = std::min(b.min, v);
      b.max = std::max(b.max, v);
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Binned significance analysis

struct BinSpec {
  std::string name;
  std::function<bool(const ColumnRecord&)> contains;
};

/// The nine rectangular-column subsets: three a/d ranges, three axial-load
/// ranges and the three failure modes.
inline std::vector<BinSpec> default_bins() {
  std::vector<BinSpec> bins{
      {"a/d<3", [](const ColumnRecord& r) { return r.features.span_depth < 3.0; }},
      {"3<=a/d<=5", [](const ColumnRecord& r) { return r.features.span_depth >= 3.0 && r.features.span_depth <= 5.0; }},
      {"a/d>5", [](const ColumnRecord& r) { return r.features.span_depth > 5.0; }},
      {"axial<0.1", [](const ColumnRecord& r) { return r.features.axial_ratio < 0.1; }},
      {"0.1<=axial<=0.3",
       [](const ColumnRecord& r) { return r.features.axial_ratio >= 0.1 && r.features.axial_ratio <= 0.3; }},
      {"axial>0.3", [](const ColumnRecord& r) { return r.features.axial_ratio > 0.3; }},
  };
  for (auto m : kFailureModes) {
    bins.push_back({std::string(to_string(m)), [m](const ColumnRecord& r) { return r.mode == m; }});
  }
  return bins;
}

struct BinResult {
  std::string name;
  std::size_t n = 0;
  std::vector<CoefficientStat> top_features;  // most significant first
  FitMetrics whole_set_fit;  // fitted on every row, scored on the bin
  FitMetrics bin_fit;        // fitted and scored on the bin
};

/// Builds the six-feature design matrix (with intercept) and target vector
/// from the rows carrying a value for `target`.
inline std::pair<DesignMatrix, Eigen::VectorXd> design_from_records(std::span<const ColumnRecord> rows, Target target) {
  std::vector<const ColumnRecord*> kept;
  for (const auto& r : rows) {
    if (r.target(target)) kept.push_back(&r);
  }
  DesignMatrix X;
  X.includes_intercept = true;
  X.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  X.values.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(kNumFeatures));
  Eigen::VectorXd y(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto v = kept[i]->features.values();
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      X.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
    }
    y(static_cast<Eigen::Index>(i)) = *kept[i]->target(target);
  }
  return {std::move(X), std::move(y)};
}

/// For each bin: rank the six features by p-value on the bin rows, keep the
/// top k, then fit OLS once on the whole set and once on the bin only. Both
/// fits are scored on the bin rows.
inline std::vector<BinResult> bin_analysis(const Dataset& ds, const std::vector<BinSpec>& bins, Target target,
                                           std::size_t k) {
  const auto [x_all, y_all] = design_from_records(ds.records(), target);
  std::vector<BinResult> out;
  for (const auto& bin : bins) {
    std::vector<ColumnRecord> rows;
    for (const auto& r : ds) {
      if (r.target(target) && bin.contains(r)) rows.push_back(r);
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyBin, "bin '" + bin.name + "' has no rows with a target value");
    if (rows.size() <= k + 2) {
      throw Error(ErrorCode::InsufficientRows,
                  "bin '" + bin.name + "' has " + std::to_string(rows.size()) + " rows, needs more than k + 2");
    }
    const auto [x_bin, y_bin] = design_from_records(rows, target);
    const auto report = coefficient_pvalues(x_bin, y_bin);
    const auto top = select_significant(report, k);

    BinResult res;
    res.name = bin.name;
    res.n = rows.size();
    const auto feats = report.features();
    for (auto j : top) res.top_features.push_back(feats[j]);

    const DesignMatrix x_bin_k = x_bin.select_columns(top);
    const auto whole = ols_fit(x_all.select_columns(top), y_all);
    const auto local = ols_fit(x_bin_k, y_bin);
    const Eigen::VectorXd pred_whole = whole.predict(x_bin_k);
    const Eigen::VectorXd pred_local = local.predict(x_bin_k);
    auto as_span = [](const Eigen::VectorXd& v) {
      return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
    };
    res.whole_set_fit = fit_metrics(as_span(pred_whole), as_span(y_bin));
    res.bin_fit = fit_metrics(as_span(pred_local), as_span(y_bin));
    out.push_back(std::move(res));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Errors split by classification outcome

struct ErrorCell {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  bool unconservative = false;  // predicted mode more ductile than observed
};

/// Cells indexed [observed][predicted].
struct MisclassTable {
  std::array<std::array<ErrorCell, 3>, 3> cells{};

  const ErrorCell& at(FailureMode observed, FailureMode predicted) const {
    return cells[index_of(observed)][index_of(predicted)];
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : cells) {
      for (const auto& c : row) n += c.count;
    }
    return n;
  }
};

inline MisclassTable misclass_error_table(std::span<const ColumnRecord> records,
                                          std::span<const FailureMode> predicted, std::span<const double> mp_errors) {
  if (records.size() != predicted.size() || records.size() != mp_errors.size()) {
    throw Error(ErrorCode::LengthMismatch, "records, predictions and errors must align");
  }
  std::array<std::array<std::vector<double>, 3>, 3> buckets;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].mode) {
      throw Error(ErrorCode::InvalidArgument, "record '" + records[i].id + "' has no observed failure mode");
    }
    buckets[index_of(*records[i].mode)][index_of(predicted[i])].push_back(mp_errors[i]);
  }
  MisclassTable t;
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t p = 0; p < 3; ++p) {
      auto& cell = t.cells[o][p];
      cell.unconservative = p < o;
      auto& v = buckets[o][p];
      cell.count = v.size();
      if (v.empty()) continue;
      std::sort(v.begin(), v.end());
      cell.min = v.front();
      cell.max = v.back();
      double sum = 0.0;
      for (double e : v) sum += e;
      cell.mean = sum / static_cast<double>(v.size());
      cell.median = detail::quantile_sorted(v, 0.5);
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// CSV reports

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "";
  return format_double(v);
}

}  // namespace detail

inline std::string cdf_to_csv(const std::vector<CdfPoint>& points) {
  std::string out = "error,fraction\n";
  for (const auto& p : points) out += detail::num(p.error) + "," + detail::num(p.fraction) + "\n";
  return out;
}

inline std::string bins_to_csv(const std::vector<BinResult>& bins) {
  std::string out = "bin,n,features,p_values,r2_whole_set,mse_whole_set,r2_bin,mse_bin\n";
  for (const auto& b : bins) {
    std::string names, ps;
    for (std::size_t i = 0; i < b.top_features.size(); ++i) {
      if (i) {
        names += ';';
        ps += ';';
      }
      names += b.top_features[i].name;
      ps += detail::num(b.top_features[i].p_value);
    }
    out += b.name + "," + std::to_string(b.n) + "," + names + "," + ps + "," + detail::num(b.whole_set_fit.r2) + "," +
           detail::num(b.whole_set_fit.mse) + "," + detail::num(b.bin_fit.r2) + "," + detail::num(b.bin_fit.mse) + "\n";
  }
  return out;
}

inline std::string misclass_to_csv(const MisclassTable& t) {
  std::string out = "observed,predicted,count,min,max,mean,median,unconservative\n";
  for (auto o : kFailureModes) {
    for (auto p : kFailureModes) {
      const auto& c = t.at(o, p);
      out += std::string(to_string(o)) + "," + std::string(to_string(p)) + "," + std::to_string(c.count) + ",";
      if (c.count) {
        out += detail::num(c.min) + "," + detail::num(c.max) + "," + detail::num(c.mean) + "," + detail::num(c.median);
      } else {
        out += ",,,";
      }
      out += c.unconservative ? ",1\n" : ",0\n";
    }
  }
  return out;
}

inline std::string confusion_to_csv(const ConfusionMatrix& cm) {
  std::string out = "predicted,actual,count\n";
  for (auto p : kFailureModes) {
    for (auto a : kFailureModes) {
      out += std::string(to_string(p)) + "," + std::string(to_string(a)) + "," + std::to_string(cm.at(p, a)) + "\n";
    }
  }
  return out;
}

inline std::string box_to_csv(const std::vector<std::pair<std::string, BoxStats>>& boxes) {
  std::string out = "series,min,q1,median,q3,max,outliers\n";
  for (const auto& [name, b] : boxes) {
    std::string outl;
    for (std::size_t i = 0; i < b.outliers.size(); ++i) {
      if (i) outl += ';';
      outl += detail::num(b.outliers[i]);
    }
    out += name + "," + detail::num(b.min) + "," + detail::num(b.q1) + "," + detail::num(b.median) + "," +
           detail::num(b.q3) + "," + detail::num(b.max) + "," + outl + "\n";
  }
  return out;
}

}  // namespace colmp

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "colmp/error.hpp"

namespace colmp {

enum class SectionShape { Rectangular, Circular };

enum class FailureMode { FC, FSC, SC };

enum class BSource { B1Measured, B2Generated, NotAvailable };

enum class Target { A, B };

inline constexpr std::array<FailureMode, 3> kFailureModes = {FailureMode::FC, FailureMode::FSC,
                                                             FailureMode::SC};

// Ductility rank: FC is the most ductile mode, SC the most brittle.
constexpr int ductility_rank(FailureMode m) { return static_cast<int>(m); }

constexpr std::size_t index_of(FailureMode m) { return static_cast<std::size_t>(m); }

constexpr std::string_view to_string(SectionShape s) {
  return s == SectionShape::Rectangular ? "R" : "C";
}

constexpr std::string_view to_string(FailureMode m) {
  switch (m) {
    case FailureMode::FC: return "FC";
    case FailureMode::FSC: return "FSC";
    case FailureMode::SC: return "SC";
  }
  return "?";
}

constexpr std::string_view to_string(BSource b) {
  switch (b) {
    case BSource::B1Measured: return "B1";
    case BSource::B2Generated: return "B2";
    case BSource::NotAvailable: return "NA";
  }
  return "?";
}

constexpr std::string_view to_string(Target t) { return t == Target::A ? "a" : "b"; }

inline std::optional<SectionShape> parse_shape(std::string_view s) {
  if (s == "R") return SectionShape::Rectangular;
  if (s == "C") return SectionShape::Circular;
  return std::nullopt;
}

inline std::optional<FailureMode> parse_failure_mode(std::string_view s) {
  if (s == "FC") return FailureMode::FC;
  if (s == "FSC") return FailureMode::FSC;
  if (s == "SC") return FailureMode::SC;
  return std::nullopt;
}

inline std::optional<Target> parse_target(std::string_view s) {
  if (s == "a") return Target::A;
  if (s == "b") return Target::B;
  return std::nullopt;
}

inline constexpr std::size_t kNumFeatures = 6;

// Column names double as feature names everywhere (CSV, artifacts, JSON).
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "a_over_d", "axial_ratio", "rho_l", "rho_t", "s_over_d", "vy_over_vo"};

/// The six nondimensional ratios describing a column test.
struct ColumnFeatures {
  double span_depth = 0.0;     // a/d
  double axial_ratio = 0.0;    // P / (A_g f'_c)
  double rho_l = 0.0;          // longitudinal reinforcement ratio
  double rho_t = 0.0;          // A_v / (b_w s)
  double spacing_depth = 0.0;  // s/d
  double shear_ratio = 0.0;    // V_y / V_o

  std::array<double, kNumFeatures> values() const {
    return {span_depth, axial_ratio, rho_l, rho_t, spacing_depth, shear_ratio};
  }

  static ColumnFeatures from_values(const std::array<double, kNumFeatures>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }

  friend bool operator==(const ColumnFeatures&, const ColumnFeatures&) = default;
};

inline std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (kFeatureNames[i] == name) return i;
  }
  return std::nullopt;
}

constexpr bool feature_must_be_positive(std::size_t i) { return i == 0 || i == 4; }

/// Throws NonFiniteInput or InvalidFeatures when `f` is outside the domain.
inline void validate_features(const ColumnFeatures& f) {
  const auto v = f.values();
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::NonFiniteInput, std::string(kFeatureNames[i]) + " is not finite");
    }
  }
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (v[i] < 0.0 || (feature_must_be_positive(i) && v[i] == 0.0)) {
      throw Error(ErrorCode::InvalidFeatures,
                  std::string(kFeatureNames[i]) +
                      (feature_must_be_positive(i) ? " must be > 0" : " must be >= 0"));
    }
  }
}

/// Plastic rotations in radians; a >= 0 and b >= a.
struct ModelingParams {
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const ModelingParams&, const ModelingParams&) = default;
};

struct ColumnRecord {
  std::string id;
  SectionShape shape = SectionShape::Rectangular;
  ColumnFeatures features;
  std::optional<double> mp_a;
  std::optional<double> mp_b;
  BSource b_source = BSource::NotAvailable;
  std::optional<FailureMode> mode;

  std::optional<double> target(Target t) const { return t == Target::A ? mp_a : mp_b; }

  friend bool operator==(const ColumnRecord&, const ColumnRecord&) = default;
};

/// An immutable, validated collection of column tests in file order.
class Dataset {
 public:
  Dataset() = default;

  // Checks id uniqueness and the record invariants; row numbers in error
  // messages are 1-based positions in `records`.
  explicit Dataset(std::vector<ColumnRecord> records) : records_(std::move(records)) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (!seen.insert(r.id).second) {
        throw Error(ErrorCode::DuplicateId,
                    "row " + std::to_string(i + 1) + ": id '" + r.id + "' appears more than once");
      }
      if (r.mp_a && r.mp_b && *r.mp_b < *r.mp_a) {
        throw Error(ErrorCode::BLessThanA, "row " + std::to_string(i + 1) + ": mp_b_rad < mp_a_rad");
      }
    }
  }

  const std::vector<ColumnRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const ColumnRecord& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  Dataset filter(SectionShape shape) const {
    std::vector<ColumnRecord> out;
    for (const auto& r : records_) {
      if (r.shape == shape) out.push_back(r);
    }
    return Dataset(std::move(out));
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<ColumnRecord> records_;
};

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::array<std::string_view, 12> kCsvColumns = {
    "id",       "shape",      "a_over_d", "axial_ratio", "rho_l",    "rho_t",
    "s_over_d", "vy_over_vo", "mp_a_rad", "mp_b_rad",    "b_source", "failure_mode"};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string cell_ref(std::size_t row, std::string_view column) {
  return "row " + std::to_string(row) + ", column " + std::string(column);
}

}  // namespace detail

/// Parses the column-test CSV. Columns are located by header name, so extra
/// columns are ignored. Row numbers in errors count data rows from 1.
inline Dataset parse_dataset(std::string_view csv_text) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= csv_text.size()) {
      auto pos = csv_text.find('\n', start);
      if (pos == std::string_view::npos) pos = csv_text.size();
      auto line = csv_text.substr(start, pos - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      start = pos + 1;
    }
  }
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::MissingColumn, "empty input, no header row");

  auto header = detail::split_cells(lines[0]);
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].remove_prefix(3);
  std::array<std::size_t, kCsvColumns.size()> col{};
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kCsvColumns[c]);
    if (it == header.end()) {
      throw Error(ErrorCode::MissingColumn, "header lacks column '" + std::string(kCsvColumns[c]) + "'");
    }
    col[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<ColumnRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row = li;
    if (detail::trim(lines[li]).empty()) continue;
    const auto cells = detail::split_cells(lines[li]);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow, "row " + std::to_string(row) + " has " +
                                               std::to_string(cells.size()) + " cells, expected " +
                                               std::to_string(header.size()));
    }
    auto cell = [&](std::size_t c) { return cells[col[c]]; };

    ColumnRecord rec;
    rec.id = std::string(cell(0));
    if (rec.id.empty()) throw Error(ErrorCode::MalformedRow, detail::cell_ref(row, "id") + " is empty");

    const auto shape = parse_shape(cell(1));
    if (!shape) {
      throw Error(ErrorCode::InvalidCategory, detail::cell_ref(row, "shape") + ": expected R or C");
    }
    rec.shape = *shape;

    std::array<double, kNumFeatures> fv{};
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const auto name = kCsvColumns[2 + i];
      const auto v = detail::parse_double(cell(2 + i));
      if (!v) {
        throw Error(ErrorCode::NonNumericCell,
                    detail::cell_ref(row, name) + ": '" + std::string(cell(2 + i)) + "' is not a finite number");
      }
      if (*v < 0.0 || (feature_must_be_positive(i) && *v == 0.0)) {
        throw Error(ErrorCode::NegativeRatio, detail::cell_ref(row, name) + ": value " + std::string(cell(2 + i)) +
                                                  (feature_must_be_positive(i) ? " must be > 0" : " must be >= 0"));
      }
      fv[i] = *v;
    }
    rec.features = ColumnFeatures::from_values(fv);

    for (std::size_t c : {std::size_t{8}, std::size_t{9}}) {
      if (cell(c).empty()) continue;
      const auto v = detail::parse_double(cell(c));
      if (!v) {
        throw Error(ErrorCode::NonNumericCell, detail::cell_ref(row, kCsvColumns[c]) + ": '" +
                                                   std::string(cell(c)) + "' is not a finite number");
      }
      if (*v < 0.0) {
        throw Error(ErrorCode::NegativeRatio, detail::cell_ref(row, kCsvColumns[c]) + ": rotation must be >= 0");
      }
      (c == 8 ? rec.mp_a : rec.mp_b) = *v;
    }
    if (rec.mp_a && rec.mp_b && *rec.mp_b < *rec.mp_a) {
      throw Error(ErrorCode::BLessThanA, "row " + std::to_string(row) + ": mp_b_rad < mp_a_rad");
    }

    const auto bs = cell(10);
    if (bs == "B1") rec.b_source = BSource::B1Measured;
    else if (bs == "B2") rec.b_source = BSource::B2Generated;
    else if (bs == "NA" || bs.empty()) rec.b_source = BSource::NotAvailable;
    else throw Error(ErrorCode::InvalidCategory, detail::cell_ref(row, "b_source") + ": expected B1, B2 or NA");

    const auto fm = cell(11);
    if (!(fm.empty() || fm == "NA")) {
      rec.mode = parse_failure_mode(fm);
      if (!rec.mode) {
        throw Error(ErrorCode::InvalidCategory,
                    detail::cell_ref(row, "failure_mode") + ": expected FC, FSC, SC or NA");
      }
    }
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records));
}

/// Writes the canonical CSV form; numbers use the shortest round-trip format.
inline std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    if (c) out += ',';
    out += kCsvColumns[c];
  }
  out += '\n';
  for (const auto& r : ds) {
    out += r.id;
    out += ',';
    out += to_string(r.shape);
    for (double v : r.features.values()) {
      out += ',';
      out += detail::format_double(v);
    }
    out += ',';
    if (r.mp_a) out += detail::format_double(*r.mp_a);
    out += ',';
    if (r.mp_b) out += detail::format_double(*r.mp_b);
    out += ',';
    out += to_string(r.b_source);
    out += ',';
    out += r.mode ? to_string(*r.mode) : std::string_view("NA");
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summary statistics

struct DatasetStats {
  SectionShape shape = SectionShape::Rectangular;
  std::size_t count = 0;
  std::array<double, kNumFeatures> mean{};
  std::array<double, kNumFeatures> min{};
  std::array<double, kNumFeatures> max{};
  std::array<double, kNumFeatures> range{};

  bool has_zero_range(std::size_t feature) const { return range[feature] == 0.0; }

  std::vector<std::string_view> zero_range_features() const {
    std::vector<std::string_view> out;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      if (has_zero_range(i)) out.push_back(kFeatureNames[i]);
    }
    return out;
  }
};

/// Per-feature mean/min/max/range over the rows of one shape. Constant
/// features are reported with range 0 and left for the caller to reject.
inline DatasetStats dataset_stats(const Dataset& ds, SectionShape shape) {
  DatasetStats st;
  st.shape = shape;
  std::array<std::vector<double>, kNumFeatures> columns;
  for (const auto& r : ds) {
    if (r.shape != shape) continue;
    ++st.count;
    const auto v = r.features.values();
    for (std::size_t i = 0; i < kNumFeatures; ++i) columns[i].push_back(v[i]);
  }
  if (st.count < 2) {
    throw Error(ErrorCode::InsufficientRows, "statistics need at least 2 rows of shape " +
                                                 std::string(to_string(shape)) + ", found " +
                                                 std::to_string(st.count));
  }
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    // Summing in sorted order makes the result independent of row order.
    auto& col = columns[i];
    std::sort(col.begin(), col.end());
    double sum = 0.0;
    for (double v : col) sum += v;
    st.min[i] = col.front();
    st.max[i] = col.back();
    st.mean[i] = std::clamp(sum / static_cast<double>(st.count), st.min[i], st.max[i]);
    st.range[i] = st.max[i] - st.min[i];
  }
  return st;
}

}  // namespace colmp

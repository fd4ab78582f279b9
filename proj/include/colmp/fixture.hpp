#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "colmp/closed_form.hpp"
#include "colmp/data_model.hpp"
#include "colmp/random.hpp"

namespace colmp {

struct FeatureRange {
  double lo;
  double hi;
};

// Sampling box for synthetic columns, indexed like kFeatureNames.
inline constexpr std::array<FeatureRange, kNumFeatures> kFixtureRanges = {{
    {1.0, 8.0},      // a/d
    {0.0, 0.7},      // axial ratio
    {0.005, 0.04},   // rho_l
    {0.0005, 0.02},  // rho_t
    {0.1, 1.0},      // s/d
    {0.2, 1.5},      // V_y/V_o
}};

inline constexpr double kFixtureNoiseRad = 0.005;

// Roughly one in ten synthetic b values is tagged as measured (B1).
inline constexpr double kFixtureMeasuredBFraction = 0.1;

/// Deterministic synthetic database: features uniform over kFixtureRanges,
/// a/b from the three-variable regression equations plus Gaussian noise then
/// clamped, failure mode from the fixed classifier.
inline Dataset generate_fixture(std::uint64_t seed, std::size_t n_rect, std::size_t n_circ) {
  Rng rng(seed);
  std::vector<ColumnRecord> records;
  records.reserve(n_rect + n_circ);
  auto make = [&](SectionShape shape, std::size_t i) {
    ColumnRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "%s%04zu", shape == SectionShape::Rectangular ? "R" : "C", i + 1);
    r.id = id;
    r.shape = shape;
    std::array<double, kNumFeatures> v{};
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
      v[k] = rng.uniform(kFixtureRanges[k].lo, kFixtureRanges[k].hi);
    }
    r.features = ColumnFeatures::from_values(v);
    const auto est = estimate_mlr_raw(r.features, shape);
    const double noise_a = rng.normal(0.0, kFixtureNoiseRad);
    const double noise_b = rng.normal(0.0, kFixtureNoiseRad);
    const auto mp = clamp_params(est.raw_a + noise_a, est.raw_b + noise_b);
    r.mp_a = mp.a;
    r.mp_b = mp.b;
    r.b_source = rng.uniform() < kFixtureMeasuredBFraction ? BSource::B1Measured : BSource::B2Generated;
    r.mode = classify_fixed(r.features, shape).predicted;
    return r;
  };
  for (std::size_t i = 0; i < n_rect; ++i) records.push_back(make(SectionShape::Rectangular, i));
  for (std::size_t i = 0; i < n_circ; ++i) records.push_back(make(SectionShape::Circular, i));
  return Dataset(std::move(records));
}

}  // namespace colmp

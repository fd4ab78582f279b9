#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "colmp/error.hpp"
#include "colmp/random.hpp"
#include "colmp/standardize.hpp"

namespace colmp {

struct SqExpKernelParams {
  double sigma_f = 1.0;       // signal amplitude
  double length_scale = 1.0;  // sigma in the exponent

  void validate() const {
    if (!(sigma_f > 0.0) || !std::isfinite(sigma_f) || !(length_scale > 0.0) || !std::isfinite(length_scale)) {
      throw Error(ErrorCode::InvalidArgument, "kernel parameters must be finite and > 0");
    }
  }
};

/// sigma_f^2 * exp(-|x - x2|^2 / (2 sigma^2)).
inline double kernel_eval(std::span<const double> x, std::span<const double> x2, const SqExpKernelParams& params) {
  if (x.size() != x2.size()) throw Error(ErrorCode::DimensionMismatch, "kernel inputs differ in length");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(x2[i])) throw Error(ErrorCode::NonFiniteInput, "kernel input not finite");
    const double d = x[i] - x2[i];
    d2 += d * d;
  }
  return params.sigma_f * params.sigma_f * std::exp(-d2 / (2.0 * params.length_scale * params.length_scale));
}

namespace detail {

inline double kernel_rows(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j,
                          const SqExpKernelParams& p) {
  const double d2 = (a.row(i) - b.row(j)).squaredNorm();
  return p.sigma_f * p.sigma_f * std::exp(-d2 / (2.0 * p.length_scale * p.length_scale));
}

}  // namespace detail

inline Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& x, const SqExpKernelParams& params) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = params.sigma_f * params.sigma_f;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = detail::kernel_rows(x, i, x, j, params);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

struct GprPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Zero-mean GP posterior over fixed training inputs.
struct GprModel {
  Eigen::MatrixXd inputs;  // n x d
  SqExpKernelParams kernel;
  double noise_var = 0.0;
  double jitter = 0.0;     // extra diagonal added to make the factorization succeed
  Eigen::MatrixXd chol;    // lower factor of K + (noise_var + jitter) I
  Eigen::VectorXd dual_weights;

  bool jitter_rescued() const { return jitter > 0.0; }
};

inline constexpr int kMaxJitterEscalations = 3;

/// Factorizes K + noise_var I. Jitter is only added when the plain system
/// fails: first 1e-10 sigma_f^2, then up to three tenfold escalations.
inline GprModel gpr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SqExpKernelParams& params,
                        double noise_var) {
  params.validate();
  if (x.rows() < 1) throw Error(ErrorCode::InsufficientRows, "GPR needs at least one training point");
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "inputs and targets differ in length");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorCode::NonFiniteInput, "training data not finite");
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) {
    throw Error(ErrorCode::InvalidArgument, "noise variance must be >= 0");
  }

  const Eigen::MatrixXd k = gram_matrix(x, params);
  const double sf2 = params.sigma_f * params.sigma_f;
  std::vector<double> jitters{0.0};
  for (int e = 0; e <= kMaxJitterEscalations; ++e) jitters.push_back(1e-10 * sf2 * std::pow(10.0, e));

  for (double jitter : jitters) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += noise_var + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd l = llt.matrixL();
    bool degenerate = false;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (l(i, i) * l(i, i) <= 1e-13 * a(i, i)) degenerate = true;
    }
    if (degenerate) continue;

    GprModel m;
    m.inputs = x;
    m.kernel = params;
    m.noise_var = noise_var;
    m.jitter = jitter;
    m.dual_weights = llt.solve(y);
    m.chol = std::move(l);
    return m;
  }
  throw Error(ErrorCode::FactorizationFailed, "Gram matrix not positive definite after jitter escalation");
}

/// Posterior mean k*^T alpha and variance k(x,x) - k*^T (K + s I)^-1 k*, floored at 0.
inline GprPrediction gpr_predict(const GprModel& model, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != model.inputs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "query dimension does not match training inputs");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "query not finite");
  }
  const Eigen::MatrixXd q = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Index n = model.inputs.rows();
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) kstar(i) = detail::kernel_rows(model.inputs, i, q, 0, model.kernel);

  GprPrediction out;
  out.mean = kstar.dot(model.dual_weights);
  const Eigen::VectorXd v = model.chol.triangularView<Eigen::Lower>().solve(kstar);
  const double prior = model.kernel.sigma_f * model.kernel.sigma_f;
  out.variance = std::clamp(prior - v.squaredNorm(), 0.0, prior);
  return out;
}

// ---------------------------------------------------------------------------
// Training protocol on raw features

/// A GP over standardized inputs with centered targets.
struct GprRegressor {
  Standardizer input_scaling;
  double target_mean = 0.0;
  GprModel model;

  GprPrediction predict(std::span<const double> features) const {
    const Eigen::RowVectorXd raw =
        Eigen::Map<const Eigen::RowVectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
    if (raw.size() != input_scaling.dim()) throw Error(ErrorCode::DimensionMismatch, "feature count mismatch");
    const Eigen::RowVectorXd z = input_scaling.apply_row(raw);
    auto p = gpr_predict(model, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
    p.mean += target_mean;
    return p;
  }
};

struct NoiseCandidate {
  double noise_var = 0.0;
  double validation_mse = 0.0;
};

struct GprTraining {
  GprRegressor regressor;
  std::vector<NoiseCandidate> candidates;
  Split split;
  std::uint64_t seed = 0;
};

inline constexpr std::array<double, 3> kNoiseGridFractions = {1e-6, 1e-4, 1e-2};

/// Seeded 90/10 split. Inputs standardized on the training part, sigma_f =
/// std(y_train), length scale 1, noise variance chosen from
/// {1e-6, 1e-4, 1e-2} * var(y_train) by held-out MSE.
inline GprTraining gpr_train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "inputs and targets differ in length");
  if (x.rows() < 10) throw Error(ErrorCode::InsufficientRows, "GPR protocol needs at least 10 rows");

  GprTraining out;
  out.seed = seed;
  out.split = train_validation_split(static_cast<std::size_t>(x.rows()), 0.9, seed);
  auto take = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& xs, Eigen::VectorXd& ys) {
    xs.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    ys.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
      ys(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(idx[i]));
    }
  };
  Eigen::MatrixXd x_tr, x_va;
  Eigen::VectorXd y_tr, y_va;
  take(out.split.train, x_tr, y_tr);
  take(out.split.validation, x_va, y_va);

  GprRegressor reg;
  reg.input_scaling = Standardizer::fit(x_tr);
  reg.target_mean = y_tr.mean();
  const Eigen::MatrixXd z_tr = reg.input_scaling.apply(x_tr);
  const Eigen::VectorXd yc = y_tr.array() - reg.target_mean;
  const double var_y = yc.squaredNorm() / static_cast<double>(yc.size());
  SqExpKernelParams params{var_y > 0.0 ? std::sqrt(var_y) : 1.0, 1.0};
  const double noise_scale = var_y > 0.0 ? var_y : 1.0;

  double best_mse = std::numeric_limits<double>::infinity();
  for (double frac : kNoiseGridFractions) {
    GprRegressor cand = reg;
    cand.model = gpr_fit(z_tr, yc, params, frac * noise_scale);
    double mse = 0.0;
    for (Eigen::Index i = 0; i < x_va.rows(); ++i) {
      const Eigen::RowVectorXd row = x_va.row(i);
      const double e = cand.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))).mean -
                       y_va(i);
      mse += e * e;
    }
    mse /= static_cast<double>(x_va.rows());
    out.candidates.push_back({frac * noise_scale, mse});
    if (mse < best_mse) {
      best_mse = mse;
      out.regressor = std::move(cand);
    }
  }
  return out;
}

}  // namespace colmp

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "colmp/classifier.hpp"
#include "colmp/closed_form.hpp"
#include "colmp/data_model.hpp"
#include "colmp/gpr.hpp"
#include "colmp/linear.hpp"
#include "colmp/nn.hpp"
#include "colmp/standardize.hpp"

namespace colmp {

using json = nlohmann::json;

inline constexpr int kArtifactFormatVersion = 1;

inline constexpr std::array<std::string_view, 8> kModelTypes = {"gm",  "mlr", "prm", "rlr",
                                                                "linear-trained", "gpr", "mlp", "ova"};

/// On-disk model description. `target` is "a", "b" or "mode".
struct ModelArtifact {
  int format_version = kArtifactFormatVersion;
  std::string model_type;
  std::string name;
  SectionShape shape = SectionShape::Rectangular;
  std::string target;
  json payload = json::object();
  json standardization;  // null or {"mean": [...], "scale": [...]}
  json training_meta = json::object();

  friend bool operator==(const ModelArtifact&, const ModelArtifact&) = default;
};

namespace detail {

[[noreturn]] inline void corrupt(const std::string& what) { throw Error(ErrorCode::CorruptPayload, what); }
[[noreturn]] inline void arity(const std::string& what) { throw Error(ErrorCode::ArityMismatch, what); }

inline const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) corrupt(std::string("missing field '") + key + "'");
  return obj.at(key);
}

inline std::vector<double> number_array(const json& j, const char* what) {
  if (!j.is_array()) corrupt(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) corrupt(std::string(what) + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::vector<std::string> string_array(const json& j, const char* what) {
  if (!j.is_array()) corrupt(std::string(what) + " must be an array");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) corrupt(std::string(what) + " must contain only strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
inline json to_json(const Eigen::RowVectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json standardization_json(const Standardizer& s) {
  return {{"mean", to_json(s.mean)}, {"scale", to_json(s.scale)}};
}

inline Standardizer standardization_from(const json& j, std::size_t dim) {
  if (j.is_null()) corrupt("missing standardization constants");
  const auto mean = number_array(field(j, "mean"), "standardization.mean");
  const auto scale = number_array(field(j, "scale"), "standardization.scale");
  if (mean.size() != dim || scale.size() != dim) arity("standardization constants do not match input width");
  Standardizer s;
  s.mean = to_vector(mean).transpose();
  s.scale = to_vector(scale).transpose();
  return s;
}

inline json meta_json(const TrainingMeta& m) {
  json j = json::object();
  if (m.seed) j["seed"] = *m.seed;
  if (!m.split.empty()) j["split"] = m.split;
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Byte-level persistence

/// Canonical form: sorted keys, two-space indent, shortest round-trip numbers.
inline std::string save_model(const ModelArtifact& a) {
  json j;
  j["format_version"] = a.format_version;
  j["model_type"] = a.model_type;
  j["name"] = a.name;
  j["shape"] = std::string(to_string(a.shape));
  j["target"] = a.target;
  j["payload"] = a.payload;
  j["standardization"] = a.standardization;
  j["training_meta"] = a.training_meta;
  return j.dump(2) + "\n";
}

inline void validate_artifact(const ModelArtifact& a);

inline ModelArtifact load_model(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::CorruptPayload, std::string("artifact is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) detail::corrupt("artifact must be a JSON object");
  const auto& ver = detail::field(j, "format_version");
  if (!ver.is_number_integer()) detail::corrupt("format_version must be an integer");
  if (ver.get<long long>() != kArtifactFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "format_version " + ver.dump() + " is not supported (expected " +
                                                   std::to_string(kArtifactFormatVersion) + ")");
  }
  ModelArtifact a;
  try {
    a.model_type = detail::field(j, "model_type").get<std::string>();
    a.name = detail::field(j, "name").get<std::string>();
    const auto shape = parse_shape(detail::field(j, "shape").get<std::string>());
    if (!shape) detail::corrupt("shape must be R or C");
    a.shape = *shape;
    a.target = detail::field(j, "target").get<std::string>();
  } catch (const json::type_error&) {
    detail::corrupt("artifact header fields must be strings");
  }
  a.payload = detail::field(j, "payload");
  a.standardization = j.value("standardization", json());
  a.training_meta = j.value("training_meta", json::object());
  validate_artifact(a);
  return a;
}

// ---------------------------------------------------------------------------
// Typed conversions

inline ModelArtifact closed_form_artifact(EstimatorFamily family, SectionShape shape) {
  ModelArtifact a;
  a.model_type = std::string(to_string(family));
  a.name = a.model_type;
  a.shape = shape;
  a.target = "a,b";
  return a;
}

inline ModelArtifact to_artifact(const LinearModel& m, const std::string& name, SectionShape shape, Target target) {
  ModelArtifact a;
  a.model_type = "linear-trained";
  a.name = name;
  a.shape = shape;
  a.target = std::string(to_string(target));
  a.payload = {{"feature_names", m.feature_names()},
               {"has_intercept", m.has_intercept},
               {"coefficients", detail::to_json(m.coefficients)},
               {"lambda", m.lambda}};
  a.training_meta = detail::meta_json(m.meta);
  return a;
}

inline LinearModel linear_from_artifact(const ModelArtifact& a) {
  if (a.model_type != "linear-trained") detail::corrupt("artifact is not a linear-trained model");
  const auto& p = a.payload;
  LinearModel m;
  const auto names = detail::string_array(detail::field(p, "feature_names"), "feature_names");
  const auto& hi = detail::field(p, "has_intercept");
  if (!hi.is_boolean()) detail::corrupt("has_intercept must be a boolean");
  m.has_intercept = hi.get<bool>();
  const auto coef = detail::number_array(detail::field(p, "coefficients"), "coefficients");
  if (coef.size() != names.size() + (m.has_intercept ? 1 : 0)) {
    detail::arity("coefficient count does not match feature names");
  }
  const auto& lam = detail::field(p, "lambda");
  if (!lam.is_number()) detail::corrupt("lambda must be a number");
  m.lambda = lam.get<double>();
  if (m.has_intercept) m.coefficient_names.emplace_back(kInterceptName);
  m.coefficient_names.insert(m.coefficient_names.end(), names.begin(), names.end());
  m.coefficients = detail::to_vector(coef);
  if (a.training_meta.contains("seed")) m.meta.seed = a.training_meta.at("seed").get<std::uint64_t>();
  if (a.training_meta.contains("split")) m.meta.split = a.training_meta.at("split").get<std::string>();
  return m;
}

inline ModelArtifact to_artifact(const GprRegressor& r, const std::string& name, SectionShape shape, Target target,
                                 std::uint64_t seed) {
  ModelArtifact a;
  a.model_type = "gpr";
  a.name = name;
  a.shape = shape;
  a.target = std::string(to_string(target));
  json inputs = json::array();
  for (Eigen::Index i = 0; i < r.model.inputs.rows(); ++i) {
    inputs.push_back(detail::to_json(Eigen::RowVectorXd(r.model.inputs.row(i))));
  }
  a.payload = {{"inputs", std::move(inputs)},
               {"dual_weights", detail::to_json(r.model.dual_weights)},
               {"sigma_f", r.model.kernel.sigma_f},
               {"length_scale", r.model.kernel.length_scale},
               {"noise_var", r.model.noise_var},
               {"jitter", r.model.jitter},
               {"target_mean", r.target_mean}};
  a.standardization = detail::standardization_json(r.input_scaling);
  a.training_meta = {{"seed", seed}, {"split", "90/10"}};
  return a;
}

inline GprRegressor gpr_from_artifact(const ModelArtifact& a) {
  if (a.model_type != "gpr") detail::corrupt("artifact is not a gpr model");
  const auto& p = a.payload;
  const auto& rows = detail::field(p, "inputs");
  if (!rows.is_array() || rows.empty()) detail::corrupt("inputs must be a nonempty array");
  const auto weights = detail::number_array(detail::field(p, "dual_weights"), "dual_weights");
  if (weights.size() != rows.size()) detail::arity("dual_weights length does not match training inputs");
  const auto first = detail::number_array(rows.at(0), "inputs");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = detail::number_array(rows.at(i), "inputs");
    if (r.size() != first.size()) detail::arity("training inputs have inconsistent widths");
    for (std::size_t j = 0; j < r.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  auto num = [&](const char* k) {
    const auto& v = detail::field(p, k);
    if (!v.is_number()) detail::corrupt(std::string(k) + " must be a number");
    return v.get<double>();
  };
  GprRegressor r;
  r.input_scaling = detail::standardization_from(a.standardization, first.size());
  r.target_mean = num("target_mean");
  r.model.inputs = x;
  r.model.kernel = {num("sigma_f"), num("length_scale")};
  r.model.kernel.validate();
  r.model.noise_var = num("noise_var");
  r.model.jitter = num("jitter");
  Eigen::MatrixXd k = gram_matrix(x, r.model.kernel);
  k.diagonal().array() += r.model.noise_var + r.model.jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::FactorizationFailed, "stored GPR system is not factorizable");
  r.model.chol = llt.matrixL();
  r.model.dual_weights = detail::to_vector(weights);
  return r;
}

inline ModelArtifact to_artifact(const MlpRegressor& r, const std::string& name, SectionShape shape, Target target) {
  ModelArtifact a;
  a.model_type = "mlp";
  a.name = name;
  a.shape = shape;
  a.target = std::string(to_string(target));
  const auto& c = r.net.config;
  json layers = json::array();
  for (const auto& l : r.net.layers) {
    // Row-major: weights[o * in + i] connects input i to output o.
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index o = 0; o < l.weights.rows(); ++o) {
      for (Eigen::Index i = 0; i < l.weights.cols(); ++i) w.push_back(l.weights(o, i));
    }
    layers.push_back({{"weights", std::move(w)}, {"bias", detail::to_json(l.bias)}});
  }
  a.payload = {{"augmented", r.augmented},
               {"config",
                {{"input_dim", c.input_dim},
                 {"hidden_layers", c.hidden_layers},
                 {"hidden_width", c.hidden_width},
                 {"epochs", c.epochs},
                 {"learning_rate", c.learning_rate},
                 {"schedule", c.schedule.kind == LrSchedule::Kind::Step ? "step" : "constant"},
                 {"gamma", c.schedule.gamma},
                 {"period", c.schedule.period},
                 {"seed", c.seed}}},
               {"layers", std::move(layers)}};
  a.standardization = detail::standardization_json(r.input_scaling);
  a.training_meta = {{"seed", c.seed}, {"epochs", c.epochs}, {"lr", c.learning_rate}, {"split", "70/30"}};
  return a;
}

inline MlpRegressor mlp_from_artifact(const ModelArtifact& a) {
  if (a.model_type != "mlp") detail::corrupt("artifact is not an mlp model");
  const auto& p = a.payload;
  const auto& cj = detail::field(p, "config");
  MlpRegressor r;
  MlpConfig c;
  try {
    c.input_dim = detail::field(cj, "input_dim").get<std::size_t>();
    c.hidden_layers = detail::field(cj, "hidden_layers").get<std::size_t>();
    c.hidden_width = detail::field(cj, "hidden_width").get<std::size_t>();
    c.epochs = detail::field(cj, "epochs").get<std::size_t>();
    c.learning_rate = detail::field(cj, "learning_rate").get<double>();
    c.schedule.kind = detail::field(cj, "schedule").get<std::string>() == "step" ? LrSchedule::Kind::Step
                                                                                  : LrSchedule::Kind::Constant;
    c.schedule.gamma = detail::field(cj, "gamma").get<double>();
    c.schedule.period = detail::field(cj, "period").get<std::size_t>();
    c.seed = detail::field(cj, "seed").get<std::uint64_t>();
    r.augmented = detail::field(p, "augmented").get<bool>();
  } catch (const json::type_error& e) {
    detail::corrupt(std::string("malformed mlp config: ") + e.what());
  }
  if (c.input_dim != (r.augmented ? kNumFeatures + 2 : kNumFeatures)) {
    detail::arity("input_dim does not match the feature layout");
  }
  const auto& layers = detail::field(p, "layers");
  if (!layers.is_array() || layers.size() != c.hidden_layers + 1) detail::arity("layer count does not match config");
  r.net.config = c;
  std::size_t in = c.input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t out = l < c.hidden_layers ? c.hidden_width : 1;
    const auto w = detail::number_array(detail::field(layers[l], "weights"), "weights");
    const auto b = detail::number_array(detail::field(layers[l], "bias"), "bias");
    if (w.size() != out * in || b.size() != out) {
      detail::arity("layer " + std::to_string(l) + " expects " + std::to_string(out * in) + " weights and " +
                    std::to_string(out) + " biases, found " + std::to_string(w.size()) + " and " +
                    std::to_string(b.size()));
    }
    DenseLayer dl;
    dl.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (std::size_t o = 0; o < out; ++o) {
      for (std::size_t i = 0; i < in; ++i) dl.weights(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) = w[o * in + i];
    }
    dl.bias = detail::to_vector(b);
    r.net.layers.push_back(std::move(dl));
    in = out;
  }
  r.input_scaling = detail::standardization_from(a.standardization, c.input_dim);
  return r;
}

inline ModelArtifact to_artifact(const OvaModel& m, const std::string& name, SectionShape shape) {
  ModelArtifact a;
  a.model_type = "ova";
  a.name = name;
  a.shape = shape;
  a.target = "mode";
  json coef = json::object();
  for (auto mode : kFailureModes) coef[std::string(to_string(mode))] = detail::to_json(m.coefficients[index_of(mode)]);
  a.payload = {{"feature_names", m.feature_names}, {"has_intercept", m.has_intercept}, {"coefficients", coef}};
  a.training_meta = {{"seed", m.seed}, {"iters", m.iterations}, {"lr", m.learning_rate}};
  return a;
}

inline OvaModel ova_from_artifact(const ModelArtifact& a) {
  if (a.model_type != "ova") detail::corrupt("artifact is not an ova model");
  const auto& p = a.payload;
  OvaModel m;
  m.feature_names = detail::string_array(detail::field(p, "feature_names"), "feature_names");
  const auto& hi = detail::field(p, "has_intercept");
  if (!hi.is_boolean()) detail::corrupt("has_intercept must be a boolean");
  m.has_intercept = hi.get<bool>();
  const auto& coef = detail::field(p, "coefficients");
  for (auto mode : kFailureModes) {
    const auto v = detail::number_array(detail::field(coef, std::string(to_string(mode)).c_str()), "coefficients");
    if (v.size() != m.feature_names.size() + (m.has_intercept ? 1 : 0)) {
      detail::arity("coefficient count for " + std::string(to_string(mode)) + " does not match feature names");
    }
    m.coefficients[index_of(mode)] = detail::to_vector(v);
  }
  const auto& meta = a.training_meta;
  if (meta.contains("seed")) m.seed = meta.at("seed").get<std::uint64_t>();
  if (meta.contains("iters")) m.iterations = meta.at("iters").get<std::size_t>();
  if (meta.contains("lr")) m.learning_rate = meta.at("lr").get<double>();
  return m;
}

/// Structural checks applied on load; throws CorruptPayload or ArityMismatch.
inline void validate_artifact(const ModelArtifact& a) {
  if (std::find(kModelTypes.begin(), kModelTypes.end(), a.model_type) == kModelTypes.end()) {
    detail::corrupt("unknown model_type '" + a.model_type + "'");
  }
  if (a.name.empty()) detail::corrupt("artifact name is empty");
  if (parse_estimator_family(a.model_type)) return;
  if (a.model_type == "ova") {
    if (a.target != "mode") detail::corrupt("ova artifacts must have target 'mode'");
    ova_from_artifact(a);
    return;
  }
  if (!parse_target(a.target)) detail::corrupt("regression artifacts must have target 'a' or 'b'");
  if (a.model_type == "linear-trained") linear_from_artifact(a);
  else if (a.model_type == "gpr") gpr_from_artifact(a);
  else mlp_from_artifact(a);
}

}  // namespace colmp

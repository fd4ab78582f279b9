#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "colmp/artifact.hpp"
#include "colmp/closed_form.hpp"
#include "colmp/data_model.hpp"
#include "colmp/evaluation.hpp"
#include "colmp/pipeline.hpp"

namespace colmp {

/// Name of the built-in fixed-coefficient failure-mode classifier.
inline constexpr std::string_view kFixedClassifier = "fixed";

/// A trained regressor for one (shape, target), ready to evaluate.
struct LoadedRegressor {
  ModelArtifact artifact;
  std::function<double(const ColumnFeatures&)> predict;
};

inline LoadedRegressor load_regressor(const ModelArtifact& a) {
  LoadedRegressor r{a, {}};
  if (a.model_type == "linear-trained") {
    r.predict = [m = linear_from_artifact(a)](const ColumnFeatures& f) { return predict_linear(m, f); };
  } else if (a.model_type == "gpr") {
    r.predict = [g = gpr_from_artifact(a)](const ColumnFeatures& f) { return predict_gpr(g, f); };
  } else if (a.model_type == "mlp") {
    r.predict = [m = mlp_from_artifact(a)](const ColumnFeatures& f) { return m.predict(f); };
  } else {
    throw Error(ErrorCode::InvalidArgument, "model_type '" + a.model_type + "' is not a trained regressor");
  }
  return r;
}

/// Immutable set of models available to the service. Closed-form families
/// and the fixed classifier are always present; trained artifacts are keyed
/// by (name, shape, target).
class Registry {
 public:
  Registry() = default;

  void add(const ModelArtifact& a) {
    if (parse_estimator_family(a.model_type)) return;  // built in
    if (a.name == kFixedClassifier || parse_estimator_family(a.name)) {
      throw Error(ErrorCode::InvalidArgument, "artifact name '" + a.name + "' is reserved");
    }
    if (a.model_type == "ova") {
      if (!classifiers_.emplace(std::pair{a.name, a.shape}, ova_from_artifact(a)).second) duplicate(a);
      artifacts_.push_back(a);
      return;
    }
    const auto target = *parse_target(a.target);
    if (!regressors_.emplace(std::tuple{a.name, a.shape, target}, load_regressor(a)).second) duplicate(a);
    artifacts_.push_back(a);
  }

  void set_stats(const DatasetStats& s) { stats_[s.shape] = s; }

  /// Every *.json file in `dir`, in file-name order.
  static Registry from_directory(const std::filesystem::path& dir) {
    Registry reg;
    if (!std::filesystem::is_directory(dir)) {
      throw Error(ErrorCode::InvalidArgument, "model directory '" + dir.string() + "' does not exist");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      try {
        reg.add(load_model(ss.str()));
      } catch (const Error& e) {
        throw Error(e.code(), p.filename().string() + ": " + e.what());
      }
    }
    return reg;
  }

  const LoadedRegressor* regressor(const std::string& name, SectionShape shape, Target target) const {
    const auto it = regressors_.find({name, shape, target});
    return it == regressors_.end() ? nullptr : &it->second;
  }

  const OvaModel* classifier(const std::string& name, SectionShape shape) const {
    const auto it = classifiers_.find({name, shape});
    return it == classifiers_.end() ? nullptr : &it->second;
  }

  const DatasetStats* stats(SectionShape shape) const {
    const auto it = stats_.find(shape);
    return it == stats_.end() ? nullptr : &it->second;
  }

  const std::vector<ModelArtifact>& artifacts() const { return artifacts_; }

  /// Trained regression names with both targets available for `shape`.
  std::vector<std::string> regression_names(SectionShape shape) const {
    std::vector<std::string> out;
    for (const auto& [key, _] : regressors_) {
      const auto& [name, s, t] = key;
      if (s == shape && t == Target::A && regressor(name, shape, Target::B)) out.push_back(name);
    }
    return out;
  }

 private:
  [[noreturn]] static void duplicate(const ModelArtifact& a) {
    throw Error(ErrorCode::InvalidArgument, "duplicate artifact for model '" + a.name + "', shape " +
                                                std::string(to_string(a.shape)) + ", target " + a.target);
  }

  std::map<std::tuple<std::string, SectionShape, Target>, LoadedRegressor> regressors_;
  std::map<std::pair<std::string, SectionShape>, OvaModel> classifiers_;
  std::map<SectionShape, DatasetStats> stats_;
  std::vector<ModelArtifact> artifacts_;
};

// ---------------------------------------------------------------------------
// Request handling

struct PredictRequest {
  json id;  // echoed verbatim
  SectionShape shape = SectionShape::Rectangular;
  ColumnFeatures features;
  std::vector<std::string> models;  // empty: every model available for the shape
  bool classify = true;
  std::string classifier = std::string(kFixedClassifier);
};

namespace detail {

[[noreturn]] inline void bad_request(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

inline double finite_or_throw(double v, const std::string& what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, what + " evaluated to a non-finite value");
  return v;
}

}  // namespace detail

inline PredictRequest parse_predict_request(const json& j) {
  if (!j.is_object()) detail::bad_request("request body must be a JSON object");
  PredictRequest r;
  r.id = j.value("id", json());
  if (!j.contains("shape") || !j.at("shape").is_string()) detail::bad_request("'shape' must be \"R\" or \"C\"");
  const auto shape = parse_shape(j.at("shape").get<std::string>());
  if (!shape) detail::bad_request("'shape' must be \"R\" or \"C\"");
  r.shape = *shape;

  if (!j.contains("features") || !j.at("features").is_object()) {
    throw Error(ErrorCode::InvalidFeatures, "'features' must be an object with the six input ratios");
  }
  const auto& fj = j.at("features");
  std::array<double, kNumFeatures> v{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const std::string key(kFeatureNames[i]);
    if (!fj.contains(key) || !fj.at(key).is_number()) {
      throw Error(ErrorCode::InvalidFeatures, "feature '" + key + "' is missing or not a number");
    }
    v[i] = fj.at(key).get<double>();
  }
  r.features = ColumnFeatures::from_values(v);
  validate_features(r.features);

  if (j.contains("models")) {
    const auto& m = j.at("models");
    if (!m.is_array()) detail::bad_request("'models' must be an array of names");
    for (const auto& e : m) {
      if (!e.is_string()) detail::bad_request("'models' must be an array of names");
      r.models.push_back(e.get<std::string>());
    }
  }
  if (j.contains("classify")) {
    if (!j.at("classify").is_boolean()) detail::bad_request("'classify' must be a boolean");
    r.classify = j.at("classify").get<bool>();
  }
  if (j.contains("classifier")) {
    if (!j.at("classifier").is_string()) detail::bad_request("'classifier' must be a string");
    r.classifier = j.at("classifier").get<std::string>();
  }
  return r;
}

inline json estimate_json(const Estimate& e) {
  return {{"a", e.params.a}, {"b", e.params.b}, {"raw_a", e.raw_a}, {"raw_b", e.raw_b}};
}

inline json class_scores_json(const ClassScores& s, const std::string& model) {
  json scores = json::object(), probs = json::object();
  for (std::size_t c = 0; c < 3; ++c) {
    const std::string mode(to_string(kFailureModes[c]));
    scores[mode] = detail::finite_or_throw(s.scores[c], "score");
    probs[mode] = s.probabilities[c];
  }
  return {{"model", model}, {"scores", scores}, {"probabilities", probs}, {"mode", std::string(to_string(s.predicted))}};
}

/// Estimate from a closed-form family or a trained (a, b) pair; trained
/// outputs are clamped the same way as the fixed equations.
inline Estimate registry_estimate(const Registry& reg, const std::string& model, SectionShape shape,
                                  const ColumnFeatures& f) {
  if (const auto fam = parse_estimator_family(model)) return estimate_raw(*fam, f, shape);
  const auto* ra = reg.regressor(model, shape, Target::A);
  const auto* rb = reg.regressor(model, shape, Target::B);
  if (!ra || !rb) {
    throw Error(ErrorCode::UnknownModel, "model '" + model + "' is not available for shape " +
                                             std::string(to_string(shape)));
  }
  const double raw_a = detail::finite_or_throw(ra->predict(f), model + " a");
  const double raw_b = detail::finite_or_throw(rb->predict(f), model + " b");
  return {clamp_params(raw_a, raw_b), raw_a, raw_b};
}

inline ClassScores registry_classify(const Registry& reg, const std::string& classifier, SectionShape shape,
                                     const ColumnFeatures& f) {
  if (classifier == kFixedClassifier) return classify_fixed(f, shape);
  const auto* m = reg.classifier(classifier, shape);
  if (!m) {
    throw Error(ErrorCode::UnknownModel, "classifier '" + classifier + "' is not available for shape " +
                                             std::string(to_string(shape)));
  }
  return predict_ova(*m, f);
}

inline json handle_classify(const json& body, const Registry& reg) {
  const auto req = parse_predict_request(body);
  return {{"id", req.id},
          {"shape", std::string(to_string(req.shape))},
          {"classification", class_scores_json(registry_classify(reg, req.classifier, req.shape, req.features),
                                               req.classifier)}};
}

inline json handle_predict(const json& body, const Registry& reg) {
  const auto req = parse_predict_request(body);
  std::vector<std::string> names = req.models;
  if (names.empty()) {
    for (auto fam : kEstimatorFamilies) names.emplace_back(to_string(fam));
    for (auto& n : reg.regression_names(req.shape)) names.push_back(std::move(n));
  }
  json models = json::object();
  for (const auto& n : names) models[n] = estimate_json(registry_estimate(reg, n, req.shape, req.features));

  json out = {{"id", req.id}, {"shape", std::string(to_string(req.shape))}, {"models", models}};
  if (req.classify) {
    out["classification"] =
        class_scores_json(registry_classify(reg, req.classifier, req.shape, req.features), req.classifier);
  }
  if (const auto* st = reg.stats(req.shape)) out["x_test"] = separation_param(req.features, *st);
  return out;
}

inline json handle_models(const Registry& reg) {
  json closed = json::array();
  for (auto fam : kEstimatorFamilies) closed.push_back(std::string(to_string(fam)));
  json trained = json::array();
  for (const auto& a : reg.artifacts()) {
    trained.push_back({{"name", a.name},
                       {"model_type", a.model_type},
                       {"shape", std::string(to_string(a.shape))},
                       {"target", a.target}});
  }
  json stats = json::array();
  for (auto s : {SectionShape::Rectangular, SectionShape::Circular}) {
    if (reg.stats(s)) stats.push_back(std::string(to_string(s)));
  }
  return {{"closed_form", closed},
          {"default_classifier", std::string(kFixedClassifier)},
          {"trained", trained},
          {"stats_loaded", stats}};
}

inline json handle_health(const Registry& reg) {
  return {{"status", "ok"},
          {"format_version", kArtifactFormatVersion},
          {"trained_models", reg.artifacts().size()}};
}

// ---------------------------------------------------------------------------
// Transport-neutral routing

struct ServiceResponse {
  int status = 200;
  std::string body;
};

inline int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownModel:
    case ErrorCode::InvalidFeatures:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ZeroRange:
      return 400;
    default:
      return 500;
  }
}

inline std::string error_body(std::string_view code, std::string_view message) {
  return json{{"error", code}, {"message", message}}.dump() + "\n";
}

/// Routes one request. Pure function of (method, path, body, registry).
inline ServiceResponse dispatch(std::string_view method, std::string_view path, std::string_view body,
                                const Registry& reg) {
  try {
    if (method == "GET" && path == "/api/v1/health") return {200, handle_health(reg).dump() + "\n"};
    if (method == "GET" && path == "/api/v1/models") return {200, handle_models(reg).dump() + "\n"};
    if (method == "POST" && (path == "/api/v1/predict" || path == "/api/v1/classify")) {
      json req;
      try {
        req = json::parse(body);
      } catch (const json::parse_error& e) {
        return {400, error_body("InvalidArgument", std::string("request body is not valid JSON: ") + e.what())};
      }
      const json out = path == "/api/v1/predict" ? handle_predict(req, reg) : handle_classify(req, reg);
      return {200, out.dump() + "\n"};
    }
    return {404, error_body("NotFound", std::string(method) + " " + std::string(path) + " is not a known endpoint")};
  } catch (const Error& e) {
    return {http_status(e.code()), error_body(to_string(e.code()), e.what())};
  } catch (const json::exception& e) {
    return {400, error_body("InvalidArgument", e.what())};
  }
}

}  // namespace colmp

// colmp: command-line front end for estimation, training, evaluation and serving.

#include "colmp/colmp.hpp"
#include "colmp/http_service.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace colmp;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << text;
}

std::string fixed5(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5f", v);
  return buf;
}

SectionShape shape_arg(const std::string& s) {
  const auto shape = parse_shape(s);
  if (!shape) throw Error(ErrorCode::InvalidArgument, "shape must be R or C, got '" + s + "'");
  return *shape;
}

Target target_arg(const std::string& s) {
  const auto t = parse_target(s);
  if (!t) throw Error(ErrorCode::InvalidArgument, "target must be a or b, got '" + s + "'");
  return *t;
}

std::string default_models_dir() {
  const char* env = std::getenv("COLMP_MODELS_DIR");
  return env ? env : "";
}

Registry load_registry(const std::string& dir) { return dir.empty() ? Registry{} : Registry::from_directory(dir); }

struct FeatureArgs {
  std::string shape = "R";
  double ad = 0, axial = 0, rhol = 0, rhot = 0, sd = 0, vyvo = 0;

  void add_to(CLI::App* app) {
    app->add_option("--shape", shape, "Section shape, R or C")->required();
    app->add_option("--ad", ad, "Shear span to depth ratio a/d")->required();
    app->add_option("--axial", axial, "Axial load ratio")->required();
    app->add_option("--rhol", rhol, "Longitudinal reinforcement ratio")->required();
    app->add_option("--rhot", rhot, "Transverse reinforcement ratio")->required();
    app->add_option("--sd", sd, "Hoop spacing to depth ratio s/d")->required();
    app->add_option("--vyvo", vyvo, "Shear capacity ratio Vy/Vo")->required();
  }

  ColumnFeatures features() const {
    ColumnFeatures f{ad, axial, rhol, rhot, sd, vyvo};
    validate_features(f);
    return f;
  }
};

// A model named on the command line: a closed-form family or an artifact file.
struct ModelSpec {
  std::string label;
  Predictor predict;
};

ModelSpec model_spec(const std::string& spec, SectionShape shape, Target target, bool clamped) {
  if (const auto fam = parse_estimator_family(spec)) {
    return {spec, closed_form_predictor(*fam, shape, target, !clamped)};
  }
  const auto a = load_model(read_file(spec));
  if (a.shape != shape) {
    throw Error(ErrorCode::InvalidArgument, "artifact '" + spec + "' is for shape " + std::string(to_string(a.shape)));
  }
  if (a.target != to_string(target)) {
    throw Error(ErrorCode::InvalidArgument, "artifact '" + spec + "' predicts target " + a.target);
  }
  auto reg = load_regressor(a);
  return {a.name, reg.predict};
}

ClassScores classify_with(const std::string& classifier, SectionShape shape, const ColumnFeatures& f) {
  if (classifier == kFixedClassifier) return classify_fixed(f, shape);
  const auto a = load_model(read_file(classifier));
  if (a.model_type != "ova") throw Error(ErrorCode::InvalidArgument, "'" + classifier + "' is not a classifier");
  if (a.shape != shape) {
    throw Error(ErrorCode::InvalidArgument, "classifier is for shape " + std::string(to_string(a.shape)));
  }
  return predict_ova(ova_from_artifact(a), f);
}

std::string metrics_row(const std::string& model, SectionShape shape, const std::string& target, std::size_t n,
                        const FitMetrics& m) {
  return model + "," + std::string(to_string(shape)) + "," + target + "," + std::to_string(n) + "," +
         detail::num(m.r2) + "," + detail::num(m.mse) + "," + detail::num(m.std_err) +
         "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear modeling parameters and failure modes of RC columns"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // predict
  auto* predict = app.add_subcommand("predict", "Estimate modeling parameters a and b");
  FeatureArgs pf;
  pf.add_to(predict);
  std::vector<std::string> predict_models;
  std::string predict_dir = default_models_dir();
  bool predict_json = false;
  predict->add_option("--model", predict_models, "gm, mlr, prm, rlr or a trained model name (repeatable)");
  predict->add_option("--models-dir", predict_dir, "Directory of trained artifacts (default $COLMP_MODELS_DIR)");
  predict->add_flag("--json", predict_json, "Print the service response JSON instead of text");

  // classify
  auto* classify = app.add_subcommand("classify", "Predict the failure mode");
  FeatureArgs cf;
  cf.add_to(classify);
  std::string classifier = std::string(kFixedClassifier);
  classify->add_option("--classifier", classifier, "'fixed' or a path to an ova artifact");

  // train
  auto* train = app.add_subcommand("train", "Train a model on a CSV dataset and write its artifact");
  std::string train_data, train_shape, train_target = "a", train_model, train_name, train_out = "-";
  std::uint64_t train_seed = 0;
  std::size_t train_k = 3, epochs = 10000, hidden_layers = 4, width = 200, iterations = 5000;
  double lr = 0.0;
  bool all_features = false, constant_lr = false;
  train->add_option("--data", train_data, "Dataset CSV")->required();
  train->add_option("--shape", train_shape, "R or C")->required();
  train->add_option("--model", train_model, "mlr, prm, rlr, gpr, mlp or ova")
      ->required()
      ->check(CLI::IsMember({"mlr", "prm", "rlr", "gpr", "mlp", "ova"}));
  train->add_option("--target", train_target, "a or b (ignored for ova)");
  train->add_option("--seed", train_seed, "Seed for splits and initialization")->required();
  train->add_option("--name", train_name, "Artifact name (default: the model kind, with -trained for linear kinds)");
  train->add_option("--out", train_out, "Artifact path or - for stdout");
  train->add_option("--k", train_k, "Features kept by mlr/prm");
  train->add_option("--epochs", epochs, "mlp epochs");
  train->add_option("--hidden-layers", hidden_layers, "mlp hidden layers");
  train->add_option("--width", width, "mlp neurons per hidden layer");
  train->add_flag("--constant-lr", constant_lr, "mlp: disable step decay");
  train->add_option("--lr", lr, "Learning rate (default 0.01 for mlp, 0.5 for ova)");
  train->add_option("--iterations", iterations, "ova gradient-descent iterations");
  train->add_flag("--all-features", all_features, "ova: use all six inputs instead of three");

  // eval
  auto* eval = app.add_subcommand("eval", "Score models against a dataset (CSV)");
  std::string eval_data, eval_shape, eval_target = "a", eval_out = "-", eval_report = "metrics";
  std::string eval_classifier = std::string(kFixedClassifier), eval_error_model = "gm";
  std::vector<std::string> eval_models;
  bool eval_clamped = false;
  eval->add_option("--data", eval_data, "Dataset CSV")->required();
  eval->add_option("--shape", eval_shape, "R or C")->required();
  eval->add_option("--target", eval_target, "a or b");
  eval->add_option("--model", eval_models, "Closed-form family or artifact path (repeatable)");
  eval->add_option("--report", eval_report, "metrics, box, confusion or misclass")
      ->check(CLI::IsMember({"metrics", "box", "confusion", "misclass"}));
  eval->add_option("--classifier", eval_classifier, "'fixed' or an ova artifact (confusion, misclass)");
  eval->add_option("--error-model", eval_error_model, "Regression model whose errors fill the misclass table");
  eval->add_flag("--clamped", eval_clamped, "Score closed-form families after clamping");
  eval->add_option("--out", eval_out, "Output path or - for stdout");

  // bins
  auto* bins = app.add_subcommand("bins", "Per-subset significance and fit table");
  std::string bins_data, bins_shape = "R", bins_target = "a", bins_out = "-";
  std::size_t bins_k = 3;
  bins->add_option("--data", bins_data, "Dataset CSV")->required();
  bins->add_option("--shape", bins_shape, "R or C");
  bins->add_option("--target", bins_target, "a or b");
  bins->add_option("--k", bins_k, "Features kept per bin");
  bins->add_option("--out", bins_out, "Output path or - for stdout");

  // cdf
  auto* cdf = app.add_subcommand("cdf", "Empirical CDF of experiment-minus-estimate errors");
  std::string cdf_data, cdf_shape, cdf_target = "a", cdf_model = "gm", cdf_out = "-";
  bool cdf_clamped = false;
  cdf->add_option("--data", cdf_data, "Dataset CSV")->required();
  cdf->add_option("--shape", cdf_shape, "R or C")->required();
  cdf->add_option("--target", cdf_target, "a or b");
  cdf->add_option("--model", cdf_model, "Closed-form family or artifact path");
  cdf->add_flag("--clamped", cdf_clamped, "Use clamped closed-form values");
  cdf->add_option("--out", cdf_out, "Output path or - for stdout");

  // fixtures
  auto* fixtures = app.add_subcommand("fixtures", "Generate a synthetic dataset CSV");
  std::uint64_t fixture_seed = 0;
  std::size_t n_rect = 100, n_circ = 50;
  std::string fixture_out = "-";
  fixtures->add_option("--seed", fixture_seed, "Sampling seed")->required();
  fixtures->add_option("--n-rect", n_rect, "Rectangular rows");
  fixtures->add_option("--n-circ", n_circ, "Circular rows");
  fixtures->add_option("--out", fixture_out, "Output path or - for stdout");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP JSON prediction service");
  int port = kDefaultPort;
  std::string host = "0.0.0.0", serve_dir = default_models_dir(), serve_data;
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--models-dir", serve_dir, "Directory of trained artifacts (default $COLMP_MODELS_DIR)");
  serve->add_option("--dataset", serve_data, "Dataset CSV whose statistics enable x_test in responses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return kExitUsage;
  }

  try {
    if (*predict) {
      const auto shape = shape_arg(pf.shape);
      json req = {{"shape", pf.shape}, {"classify", false}, {"features", json::object()}};
      const auto v = pf.features().values();
      for (std::size_t i = 0; i < kNumFeatures; ++i) req["features"][std::string(kFeatureNames[i])] = v[i];
      if (!predict_models.empty()) req["models"] = predict_models;
      const auto reg = load_registry(predict_dir);
      if (predict_json) {
        req["classify"] = true;
        std::cout << handle_predict(req, reg).dump(2) << "\n";
        return kExitOk;
      }
      std::vector<std::string> names = predict_models;
      if (names.empty()) {
        for (auto fam : kEstimatorFamilies) names.emplace_back(to_string(fam));
      }
      for (const auto& n : names) {
        const auto e = registry_estimate(reg, n, shape, pf.features());
        std::cout << n << " a=" << fixed5(e.params.a) << " b=" << fixed5(e.params.b) << "\n";
      }
    } else if (*classify) {
      const auto s = classify_with(classifier, shape_arg(cf.shape), cf.features());
      std::cout << "mode,score,probability\n";
      for (std::size_t c = 0; c < 3; ++c) {
        std::cout << to_string(kFailureModes[c]) << "," << detail::format_double(s.scores[c]) << ","
                  << detail::format_double(s.probabilities[c]) << "\n";
      }
      std::cout << "predicted," << to_string(s.predicted) << ",\n";
    } else if (*train) {
      const auto shape = shape_arg(train_shape);
      const auto ds = parse_dataset(read_file(train_data));
      std::string name = train_name;
      if (name.empty()) name = parse_estimator_family(train_model) ? train_model + "-trained" : train_model;
      std::cerr << "seed: " << train_seed << "\n";
      ModelArtifact artifact;
      if (train_model == "ova") {
        const double rate = lr > 0.0 ? lr : 0.5;
        const auto t = train_ova(ds, shape, all_features, rate, iterations, train_seed);
        artifact = to_artifact(t.model, name, shape);
        for (std::size_t c = 0; c < 3; ++c) {
          std::cerr << to_string(kFailureModes[c]) << " final cost: " << t.cost_history[c].back() << "\n";
        }
      } else {
        const auto target = target_arg(train_target);
        if (train_model == "gpr") {
          const auto t = train_gpr(ds, shape, target, train_seed);
          artifact = to_artifact(t.regressor, name, shape, target, train_seed);
          for (const auto& c : t.candidates) {
            std::cerr << "noise " << c.noise_var << " validation mse " << c.validation_mse << "\n";
          }
        } else if (train_model == "mlp") {
          MlpConfig cfg;
          cfg.hidden_layers = hidden_layers;
          cfg.hidden_width = width;
          cfg.epochs = epochs;
          cfg.learning_rate = lr > 0.0 ? lr : cfg.learning_rate;
          if (constant_lr) cfg.schedule = LrSchedule::constant();
          cfg.seed = train_seed;
          const auto t = train_mlp(ds, shape, target, cfg);
          artifact = to_artifact(t.regressor, name, shape, target);
          std::cerr << "train mse " << t.trace.final_train_mse;
          if (t.trace.final_validation_mse) std::cerr << ", validation mse " << *t.trace.final_validation_mse;
          std::cerr << "\n";
        } else {
          const auto recipe = train_model == "mlr"   ? LinearRecipe::MLR
                              : train_model == "prm" ? LinearRecipe::PRM
                                                     : LinearRecipe::RLR;
          const auto t = train_linear(ds, shape, target, recipe, train_seed, train_k);
          artifact = to_artifact(t.model, name, shape, target);
          if (t.tuning) std::cerr << "lambda*: " << t.tuning->lambda_star << "\n";
          if (t.significance) {
            for (const auto& c : t.significance->coefficients) std::cerr << c.name << " p=" << c.p_value << "\n";
          }
        }
      }
      write_output(train_out, save_model(artifact));
    } else if (*eval) {
      const auto shape = shape_arg(eval_shape);
      const auto ds = parse_dataset(read_file(eval_data)).filter(shape);
      if (eval_report == "confusion" || eval_report == "misclass") {
        std::vector<ColumnRecord> rows;
        for (const auto& r : ds) {
          if (r.mode && (eval_report == "confusion" || r.target(target_arg(eval_target)))) rows.push_back(r);
        }
        std::vector<FailureMode> predicted, actual;
        for (const auto& r : rows) {
          predicted.push_back(classify_with(eval_classifier, shape, r.features).predicted);
          actual.push_back(*r.mode);
        }
        if (eval_report == "confusion") {
          write_output(eval_out, confusion_to_csv(confusion_matrix(predicted, actual)));
        } else {
          const auto target = target_arg(eval_target);
          const auto spec = model_spec(eval_error_model, shape, target, eval_clamped);
          std::vector<double> errors;
          for (const auto& r : rows) errors.push_back(*r.target(target) - spec.predict(r.features));
          write_output(eval_out, misclass_to_csv(misclass_error_table(rows, predicted, errors)));
        }
      } else {
        const auto target = target_arg(eval_target);
        if (eval_models.empty()) {
          for (auto fam : kEstimatorFamilies) eval_models.emplace_back(to_string(fam));
        }
        std::string text = "model,shape,target,n,r2,mse,std_err\n";
        std::vector<std::pair<std::string, BoxStats>> boxes;
        for (const auto& m : eval_models) {
          const auto spec = model_spec(m, shape, target, eval_clamped);
          const auto errs = prediction_errors(ds, shape, target, spec.predict);
          std::vector<double> e;
          for (const auto& s : errs) e.push_back(s.error);
          if (eval_report == "box") {
            boxes.emplace_back(spec.label, box_stats(e));
          } else {
            text += metrics_row(spec.label, shape, std::string(eval_target), errs.size(),
                                evaluate_predictor(ds, shape, target, spec.predict));
          }
        }
        write_output(eval_out, eval_report == "box" ? box_to_csv(boxes) : text);
      }
    } else if (*bins) {
      const auto shape = shape_arg(bins_shape);
      const auto ds = parse_dataset(read_file(bins_data)).filter(shape);
      write_output(bins_out, bins_to_csv(bin_analysis(ds, default_bins(), target_arg(bins_target), bins_k)));
    } else if (*cdf) {
      const auto shape = shape_arg(cdf_shape);
      const auto target = target_arg(cdf_target);
      const auto ds = parse_dataset(read_file(cdf_data));
      const auto spec = model_spec(cdf_model, shape, target, cdf_clamped);
      const auto errs = prediction_errors(ds, shape, target, spec.predict);
      write_output(cdf_out, cdf_to_csv(error_cdf(std::span<const ErrorSample>(errs))));
    } else if (*fixtures) {
      std::cerr << "seed: " << fixture_seed << "\n";
      write_output(fixture_out, serialize_dataset(generate_fixture(fixture_seed, n_rect, n_circ)));
    } else if (*serve) {
      auto reg = load_registry(serve_dir);
      if (!serve_data.empty()) {
        const auto ds = parse_dataset(read_file(serve_data));
        for (auto s : {SectionShape::Rectangular, SectionShape::Circular}) {
          if (ds.filter(s).size() >= 2) reg.set_stats(dataset_stats(ds, s));
        }
      }
      httplib::Server server;
      register_routes(server, reg);
      std::cerr << "listening on " << host << ":" << port << " with " << reg.artifacts().size()
                << " trained artifact(s)\n";
      if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return kExitData;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

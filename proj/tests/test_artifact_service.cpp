#include <gtest/gtest.h>

#include "colmp/http_service.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include "colmp/fixture.hpp"
#include "colmp/pipeline.hpp"

using namespace colmp;
using json = nlohmann::json;

namespace {

const Dataset& fixture() {
  static const Dataset ds = generate_fixture(21, 60, 40);
  return ds;
}

MlpConfig tiny_mlp() {
  MlpConfig c;
  c.hidden_layers = 2;
  c.hidden_width = 8;
  c.epochs = 50;
  c.seed = 3;
  return c;
}

std::vector<ModelArtifact> trained_artifacts() {
  const auto& ds = fixture();
  std::vector<ModelArtifact> out;
  for (auto t : {Target::A, Target::B}) {
    out.push_back(to_artifact(train_linear(ds, SectionShape::Rectangular, t, LinearRecipe::MLR, 1).model, "mlr-fit",
                              SectionShape::Rectangular, t));
    out.push_back(to_artifact(train_linear(ds, SectionShape::Rectangular, t, LinearRecipe::PRM, 1).model, "prm-fit",
                              SectionShape::Rectangular, t));
    out.push_back(to_artifact(train_linear(ds, SectionShape::Rectangular, t, LinearRecipe::RLR, 1).model, "rlr-fit",
                              SectionShape::Rectangular, t));
    out.push_back(to_artifact(train_gpr(ds, SectionShape::Circular, t, 2).regressor, "gpr", SectionShape::Circular, t, 2));
    out.push_back(to_artifact(train_mlp(ds, SectionShape::Circular, t, tiny_mlp()).regressor, "mlp",
                              SectionShape::Circular, t));
  }
  out.push_back(to_artifact(train_ova(ds, SectionShape::Rectangular, false, 0.5, 300, 4).model, "ova",
                            SectionShape::Rectangular));
  return out;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("colmp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write(const std::filesystem::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

json features(double ad, double p, double rl, double rt, double sd, double v) {
  return {{"a_over_d", ad}, {"axial_ratio", p}, {"rho_l", rl}, {"rho_t", rt}, {"s_over_d", sd}, {"vy_over_vo", v}};
}

std::optional<ErrorCode> load_error(const std::string& bytes) {
  try {
    load_model(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(Artifact, ByteStableRoundTripForEveryType) {
  for (const auto& a : trained_artifacts()) {
    const std::string first = save_model(a);
    const auto loaded = load_model(first);
    EXPECT_EQ(loaded, a) << a.model_type;
    EXPECT_EQ(save_model(loaded), first) << a.model_type;
  }
  const auto gm = closed_form_artifact(EstimatorFamily::GM, SectionShape::Circular);
  EXPECT_EQ(save_model(load_model(save_model(gm))), save_model(gm));
}

TEST(Artifact, ReloadedModelsPredictIdentically) {
  const auto& ds = fixture();
  const auto arts = trained_artifacts();
  for (const auto& a : arts) {
    if (a.model_type == "ova") {
      const auto m = ova_from_artifact(a);
      const auto m2 = ova_from_artifact(load_model(save_model(a)));
      for (const auto& r : ds) EXPECT_EQ(predict_ova(m, r.features).scores, predict_ova(m2, r.features).scores);
      continue;
    }
    const auto p = load_regressor(a).predict;
    const auto p2 = load_regressor(load_model(save_model(a))).predict;
    for (const auto& r : ds) EXPECT_EQ(p(r.features), p2(r.features)) << a.model_type;
  }
}

TEST(Artifact, RejectsBadFiles) {
  auto j = json::parse(save_model(trained_artifacts().front()));
  j["format_version"] = 99;
  EXPECT_EQ(load_error(j.dump()), ErrorCode::UnsupportedVersion);
  EXPECT_EQ(load_error("{not json"), ErrorCode::CorruptPayload);

  auto mlp = json::parse(save_model(to_artifact(train_mlp(fixture(), SectionShape::Circular, Target::A, tiny_mlp()).regressor,
                                                "mlp", SectionShape::Circular, Target::A)));
  mlp["payload"]["layers"][0]["weights"].erase(0);
  EXPECT_EQ(load_error(mlp.dump()), ErrorCode::ArityMismatch);

  auto lin = json::parse(save_model(trained_artifacts().front()));
  lin["payload"]["coefficients"].push_back(1.0);
  EXPECT_EQ(load_error(lin.dump()), ErrorCode::ArityMismatch);

  auto bad_type = json::parse(save_model(trained_artifacts().front()));
  bad_type["model_type"] = "forest";
  EXPECT_THROW(load_model(bad_type.dump()), Error);
}

TEST(Registry, LoadsDirectoryAndRejectsReservedOrDuplicateNames) {
  const auto dir = temp_dir("registry");
  const auto arts = trained_artifacts();
  for (std::size_t i = 0; i < arts.size(); ++i) write(dir / ("m" + std::to_string(i) + ".json"), save_model(arts[i]));
  write(dir / "notes.txt", "ignored");
  const auto reg = Registry::from_directory(dir);
  EXPECT_EQ(reg.artifacts().size(), arts.size());
  EXPECT_EQ(reg.regression_names(SectionShape::Rectangular), (std::vector<std::string>{"mlr-fit", "prm-fit", "rlr-fit"}));
  EXPECT_EQ(reg.regression_names(SectionShape::Circular), (std::vector<std::string>{"gpr", "mlp"}));
  EXPECT_NE(reg.classifier("ova", SectionShape::Rectangular), nullptr);
  EXPECT_EQ(reg.classifier("ova", SectionShape::Circular), nullptr);

  Registry r2;
  auto reserved = arts.front();
  reserved.name = "gm";
  EXPECT_THROW(r2.add(reserved), Error);
  r2.add(arts.front());
  EXPECT_THROW(r2.add(arts.front()), Error);

  write(dir / "zz.json", "{");
  try {
    Registry::from_directory(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("zz.json"), std::string::npos);
  }
  EXPECT_THROW(Registry::from_directory(dir / "missing"), Error);
  std::filesystem::remove_all(dir);
}

TEST(Dispatch, PredictMatchesLibrary) {
  Registry reg;
  const json req = {{"id", "c-1"}, {"shape", "R"}, {"features", features(3.0, 0.2, 0.02, 0.005, 0.5, 0.6)}};
  const auto r = dispatch("POST", "/api/v1/predict", req.dump(), reg);
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["id"], "c-1");
  const ColumnFeatures f{3.0, 0.2, 0.02, 0.005, 0.5, 0.6};
  for (auto fam : kEstimatorFamilies) {
    const auto e = estimate_raw(fam, f, SectionShape::Rectangular);
    const auto& m = j["models"][std::string(to_string(fam))];
    EXPECT_EQ(m["a"].get<double>(), e.params.a);
    EXPECT_EQ(m["b"].get<double>(), e.params.b);
    EXPECT_EQ(m["raw_a"].get<double>(), e.raw_a);
  }
  EXPECT_EQ(j["classification"]["mode"], "FC");
  EXPECT_FALSE(j.contains("x_test"));
}

TEST(Dispatch, StatsEnableSeparationParam) {
  Registry reg;
  reg.set_stats(dataset_stats(fixture(), SectionShape::Rectangular));
  const json req = {{"shape", "R"}, {"features", features(3.0, 0.2, 0.02, 0.005, 0.5, 0.6)}, {"classify", false}};
  const auto j = json::parse(dispatch("POST", "/api/v1/predict", req.dump(), reg).body);
  EXPECT_FALSE(j.contains("classification"));
  EXPECT_EQ(j["x_test"].get<double>(),
            separation_param({3.0, 0.2, 0.02, 0.005, 0.5, 0.6}, *reg.stats(SectionShape::Rectangular)));
}

TEST(Dispatch, ErrorMapping) {
  Registry reg;
  const auto f = features(3.0, 0.2, 0.02, 0.005, 0.5, 0.6);
  auto status_code = [&](const std::string& method, const std::string& path, const std::string& body) {
    const auto r = dispatch(method, path, body, reg);
    return std::pair{r.status, json::parse(r.body).value("error", std::string())};
  };
  EXPECT_EQ(status_code("POST", "/api/v1/predict", json{{"shape", "R"}, {"features", f}, {"models", {"xyz"}}}.dump()),
            (std::pair{400, std::string("UnknownModel")}));
  EXPECT_EQ(status_code("POST", "/api/v1/predict", json{{"shape", "R"}}.dump()),
            (std::pair{400, std::string("InvalidFeatures")}));
  EXPECT_EQ(status_code("POST", "/api/v1/predict", json{{"shape", "X"}, {"features", f}}.dump()),
            (std::pair{400, std::string("InvalidArgument")}));
  EXPECT_EQ(status_code("POST", "/api/v1/predict", "not json"), (std::pair{400, std::string("InvalidArgument")}));
  EXPECT_EQ(status_code("POST", "/api/v1/classify", json{{"shape", "C"}, {"features", f}, {"classifier", "ova"}}.dump()),
            (std::pair{400, std::string("UnknownModel")}));
  EXPECT_EQ(status_code("GET", "/api/v1/nope", ""), (std::pair{404, std::string("NotFound")}));
  auto neg = f;
  neg["a_over_d"] = -1.0;
  EXPECT_EQ(status_code("POST", "/api/v1/predict", json{{"shape", "R"}, {"features", neg}}.dump()).first, 400);
}

TEST(Dispatch, HealthAndModels) {
  Registry reg;
  reg.add(trained_artifacts().back());
  const auto h = json::parse(dispatch("GET", "/api/v1/health", "", reg).body);
  EXPECT_EQ(h["status"], "ok");
  EXPECT_EQ(h["trained_models"], 1);
  const auto m = json::parse(dispatch("GET", "/api/v1/models", "", reg).body);
  EXPECT_EQ(m["closed_form"].size(), 4u);
  EXPECT_EQ(m["trained"][0]["name"], "ova");
  EXPECT_EQ(m["default_classifier"], "fixed");
}

TEST(Http, ServesTheSameBodiesAsDispatch) {
  Registry reg;
  for (const auto& a : trained_artifacts()) reg.add(a);
  httplib::Server server;
  register_routes(server, reg);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const json req = {{"id", 7}, {"shape", "C"}, {"features", features(2.5, 0.1, 0.02, 0.004, 0.4, 0.9)}};
  const auto res = client.Post("/api/v1/predict", req.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, dispatch("POST", "/api/v1/predict", req.dump(), reg).body);
  const auto j = json::parse(res->body);
  EXPECT_TRUE(j["models"].contains("gpr"));
  EXPECT_TRUE(j["models"].contains("mlp"));

  const auto missing = client.Get("/nowhere");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body)["error"], "NotFound");

  server.stop();
  t.join();
}

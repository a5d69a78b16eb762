#include <gtest/gtest.h>

#include <thread>

#include "cgp/api.hpp"
#include "support/oracles.hpp"

using namespace cgp;

namespace {

struct Fixture {
  Dataset data;
  PosteriorModel model;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    out.data.feature_names = {"f1", "f2"};
    out.data.indicator_names = {"school", "work"};
    out.data.regions = {oracle::toy_region("A", {0.5, -1.0}, 0.45, 0.15, 20, 40),
                        oracle::toy_region("B", {-0.8, 0.3}, 0.35, 0.12, 25, 40)};
    TrainOptions opt;
    opt.iterations = 100;
    opt.learning_rate = 0.03;
    out.model = train(out.data.regions, ModelConfig{}, opt).first;
    return out;
  }();
  return f;
}

const ApiService& service() {
  static const ApiService s(fixture().model, fixture().data);
  return s;
}

json horizon_policy(int horizon, PolicyVector p) {
  return json(std::vector<PolicyVector>(static_cast<std::size_t>(horizon) + 1, std::move(p)));
}

}  // namespace

TEST(Api, ValidRequestParses) {
  const json body = {{"region_id", "A"}, {"horizon", 3}, {"future_policy", horizon_policy(3, {1, 0.5})},
                     {"shift_days", -7}, {"num_samples", 200}, {"seed", 9}};
  const ValidationResult v = validate_request(body, 2);
  ASSERT_TRUE(v.ok());
  EXPECT_EQ(v.request->region_id, "A");
  EXPECT_EQ(v.request->future_policy.size(), 4u);
  EXPECT_EQ(*v.request->shift_days, -7);
  EXPECT_EQ(v.request->seed, 9u);
  // Round trip through the canonical JSON form.
  EXPECT_EQ(validate_request(request_to_json(*v.request), 2).request, v.request);
}

TEST(Api, ReportsEveryViolation) {
  const json body = {{"region_id", "A"},
                     {"horizon", 2},
                     {"future_policy", {{0, 0}, {0, 1.5}, {0, 0}}},
                     {"shift_days", 40},
                     {"num_samples", 5}};
  const ValidationResult v = validate_request(body, 2);
  ASSERT_EQ(v.errors.size(), 3u);
  EXPECT_EQ(v.errors[0].field, "future_policy[1][1]");
  EXPECT_NE(v.errors[0].message.find("day 1 indicator 1"), std::string::npos);
  EXPECT_EQ(v.errors[1].field, "shift_days");
  EXPECT_EQ(v.errors[2].field, "num_samples");
}

TEST(Api, StructuralErrors) {
  EXPECT_EQ(validate_request(json::array(), 2).errors.size(), 1u);
  const auto v = validate_request({{"horizon", 400}, {"extra", 1}}, 2);
  std::vector<std::string> fields;
  for (const auto& e : v.errors) fields.push_back(e.field);
  EXPECT_EQ(fields, (std::vector<std::string>{"extra", "region_id", "horizon"}));
  const auto w = validate_request({{"region_id", "A"}, {"horizon", 1}, {"future_policy", {{0}, {0}}}}, 2);
  EXPECT_EQ(w.errors.size(), 2u);
  const auto s = validate_request({{"region_id", "A"}, {"horizon", 1}, {"seed", -3}}, 2);
  ASSERT_EQ(s.errors.size(), 1u);
  EXPECT_EQ(s.errors[0].field, "seed");
}

TEST(Api, HealthAndRegions) {
  const json h = json::parse(service().health().body);
  EXPECT_EQ(h["status"], "ok");
  EXPECT_EQ(h["schema_version"], kSchemaVersion);
  EXPECT_EQ(h["checkpoint"], checkpoint_id(fixture().model));
  const json r = json::parse(service().regions().body);
  ASSERT_EQ(r["regions"].size(), 2u);
  EXPECT_EQ(r["regions"][0]["region_id"], "A");
  EXPECT_TRUE(r["regions"][0]["trained"].get<bool>());
  EXPECT_EQ(r["indicator_names"], json({"school", "work"}));
}

TEST(Api, HistoryAndNotFound) {
  const ApiResponse ok = service().history("B");
  ASSERT_EQ(ok.status, 200);
  const json j = json::parse(ok.body);
  EXPECT_EQ(j["cumulative"].size(), 40u);
  EXPECT_EQ(j["stringency"].size(), 40u);
  EXPECT_EQ(service().history("Z").status, 404);
}

TEST(Api, ScenarioForecastResponse) {
  const json req = {{"region_id", "A"}, {"horizon", 7}, {"num_samples", 100}, {"seed", 1}};
  const ApiResponse r = service().scenario(req.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const json j = json::parse(r.body);
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_EQ(j["forecast"]["mean"].size(), 8u);
  EXPECT_EQ(j["stringency"].size(), 8u);
  EXPECT_EQ(j["shift_days"], 0);
  const auto q5 = j["forecast"]["q5"].get<std::vector<double>>();
  const auto q95 = j["forecast"]["q95"].get<std::vector<double>>();
  for (std::size_t k = 0; k < q5.size(); ++k) EXPECT_LE(q5[k], q95[k]);
  // The response repeats what forecast() would return for the same request.
  ScenarioSpec s;
  s.region_id = "A";
  s.horizon = 7;
  const ForecastResult f = forecast(fixture().model, fixture().data.regions[0], s, 100, 1);
  EXPECT_EQ(j["forecast"], forecast_to_json(f));
}

TEST(Api, ScenarioIsByteDeterministic) {
  const std::string body = R"({"region_id":"B","horizon":4,"shift_days":-3,"num_samples":100,"seed":4})";
  const ApiResponse a = service().scenario(body), b = service().scenario(body);
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
}

TEST(Api, ScenarioCounterfactualResponse) {
  const json req = {{"region_id", "A"}, {"horizon", 5}, {"shift_days", -7}, {"num_samples", 100}};
  const ApiResponse r = service().scenario(req.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const json j = json::parse(r.body);
  EXPECT_TRUE(j.contains("baseline"));
  EXPECT_LT(j["cumulative_difference"].get<double>(), 0.0);
  EXPECT_EQ(j["forecast"]["mean"].size(), 45u);
}

TEST(Api, ScenarioErrors) {
  EXPECT_EQ(service().scenario("{not json").status, 400);
  const ApiResponse bad = service().scenario(R"({"region_id":"A","horizon":-1})");
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(json::parse(bad.body)["errors"][0]["field"], "horizon");
  EXPECT_EQ(service().scenario(R"({"region_id":"Q","horizon":1})").status, 404);
  const ApiResponse e = ApiService::internal_error("boom");
  EXPECT_EQ(e.status, 500);
  EXPECT_EQ(json::parse(e.body)["error_id"].get<std::string>().size(), 12u);
}

TEST(Api, ParseBind) {
  EXPECT_EQ(parse_bind("0.0.0.0:9000"), std::make_pair(std::string("0.0.0.0"), 9000));
  EXPECT_THROW(parse_bind("localhost"), ConfigError);
  EXPECT_THROW(parse_bind("h:70000"), ConfigError);
}

TEST(Api, LiveServerRoundTrip) {
  ServeOptions opt;
  opt.host = "127.0.0.1";
  opt.workers = 1;
  HttpFrontend http(service(), opt);
  const int port = http.bind_any();
  ASSERT_GT(port, 0);
  std::thread th([&] { http.run(); });
  http.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);
  auto health = cli.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");
  auto hist = cli.Get("/regions/A/history");
  ASSERT_TRUE(hist);
  EXPECT_EQ(hist->status, 200);
  auto scen = cli.Post("/scenario", R"({"region_id":"B","horizon":3,"num_samples":100})",
                       "application/json");
  ASSERT_TRUE(scen);
  EXPECT_EQ(scen->status, 200);
  auto bad = cli.Post("/scenario", R"({"horizon":3})", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto missing = cli.Get("/nowhere");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  http.stop();
  th.join();
}

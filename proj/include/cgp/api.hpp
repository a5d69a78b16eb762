#pragma once

// JSON service over a trained model: request validation, response building,
// and the HTTP front end.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "cgp/data.hpp"
#include "cgp/errors.hpp"
#include "cgp/forecast.hpp"
#include "cgp/text.hpp"
#include "cgp/trainer.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

namespace cgp {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr int kMaxHorizon = 365;
inline constexpr int kMaxRequestSamples = 10000;
inline constexpr int kDefaultRequestSamples = 1000;

struct ScenarioRequest {
  std::string region_id;
  int horizon = 14;
  std::vector<PolicyVector> future_policy;  // empty: recorded/held policy
  std::optional<int> shift_days;
  int num_samples = kDefaultRequestSamples;
  std::uint64_t seed = 0;

  friend bool operator==(const ScenarioRequest&, const ScenarioRequest&) = default;
};

struct FieldError {
  std::string field;
  std::string message;
};

struct ValidationResult {
  std::optional<ScenarioRequest> request;
  std::vector<FieldError> errors;
  bool ok() const { return errors.empty(); }
};

namespace detail {

inline bool json_integer(const json& v, long long& out) {
  if (v.is_number_integer()) {
    out = v.get<long long>();
    return true;
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) {
      out = static_cast<long long>(d);
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Checks structure and ranges, collecting every violation. `indicators` is the
// expected policy-vector length (0 skips that check).
inline ValidationResult validate_request(const json& body, std::size_t indicators = 0) {
  ValidationResult out;
  auto fail = [&](std::string field, std::string msg) {
    out.errors.push_back({std::move(field), std::move(msg)});
  };
  if (!body.is_object()) {
    fail("", "request body must be a JSON object");
    return out;
  }
  static const std::vector<std::string> kFields = {"region_id", "horizon",     "future_policy",
                                                   "shift_days", "num_samples", "seed"};
  for (const auto& [key, _] : body.items()) {
    if (std::find(kFields.begin(), kFields.end(), key) == kFields.end()) {
      fail(key, "unknown field");
    }
  }
  ScenarioRequest r;
  if (!body.contains("region_id")) {
    fail("region_id", "required");
  } else if (!body["region_id"].is_string() || body["region_id"].get<std::string>().empty()) {
    fail("region_id", "must be a non-empty string");
  } else {
    r.region_id = body["region_id"].get<std::string>();
  }
  long long v = 0;
  bool horizon_ok = false;
  if (!body.contains("horizon")) {
    fail("horizon", "required");
  } else if (!detail::json_integer(body["horizon"], v)) {
    fail("horizon", "must be an integer");
  } else if (v < 0 || v > kMaxHorizon) {
    fail("horizon", "must be between 0 and " + std::to_string(kMaxHorizon));
  } else {
    r.horizon = static_cast<int>(v);
    horizon_ok = true;
  }
  if (body.contains("future_policy") && !body["future_policy"].is_null()) {
    const json& fp = body["future_policy"];
    if (!fp.is_array()) {
      fail("future_policy", "must be an array of policy vectors");
    } else {
      if (horizon_ok && fp.size() != static_cast<std::size_t>(r.horizon) + 1) {
        fail("future_policy", "must have horizon + 1 = " + std::to_string(r.horizon + 1) +
                                  " entries, got " + std::to_string(fp.size()));
      }
      for (std::size_t d = 0; d < fp.size(); ++d) {
        const std::string base = "future_policy[" + std::to_string(d) + "]";
        if (!fp[d].is_array()) {
          fail(base, "must be an array of numbers");
          continue;
        }
        if (indicators > 0 && fp[d].size() != indicators) {
          fail(base, "must have " + std::to_string(indicators) + " indicators, got " +
                         std::to_string(fp[d].size()));
        }
        PolicyVector p;
        for (std::size_t k = 0; k < fp[d].size(); ++k) {
          const std::string field = base + "[" + std::to_string(k) + "]";
          if (!fp[d][k].is_number()) {
            fail(field, "must be a number");
            continue;
          }
          const double x = fp[d][k].get<double>();
          if (!(x >= 0.0 && x <= 1.0)) {
            fail(field, "day " + std::to_string(d) + " indicator " + std::to_string(k) +
                            ": value " + format_exact(x) + " outside [0, 1]");
          }
          p.push_back(x);
        }
        r.future_policy.push_back(std::move(p));
      }
    }
  }
  if (body.contains("shift_days") && !body["shift_days"].is_null()) {
    if (!detail::json_integer(body["shift_days"], v)) {
      fail("shift_days", "must be an integer");
    } else if (std::abs(v) > kMaxShiftDays) {
      fail("shift_days", "must be between -" + std::to_string(kMaxShiftDays) + " and " +
                             std::to_string(kMaxShiftDays));
    } else {
      r.shift_days = static_cast<int>(v);
    }
  }
  if (body.contains("num_samples")) {
    if (!detail::json_integer(body["num_samples"], v)) {
      fail("num_samples", "must be an integer");
    } else if (v < kMinForecastSamples || v > kMaxRequestSamples) {
      fail("num_samples", "must be between " + std::to_string(kMinForecastSamples) + " and " +
                              std::to_string(kMaxRequestSamples));
    } else {
      r.num_samples = static_cast<int>(v);
    }
  }
  if (body.contains("seed")) {
    if (!body["seed"].is_number_unsigned() && !(body["seed"].is_number_integer() &&
                                                body["seed"].get<long long>() >= 0)) {
      fail("seed", "must be a non-negative integer");
    } else {
      r.seed = body["seed"].get<std::uint64_t>();
    }
  }
  if (out.errors.empty()) out.request = std::move(r);
  return out;
}

inline json request_to_json(const ScenarioRequest& r) {
  json j;
  j["region_id"] = r.region_id;
  j["horizon"] = r.horizon;
  if (!r.future_policy.empty()) j["future_policy"] = r.future_policy;
  if (r.shift_days) j["shift_days"] = *r.shift_days;
  j["num_samples"] = r.num_samples;
  j["seed"] = r.seed;
  return j;
}

inline json forecast_to_json(const ForecastResult& f) {
  json j;
  j["first_day"] = f.first_day + 1;
  std::vector<std::string> dates;
  for (std::size_t k = 0; k < f.mean.size(); ++k) {
    dates.push_back(format_date(f.outbreak_date + static_cast<int>(f.first_day + k)));
  }
  j["dates"] = dates;
  j["mean"] = f.mean;
  j["q5"] = f.q5();
  j["q25"] = f.q25();
  j["q50"] = f.q50();
  j["q75"] = f.q75();
  j["q95"] = f.q95();
  j["daily_mean"] = f.daily_mean;
  j["num_samples"] = f.num_samples;
  j["seed"] = f.seed;
  return j;
}

inline json region_summary(const RegionRecord& r) {
  json j;
  j["region_id"] = r.region_id;
  j["parent_country"] = r.parent_country ? json(*r.parent_country) : json(nullptr);
  j["population"] = r.population;
  j["outbreak_date"] = format_date(r.policy.anchor);
  j["last_date"] = format_date(r.policy.anchor + (static_cast<int>(r.fatalities.size()) - 1));
  j["observed_days"] = r.fatalities.size();
  return j;
}

struct ApiResponse {
  int status = 200;
  std::string body;
};

// Stateless request handler over immutable model and data.
class ApiService {
 public:
  ApiService(PosteriorModel model, Dataset data)
      : model_(std::move(model)), data_(std::move(data)), checkpoint_(checkpoint_id(model_)) {}

  const std::string& checkpoint() const { return checkpoint_; }
  const Dataset& data() const { return data_; }

  ApiResponse health() const {
    json j = envelope();
    j["status"] = "ok";
    j["checkpoint"] = checkpoint_;
    return {200, j.dump()};
  }

  ApiResponse regions() const {
    json j = envelope();
    j["feature_names"] = data_.feature_names;
    j["indicator_names"] = data_.indicator_names;
    json list = json::array();
    for (const auto& r : data_.regions) {
      json s = region_summary(r);
      s["trained"] = model_.find(r.region_id) != nullptr;
      list.push_back(std::move(s));
    }
    j["regions"] = std::move(list);
    return {200, j.dump()};
  }

  ApiResponse history(const std::string& id) const {
    const RegionRecord* r = data_.find(id);
    if (!r) return not_found(id);
    json j = envelope();
    j["region"] = region_summary(*r);
    std::vector<std::string> dates;
    std::vector<double> daily, stringency;
    for (std::size_t d = 0; d < r->fatalities.size(); ++d) {
      dates.push_back(format_date(r->policy.anchor + static_cast<int>(d)));
      daily.push_back(r->fatalities[d] - (d > 0 ? r->fatalities[d - 1] : 0.0));
      stringency.push_back(stringency_on_day(r->policy, d));
    }
    j["indicator_names"] = data_.indicator_names;
    j["dates"] = dates;
    j["cumulative"] = r->fatalities;
    j["daily"] = daily;
    j["policy"] = std::vector<PolicyVector>(
        r->policy.days.begin(), r->policy.days.begin() + static_cast<std::ptrdiff_t>(r->fatalities.size()));
    j["stringency"] = stringency;
    j["future_policy"] = r->future_policy.days;
    return {200, j.dump()};
  }

  ApiResponse scenario(const std::string& raw) const {
    json body;
    try {
      body = json::parse(raw);
    } catch (const json::parse_error& e) {
      return bad_request({{"", std::string("malformed JSON: ") + e.what()}});
    }
    const ValidationResult v = validate_request(body, data_.indicator_names.size());
    if (!v.ok()) return bad_request(v.errors);
    const ScenarioRequest& req = *v.request;
    const RegionRecord* region = data_.find(req.region_id);
    if (!region || !model_.find(req.region_id)) return not_found(req.region_id);
    return {200, scenario_response(req, *region).dump()};
  }

  json scenario_response(const ScenarioRequest& req, const RegionRecord& region) const {
    json j = envelope();
    j["checkpoint"] = checkpoint_;
    j["region"] = region_summary(region);
    ScenarioSpec spec;
    spec.region_id = req.region_id;
    spec.horizon = req.horizon;
    spec.future_policy = req.future_policy;
    spec.shift_days = req.shift_days;
    const std::vector<PolicyVector> future = detail::resolve_future(region, spec);
    std::vector<std::string> warnings;
    if (req.shift_days && *req.shift_days != 0) {
      const CounterfactualResult cf = counterfactual_shift(
          model_, region, *req.shift_days, req.horizon, req.num_samples, req.seed, future);
      j["forecast"] = forecast_to_json(cf.shifted);
      j["baseline"] = forecast_to_json(cf.baseline);
      j["cumulative_difference"] = cf.cumulative_difference;
      j["shift_days"] = *req.shift_days;
      warnings = cf.warnings;
      const auto full = detail::observed_plus_future(region, future);
      const auto shifted = shift_timeline(full, region.fatalities.size(), *req.shift_days);
      j["stringency"] = stringency_series(shifted.days, 0);
    } else {
      const ForecastResult f = forecast(model_, region, spec, req.num_samples, req.seed);
      j["forecast"] = forecast_to_json(f);
      j["shift_days"] = 0;
      std::vector<double> s;
      for (const auto& p : future) s.push_back(stringency_index(p));
      j["stringency"] = s;
    }
    j["warnings"] = warnings;
    return j;
  }

  static ApiResponse bad_request(const std::vector<FieldError>& errors) {
    json j = envelope();
    j["error"] = "invalid_request";
    json list = json::array();
    for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
    j["errors"] = std::move(list);
    return {400, j.dump()};
  }

  static ApiResponse not_found(const std::string& id) {
    json j = envelope();
    j["error"] = "not_found";
    j["message"] = "unknown region '" + id + "'";
    return {404, j.dump()};
  }

  static ApiResponse internal_error(const std::string& what) {
    static std::atomic<std::uint64_t> counter{0};
    const std::string id = hex64(fnv1a(what + "#" + std::to_string(++counter))).substr(0, 12);
    std::cerr << "error " << id << ": " << what << "\n";
    json j = envelope();
    j["error"] = "internal";
    j["error_id"] = id;
    return {500, j.dump()};
  }

  static ApiResponse saturated() {
    json j = envelope();
    j["error"] = "busy";
    j["message"] = "all scenario workers are busy";
    return {503, j.dump()};
  }

 private:
  static json envelope() {
    json j = json::object();
    j["schema_version"] = kSchemaVersion;
    return j;
  }

  static std::vector<double> stringency_series(const std::vector<PolicyVector>& days,
                                               std::size_t first) {
    std::vector<double> s;
    for (std::size_t d = first; d < days.size(); ++d) s.push_back(stringency_index(days[d]));
    return s;
  }

  PosteriorModel model_;
  Dataset data_;
  std::string checkpoint_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  int workers = 2;
  int request_timeout_seconds = 60;
};

inline std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ConfigError("bind must be HOST:PORT, got '" + bind + "'");
  const long long port = parse_integer(bind.substr(colon + 1), "bind");
  if (port < 0 || port > 65535) throw ConfigError("bind port out of range");
  return {bind.substr(0, colon), static_cast<int>(port)};
}

// Wires an ApiService to an httplib server. Scenario requests share a bounded
// pool of slots; a request that waits longer than the timeout gets 503.
class HttpFrontend {
 public:
  HttpFrontend(const ApiService& api, ServeOptions options)
      : api_(api), options_(options), slots_(std::max(options.workers, 1)) {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server_.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, api_.health());
    });
    server_.Get("/regions", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, api_.regions());
    });
    server_.Get(R"(/regions/([^/]+)/history)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, api_.history(req.matches[1]));
                });
    server_.Post("/scenario", [this](const httplib::Request& req, httplib::Response& res) {
      if (!slots_.try_acquire_for(std::chrono::seconds(options_.request_timeout_seconds))) {
        reply(res, ApiService::saturated());
        return;
      }
      try {
        reply(res, api_.scenario(req.body));
      } catch (const std::exception& e) {
        reply(res, ApiService::internal_error(e.what()));
      }
      slots_.release();
    });
    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        res.set_content(json{{"schema_version", kSchemaVersion}, {"error", "not_found"}}.dump(),
                        "application/json");
      }
    });
    server_.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          std::string what = "unknown exception";
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            what = e.what();
          } catch (...) {
          }
          const ApiResponse r = ApiService::internal_error(what);
          res.status = r.status;
          res.set_content(r.body, "application/json");
        });
  }

  // Binds and blocks. Returns false if the address cannot be bound.
  bool listen() { return server_.listen(options_.host, options_.port); }

  // Binds to an ephemeral port, returning it (for tests); call run() after.
  int bind_any() { return server_.bind_to_any_port(options_.host); }
  bool run() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  bool running() const { return server_.is_running(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  static void reply(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  }

  const ApiService& api_;
  ServeOptions options_;
  std::counting_semaphore<> slots_;
  httplib::Server server_;
};

}  // namespace cgp

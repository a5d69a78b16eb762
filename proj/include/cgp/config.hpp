#pragma once

// Flat key=value run configuration shared by every CLI subcommand.

#include <charconv>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cgp/data.hpp"
#include "cgp/errors.hpp"
#include "cgp/kernel.hpp"
#include "cgp/model.hpp"
#include "cgp/svi.hpp"
#include "cgp/text.hpp"

namespace cgp {

class RunConfig {
 public:
  RunConfig() {
    for (const auto& [k, v] : defaults()) values_[k] = v;
  }

  // Keys in their canonical (echo) order with default values.
  static const std::vector<std::pair<std::string, std::string>>& defaults() {
    static const std::vector<std::pair<std::string, std::string>> d = {
        // data
        {"features_path", ""},
        {"fatalities_path", ""},
        {"policies_path", ""},
        {"truth_path", ""},
        {"checkpoint", ""},
        {"out", "out"},
        {"outbreak_threshold", "1"},
        {"min_history_days", "5"},
        {"default_population", "1000000"},
        // model
        {"beta_reference", "0.5"},
        {"observation_space", "log1p_cumulative"},
        {"upper_family", "matern_three_half"},
        {"lower_family", "matern_three_half"},
        {"lower_signal_variance", "0.1"},
        {"lower_noise_variance", "0.01"},
        {"step_size", "0.25"},
        {"initial_exposed", "0"},
        {"init_r0", "2.5"},
        {"init_sigma", "0.2"},
        {"init_gamma", "0.1"},
        {"init_mu", "0.01"},
        {"init_lengthscale", "14"},
        {"init_log_std", "-2"},
        // training
        {"iterations", "1000"},
        {"learning_rate", "0.01"},
        {"num_samples", "8"},
        {"seed", "0"},
        {"learn_hyper", "true"},
        // forecasting and evaluation
        {"forecast_samples", "1000"},
        {"horizon", "14"},
        {"region", ""},
        {"shift_days", "0"},
        {"plot", "true"},
        {"eval_horizons", "7,14"},
        {"eval_origins", ""},
        {"forecast_dir", ""},
        // service
        {"bind", "127.0.0.1:8080"},
        {"workers", "2"},
        {"request_timeout", "60"},
        // synthetic benchmark
        {"synth_regions", "12"},
        {"synth_train_days", "60"},
        {"synth_holdout_days", "14"},
        {"synth_start_date", "2020-03-01"},
    };
    return d;
  }

  static bool known(const std::string& key) {
    for (const auto& [k, _] : defaults()) {
      if (k == key) return true;
    }
    return false;
  }

  void set(const std::string& key, const std::string& value) {
    if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const {
    double v = 0.0;
    if (!try_parse_double(get(key), v)) {
      throw ConfigError("config key '" + key + "' is not a number: '" + get(key) + "'");
    }
    return v;
  }

  long long integer(const std::string& key) const {
    const double v = number(key);
    if (v != static_cast<double>(static_cast<long long>(v))) {
      throw ConfigError("config key '" + key + "' must be an integer");
    }
    return static_cast<long long>(v);
  }

  std::uint64_t seed() const {
    const std::string& s = get("seed");
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("config key 'seed' must be a non-negative integer");
    }
    return v;
  }

  bool flag(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "' must be true or false");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& f : split(get(key), ',')) {
      const std::string t(trim(f));
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  // Parses "key = value" lines; '#' starts a comment.
  void merge_text(const std::string& text, const std::string& where) {
    std::size_t ln = 0;
    for (const auto& raw : split_lines(text)) {
      ++ln;
      std::string line = raw;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(where + ":" + std::to_string(ln) + ": expected key=value");
      }
      const std::string key(trim(std::string_view(line).substr(0, eq)));
      const std::string value(trim(std::string_view(line).substr(eq + 1)));
      if (!known(key)) {
        throw ConfigError(where + ":" + std::to_string(ln) + ": unknown config key '" + key + "'");
      }
      values_[key] = value;
    }
  }

  void merge_file(const std::string& path) {
    std::string text;
    try {
      text = read_file(path);
    } catch (const Error&) {
      throw ConfigError("cannot read config file '" + path + "'");
    }
    merge_text(text, path);
  }

  std::string to_text() const {
    std::string out;
    for (const auto& [k, _] : defaults()) out += k + "=" + values_.at(k) + "\n";
    return out;
  }

  DataConfig data_config() const {
    DataConfig c;
    c.outbreak_threshold = number("outbreak_threshold");
    const long long h = integer("min_history_days");
    if (h < 1) throw ConfigError("min_history_days must be >= 1");
    c.min_history_days = static_cast<std::size_t>(h);
    c.default_population = number("default_population");
    if (!(c.default_population > 0.0)) throw ConfigError("default_population must be > 0");
    return c;
  }

  ModelConfig model_config() const {
    ModelConfig c;
    c.beta_reference = number("beta_reference");
    c.observation_space = parse_observation_space(get("observation_space"));
    c.upper_family = parse_matern_family(get("upper_family"));
    c.lower_family = parse_matern_family(get("lower_family"));
    c.lower_signal_variance = number("lower_signal_variance");
    c.lower_noise_variance = number("lower_noise_variance");
    c.step_size = number("step_size");
    if (!(c.step_size > 0.0 && c.step_size <= 1.0)) throw ConfigError("step_size must be in (0, 1]");
    c.initial_exposed = number("initial_exposed");
    c.init_r0 = number("init_r0");
    c.init_sigma = number("init_sigma");
    c.init_gamma = number("init_gamma");
    c.init_mu = number("init_mu");
    c.init_lengthscale = number("init_lengthscale");
    c.init_log_std = number("init_log_std");
    if (!(c.init_r0 > 0.0) || !(c.init_sigma > 0.0) || !(c.init_gamma > 0.0) ||
        !(c.init_mu > 0.0) || !(c.init_lengthscale > kLengthscaleFloor)) {
      throw ConfigError("init_* values must be positive (init_lengthscale > 0.5)");
    }
    if (c.init_beta() >= 2.0 * c.beta_reference) {
      throw ConfigError("init_r0 implies a contact rate above 2 * beta_reference");
    }
    c.reset_upper(0, 0);
    return c;
  }

  TrainOptions train_options() const {
    TrainOptions t;
    const long long it = integer("iterations");
    if (it < 0) throw ConfigError("iterations must be >= 0");
    t.iterations = static_cast<int>(it);
    t.learning_rate = number("learning_rate");
    if (!(t.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    const long long ns = integer("num_samples");
    if (ns < 1) throw ConfigError("num_samples must be >= 1");
    t.num_samples = static_cast<int>(ns);
    t.seed = seed();
    t.learn_hyper = flag("learn_hyper");
    return t;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cgp

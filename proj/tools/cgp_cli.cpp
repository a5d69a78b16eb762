// cgp: command-line driver for ingest, train, forecast, scenario, evaluate,
// serve and synth.
//
// Exit status: 0 ok, 2 usage, 3 data error, 4 numerical error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cgp/api.hpp"
#include "cgp/baselines.hpp"
#include "cgp/config.hpp"
#include "cgp/data.hpp"
#include "cgp/forecast.hpp"
#include "cgp/plot.hpp"
#include "cgp/synth.hpp"
#include "cgp/trainer.hpp"

namespace fs = std::filesystem;
using namespace cgp;

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> seed, out, region, horizon, shift_days, samples, bind;
};

RunConfig effective_config(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c.merge_file(f.config);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    c.set(std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1))));
  }
  if (f.seed) c.set("seed", *f.seed);
  if (f.out) c.set("out", *f.out);
  if (f.region) c.set("region", *f.region);
  if (f.horizon) c.set("horizon", *f.horizon);
  if (f.shift_days) c.set("shift_days", *f.shift_days);
  if (f.samples) c.set("forecast_samples", *f.samples);
  if (f.bind) c.set("bind", *f.bind);
  return c;
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path out(c.get("out"));
  fs::create_directories(out);
  write_file((out / "config.txt").string(), c.to_text());
  return out;
}

const std::string& required(const RunConfig& c, const std::string& key) {
  const std::string& v = c.get(key);
  if (v.empty()) throw ConfigError("config key '" + key + "' must be set");
  return v;
}

Dataset load(const RunConfig& c, const std::string& fatalities_key = "fatalities_path") {
  return load_dataset(required(c, "features_path"), required(c, fatalities_key),
                      required(c, "policies_path"), c.data_config());
}

std::string checkpoint_path(const RunConfig& c) {
  const std::string& p = c.get("checkpoint");
  return p.empty() ? (fs::path(c.get("out")) / "checkpoint.txt").string() : p;
}

PosteriorModel load_model(const RunConfig& c) {
  return parse_checkpoint(read_file(checkpoint_path(c)));
}

int as_int(const RunConfig& c, const std::string& key) {
  return static_cast<int>(c.integer(key));
}

std::vector<const RegionRecord*> selected_regions(const RunConfig& c, const Dataset& ds,
                                                  const PosteriorModel& model) {
  std::vector<const RegionRecord*> out;
  const std::vector<std::string> ids = c.list("region");
  if (!ids.empty()) {
    for (const auto& id : ids) {
      const RegionRecord& r = find_region(ds, id);
      model.at(id);
      out.push_back(&r);
    }
    return out;
  }
  for (const auto& r : ds.regions) {
    if (model.find(r.region_id)) out.push_back(&r);
  }
  if (out.empty()) throw LookupError("no trained region in the dataset");
  return out;
}

int cmd_ingest(const RunConfig& c) {
  const fs::path out = prepare_out(c);
  const Dataset ds = load(c);
  write_file((out / "dataset.txt").string(), serialize_dataset(ds));
  std::string report = "kind,region_id,detail\n";
  for (const auto& [id, why] : ds.report.dropped) report += "dropped_region," + id + "," + why + "\n";
  for (const auto& col : ds.report.dropped_feature_columns) report += "dropped_feature,," + col + "\n";
  for (const auto& r : ds.regions) {
    if (r.monotonicity_repairs) {
      report += "monotonicity_repair," + r.region_id + "," +
                std::to_string(r.monotonicity_repairs) + "\n";
    }
  }
  for (const auto& w : ds.report.warnings) report += "warning,," + w + "\n";
  write_file((out / "ingest_report.csv").string(), report);
  std::cout << "ingested " << ds.regions.size() << " regions, dropped "
            << ds.report.dropped.size() << "\n";
  return 0;
}

int cmd_train(const RunConfig& c) {
  const fs::path out = prepare_out(c);
  const Dataset ds = load(c);
  for (const auto& w : ds.report.warnings) std::cerr << "warning: " << w << "\n";
  auto [model, report] = train(ds.regions, c.model_config(), c.train_options());
  write_file((out / "checkpoint.txt").string(), serialize_checkpoint(model));
  write_file((out / "elbo.csv").string(), elbo_trace_csv(report));
  std::cout << "trained " << model.regions.size() << " regions, " << report.elbo.size()
            << " iterations, checkpoint " << checkpoint_id(model) << "\n";
  std::cerr << "training took " << report.wall_seconds << " s, "
            << report.failed_iterations << " failed iterations\n";
  return 0;
}

int cmd_forecast(const RunConfig& c) {
  const fs::path out = prepare_out(c);
  const Dataset ds = load(c);
  const PosteriorModel model = load_model(c);
  const int horizon = as_int(c, "horizon");
  const int samples = as_int(c, "forecast_samples");
  for (const RegionRecord* r : selected_regions(c, ds, model)) {
    ScenarioSpec spec;
    spec.region_id = r->region_id;
    spec.horizon = horizon;
    const ForecastResult f = forecast(model, *r, spec, samples, c.seed());
    write_file((out / ("forecast_" + r->region_id + ".csv")).string(), forecast_csv(f));
    if (c.flag("plot")) {
      write_file((out / ("forecast_" + r->region_id + ".svg")).string(),
                 forecast_svg(r->fatalities, f, nullptr, r->region_id));
    }
  }
  return 0;
}

int cmd_scenario(const RunConfig& c) {
  const fs::path out = prepare_out(c);
  const Dataset ds = load(c);
  const PosteriorModel model = load_model(c);
  const int horizon = as_int(c, "horizon");
  const int samples = as_int(c, "forecast_samples");
  const int shift = as_int(c, "shift_days");
  std::string summary = "region_id,shift_days,baseline_final,shifted_final,cumulative_difference\n";
  for (const RegionRecord* r : selected_regions(c, ds, model)) {
    const CounterfactualResult cf =
        counterfactual_shift(model, *r, shift, horizon, samples, c.seed());
    for (const auto& w : cf.warnings) std::cerr << "warning: " << r->region_id << ": " << w << "\n";
    const std::string base = "scenario_" + r->region_id;
    write_file((out / (base + ".csv")).string(), forecast_csv(cf.shifted));
    write_file((out / (base + "_baseline.csv")).string(), forecast_csv(cf.baseline));
    if (c.flag("plot")) {
      write_file((out / (base + ".svg")).string(),
                 forecast_svg(r->fatalities, cf.shifted, &cf.baseline, r->region_id));
    }
    summary += r->region_id + "," + std::to_string(shift) + "," +
               format_fixed(cf.baseline.mean.back(), 4) + "," +
               format_fixed(cf.shifted.mean.back(), 4) + "," +
               format_fixed(cf.cumulative_difference, 4) + "\n";
  }
  write_file((out / "scenario_summary.csv").string(), summary);
  return 0;
}

// One evaluated forecast: a model's mean path starting at the origin day.
struct EvalEntry {
  std::string model;
  std::string region_id;
  Date origin;
  std::vector<double> mean;  // mean[0] is the origin day
};

std::vector<double> truth_from(const RegionRecord& truth, Date origin) {
  const int start = origin - truth.policy.anchor;
  std::vector<double> out;
  for (int d = start; d >= 0 && d < static_cast<int>(truth.fatalities.size()); ++d) {
    out.push_back(truth.fatalities[static_cast<std::size_t>(d)]);
  }
  return out;
}

int cmd_evaluate(const RunConfig& c) {
  const fs::path out = prepare_out(c);
  const Dataset truth = load(c, "truth_path");
  std::vector<int> horizons;
  for (const auto& h : c.list("eval_horizons")) {
    const long long v = parse_integer(h, "eval_horizons");
    if (v < 1) throw ConfigError("eval_horizons must be positive");
    horizons.push_back(static_cast<int>(v));
  }
  if (horizons.empty()) throw ConfigError("eval_horizons is empty");
  const int max_h = *std::max_element(horizons.begin(), horizons.end());
  std::vector<EvalEntry> entries;
  std::vector<std::string> models;

  if (!c.get("forecast_dir").empty()) {
    models = {"stored"};
    for (const auto& r : truth.regions) {
      const fs::path p = fs::path(c.get("forecast_dir")) / ("forecast_" + r.region_id + ".csv");
      if (!fs::exists(p)) continue;
      const ForecastTable t = parse_forecast_csv(read_file(p.string()), p.string());
      if (t.dates.empty()) continue;
      entries.push_back({"stored", r.region_id, t.dates.front(), t.mean});
    }
  } else {
    models = {"CGP", "Gompertz", "Vanilla SEIR"};
    const Dataset train_data = load(c);
    std::vector<Date> origins;
    for (const auto& o : c.list("eval_origins")) origins.push_back(parse_date(o));
    const bool default_origin = origins.empty();
    if (default_origin) {
      Date last = train_data.regions.front().policy.anchor;
      for (const auto& r : train_data.regions) {
        last = std::max(last, r.policy.anchor + (static_cast<int>(r.fatalities.size()) - 1));
      }
      origins.push_back(last);
    }
    const int samples = as_int(c, "forecast_samples");
    const ModelConfig mc = c.model_config();
    for (const Date origin : origins) {
      std::vector<RegionRecord> cut;
      for (const auto& r : train_data.regions) {
        if (auto t = truncate_region(r, origin, c.data_config().min_history_days)) {
          cut.push_back(std::move(*t));
        }
      }
      if (cut.empty()) throw DomainError("no region has enough history before " + format_date(origin));
      PosteriorModel model;
      if (default_origin && !c.get("checkpoint").empty()) {
        model = load_model(c);
      } else {
        model = train(cut, mc, c.train_options()).first;
      }
      for (const auto& r : cut) {
        const Date end = r.policy.anchor + (static_cast<int>(r.fatalities.size()) - 1);
        if (end != origin || !model.find(r.region_id)) continue;
        ScenarioSpec spec;
        spec.region_id = r.region_id;
        spec.horizon = max_h;
        entries.push_back({"CGP", r.region_id, origin,
                           forecast(model, r, spec, samples, c.seed()).mean});
        entries.push_back({"Gompertz", r.region_id, origin,
                           baseline_forecast(BaselineMethod::gompertz, r, max_h, mc).mean});
        entries.push_back({"Vanilla SEIR", r.region_id, origin,
                           baseline_forecast(BaselineMethod::vanilla_seir, r, max_h, mc).mean});
      }
    }
  }

  // Long table per region, then the Table-1 layout summed over regions.
  std::string by_region = "region_id,origin,horizon,model,error\n";
  std::vector<Date> origin_list;
  std::map<std::pair<std::string, std::pair<int, int>>, double> totals;
  std::map<std::pair<std::string, std::pair<int, int>>, bool> present;
  for (const auto& e : entries) {
    const RegionRecord* tr = truth.find(e.region_id);
    if (!tr) continue;
    const std::vector<double> t = truth_from(*tr, e.origin);
    if (std::find(origin_list.begin(), origin_list.end(), e.origin) == origin_list.end()) {
      origin_list.push_back(e.origin);
    }
    for (int h : horizons) {
      const auto hs = static_cast<std::size_t>(h);
      if (t.size() < hs + 1 || e.mean.size() < hs + 1) {
        std::cerr << "warning: " << e.region_id << " " << format_date(e.origin)
                  << ": truth or forecast does not cover " << h << " days\n";
        continue;
      }
      const double err = cumulative_error(std::span<const double>(t).subspan(1, hs),
                                          std::span<const double>(e.mean).subspan(1, hs));
      by_region += e.region_id + "," + format_date(e.origin) + "," + std::to_string(h) + "," +
                   e.model + "," + format_fixed(err, 2) + "\n";
      const auto key = std::make_pair(e.model, std::make_pair(e.origin.days, h));
      totals[key] += err;
      present[key] = true;
    }
  }
  std::sort(origin_list.begin(), origin_list.end());
  std::string table = "model";
  for (const Date o : origin_list) {
    for (int h : horizons) table += "," + format_date(o) + " " + std::to_string(h) + " days";
  }
  table += "\n";
  for (const auto& m : models) {
    table += m;
    for (const Date o : origin_list) {
      for (int h : horizons) {
        const auto key = std::make_pair(m, std::make_pair(o.days, h));
        table += "," + (present.count(key) ? format_fixed(totals[key], 2) : std::string("---"));
      }
    }
    table += "\n";
  }
  write_file((out / "error_table.csv").string(), table);
  write_file((out / "error_by_region.csv").string(), by_region);
  std::cout << table;
  return 0;
}

int cmd_serve(const RunConfig& c) {
  const Dataset ds = load(c);
  const ApiService api(load_model(c), ds);
  ServeOptions opt;
  std::tie(opt.host, opt.port) = parse_bind(c.get("bind"));
  opt.workers = as_int(c, "workers");
  opt.request_timeout_seconds = as_int(c, "request_timeout");
  HttpFrontend http(api, opt);
  std::cout << "serving checkpoint " << api.checkpoint() << " on " << c.get("bind") << std::endl;
  if (!http.listen()) throw ConfigError("cannot bind " + c.get("bind"));
  return 0;
}

int cmd_synth(const RunConfig& c) {
  const fs::path out = prepare_out(c);
  SynthConfig s;
  s.seed = c.seed();
  s.regions = as_int(c, "synth_regions");
  s.train_days = as_int(c, "synth_train_days");
  s.holdout_days = as_int(c, "synth_holdout_days");
  s.start_date = c.get("synth_start_date");
  if (s.regions < 1 || s.train_days < 5 || s.holdout_days < 0) {
    throw ConfigError("synth_regions >= 1, synth_train_days >= 5 and synth_holdout_days >= 0 required");
  }
  write_synthetic(generate_synthetic(s), out.string());
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numerical: return 4;
  }
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compartmental GP epidemic forecasting"};
  app.require_subcommand(1);
  Flags flags;
  std::map<std::string, int (*)(const RunConfig&)> handlers = {
      {"ingest", cmd_ingest},     {"train", cmd_train}, {"forecast", cmd_forecast},
      {"scenario", cmd_scenario}, {"evaluate", cmd_evaluate}, {"serve", cmd_serve},
      {"synth", cmd_synth}};
  const std::map<std::string, std::string> help = {
      {"ingest", "validate data and write the drop report"},
      {"train", "fit the model and write a checkpoint and ELBO trace"},
      {"forecast", "forecast trained regions under the recorded policy"},
      {"scenario", "counterfactual policy-shift forecast"},
      {"evaluate", "cumulative-error table against held-out truth"},
      {"serve", "run the HTTP JSON service"},
      {"synth", "generate the synthetic benchmark dataset"}};
  for (const auto& [name, _] : handlers) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", flags.config, "key=value config file");
    sub->add_option("--set", flags.sets, "override a config key (KEY=VALUE)");
    auto opt = [&](const char* flag, std::optional<std::string>& target, const char* desc) {
      sub->add_option_function<std::string>(flag, [&target](const std::string& v) { target = v; },
                                            desc);
    };
    opt("--seed", flags.seed, "random seed");
    opt("--out", flags.out, "output directory");
    opt("--region", flags.region, "region id (comma-separated list)");
    opt("--horizon", flags.horizon, "forecast horizon in days");
    opt("--shift-days", flags.shift_days, "policy shift in days (negative = earlier)");
    opt("--samples", flags.samples, "Monte Carlo samples for forecasts");
    opt("--bind", flags.bind, "HOST:PORT for serve");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error usage_error: " << msg << "\n";
    return 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const RunConfig config = effective_config(flags);
    return handlers.at(name)(config);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error " << e.code() << ": " << msg << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error io_error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error internal_error: " << e.what() << "\n";
    return 4;
  }
}

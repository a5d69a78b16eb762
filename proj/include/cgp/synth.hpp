#pragma once

// Seeded synthetic benchmark: regions with known covariate -> contact-rate
// mappings, staged lockdowns, and Poisson death counts drawn around an SEIR
// trajectory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cgp/calendar.hpp"
#include "cgp/seir.hpp"
#include "cgp/text.hpp"
#include "cgp/transforms.hpp"

namespace cgp {

struct SynthConfig {
  int regions = 12;
  int features = 4;
  int train_days = 60;
  int holdout_days = 14;
  int pre_outbreak_days = 5;
  std::uint64_t seed = 42;
  std::string start_date = "2020-03-01";
};

struct SynthRegionTruth {
  std::string region_id;
  double population = 0.0;
  std::vector<double> features;
  double beta_pre = 0.0;
  double incubation_rate = 0.2;
  double recovery_rate = 0.1;
  double mortality_rate = 0.01;
  double r0_pre = 0.0;
  int stage_day = 0;     // outbreak day of the first restriction
  int lockdown_day = 0;  // outbreak day of the full lockdown
  std::vector<std::vector<double>> policy;  // per outbreak day
  std::vector<double> contact_rate;          // per outbreak day
  std::vector<double> cumulative;            // observed counts per outbreak day
};

struct SynthData {
  SynthConfig config;
  std::vector<SynthRegionTruth> regions;
  std::string features_csv;
  std::string fatalities_csv;
  std::string fatalities_train_csv;
  std::string policies_csv;
  std::string truth_csv;
};

inline constexpr int kSynthIndicators = 3;

namespace detail {

// Ground-truth mapping from covariates and stringency (in [0, 1]) to beta.
inline double synth_beta(const std::vector<double>& x, double stringency) {
  static constexpr double kWeights[] = {0.6, -0.45, 0.3, 0.0};
  double f = std::log(0.35 / 0.65) - 2.5 * stringency;
  for (std::size_t j = 0; j < x.size() && j < 4; ++j) f += kWeights[j] * x[j];
  return sigmoid(f);
}

}  // namespace detail

inline SynthData generate_synthetic(const SynthConfig& cfg) {
  SynthData out;
  out.config = cfg;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Date start = parse_date(cfg.start_date);
  const int total = cfg.train_days + cfg.holdout_days;

  out.features_csv = "region_id,population";
  for (int j = 0; j < cfg.features; ++j) out.features_csv += ",feature_" + std::to_string(j + 1);
  out.features_csv += "\n";
  out.fatalities_csv = "region_id,date,cumulative_deaths\n";
  out.fatalities_train_csv = out.fatalities_csv;
  out.policies_csv = "region_id,date,school_closing,workplace_closing,stay_at_home\n";
  out.truth_csv = "region_id,r0,beta_pre,incubation_rate,recovery_rate,mortality_rate,lockdown_day\n";

  for (int r = 0; r < cfg.regions; ++r) {
    SynthRegionTruth t;
    char id[16];
    std::snprintf(id, sizeof id, "R%02d", r + 1);
    t.region_id = id;
    t.population = std::round(2e6 + 8e6 * unif(rng));
    for (int j = 0; j < cfg.features; ++j) t.features.push_back(normal(rng));
    t.recovery_rate = 0.1 * (1.0 + 0.05 * (2.0 * unif(rng) - 1.0));
    t.mortality_rate = 0.01 * (1.0 + 0.05 * (2.0 * unif(rng) - 1.0));
    t.lockdown_day = 18 + static_cast<int>(unif(rng) * 13.0);  // 18..30
    t.stage_day = t.lockdown_day - 4;
    const double work = 0.5 + 0.5 * unif(rng);
    const double home = 0.4 + 0.6 * unif(rng);

    for (int d = 0; d < total; ++d) {
      std::vector<double> p(kSynthIndicators, 0.0);
      if (d >= t.stage_day) p[0] = 1.0;
      if (d >= t.lockdown_day) {
        p[1] = std::round(work * 100.0) / 100.0;
        p[2] = std::round(home * 100.0) / 100.0;
      }
      const double s = (p[0] + p[1] + p[2]) / kSynthIndicators;
      t.policy.push_back(p);
      t.contact_rate.push_back(detail::synth_beta(t.features, s));
    }
    t.beta_pre = t.contact_rate.front();
    t.r0_pre = (t.incubation_rate / (t.mortality_rate + t.incubation_rate)) *
               (t.beta_pre / (t.mortality_rate + t.recovery_rate));

    SeirParams params;
    params.contact_rate = t.contact_rate;
    params.incubation_rate = t.incubation_rate;
    params.recovery_rate = t.recovery_rate;
    params.mortality_rate = t.mortality_rate;
    params.population = t.population;
    const double e0 = 110.0;
    const SeirState init{t.population - e0, e0, 0.0, 0.0, 1.0, 0};
    const SeirTrajectory traj = integrate_euler(init, params, total - 1);
    double cum = 1.0;
    t.cumulative.push_back(cum);
    for (int d = 1; d < total; ++d) {
      const double inc = std::max(0.0, traj.states[static_cast<std::size_t>(d)].deceased -
                                           traj.states[static_cast<std::size_t>(d - 1)].deceased);
      std::poisson_distribution<long long> pois(std::max(inc, 1e-12));
      cum += static_cast<double>(pois(rng));
      t.cumulative.push_back(cum);
    }

    out.features_csv += t.region_id + "," + format_exact(t.population);
    for (double v : t.features) out.features_csv += "," + format_exact(v);
    out.features_csv += "\n";
    for (int d = -cfg.pre_outbreak_days; d < total; ++d) {
      const Date date = start + (d + cfg.pre_outbreak_days);
      const double v = d < 0 ? 0.0 : t.cumulative[static_cast<std::size_t>(d)];
      const std::string line = t.region_id + "," + format_date(date) + "," +
                               std::to_string(static_cast<long long>(v)) + "\n";
      out.fatalities_csv += line;
      if (d < cfg.train_days) out.fatalities_train_csv += line;
      const auto& p = t.policy[static_cast<std::size_t>(std::max(d, 0))];
      out.policies_csv += t.region_id + "," + format_date(date);
      for (double v2 : p) out.policies_csv += "," + format_exact(v2);
      out.policies_csv += "\n";
    }
    out.truth_csv += t.region_id + "," + format_exact(t.r0_pre) + "," + format_exact(t.beta_pre) +
                     "," + format_exact(t.incubation_rate) + "," + format_exact(t.recovery_rate) +
                     "," + format_exact(t.mortality_rate) + "," +
                     std::to_string(t.lockdown_day + 1) + "\n";
    out.regions.push_back(std::move(t));
  }
  return out;
}

inline void write_synthetic(const SynthData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path p(dir);
  write_file((p / "features.csv").string(), data.features_csv);
  write_file((p / "fatalities.csv").string(), data.fatalities_csv);
  write_file((p / "fatalities_train.csv").string(), data.fatalities_train_csv);
  write_file((p / "policies.csv").string(), data.policies_csv);
  write_file((p / "truth.csv").string(), data.truth_csv);
}

}  // namespace cgp

#pragma once

// Posterior-predictive forecasting, counterfactual policy edits and the
// evaluation helpers built on a trained PosteriorModel.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <limits>
#include <span>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cgp/calendar.hpp"
#include "cgp/data.hpp"
#include "cgp/errors.hpp"
#include "cgp/gp.hpp"
#include "cgp/model.hpp"
#include "cgp/svi.hpp"
#include "cgp/text.hpp"
#include "cgp/trainer.hpp"

namespace cgp {

inline constexpr std::array<double, 5> kQuantileLevels = {0.05, 0.25, 0.5, 0.75, 0.95};

struct ForecastResult {
  std::string region_id;
  Date outbreak_date;           // calendar date of day index 0
  std::size_t first_day = 0;    // day index of mean[0]
  std::vector<double> mean;     // cumulative deaths
  std::vector<double> variance;
  std::array<std::vector<double>, 5> quantiles;  // q5, q25, q50, q75, q95
  std::vector<double> daily_mean;
  std::size_t num_samples = 0;
  std::size_t failed_samples = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return mean.size(); }
  const std::vector<double>& q5() const { return quantiles[0]; }
  const std::vector<double>& q25() const { return quantiles[1]; }
  const std::vector<double>& q50() const { return quantiles[2]; }
  const std::vector<double>& q75() const { return quantiles[3]; }
  const std::vector<double>& q95() const { return quantiles[4]; }

  friend bool operator==(const ForecastResult&, const ForecastResult&) = default;
};

struct ScenarioSpec {
  std::string region_id;
  int horizon = 14;
  // Policy for days t..t+horizon, where t is the last observed day. Empty
  // selects the recorded future policy, holding the last known vector.
  std::vector<PolicyVector> future_policy;
  std::optional<int> shift_days;
};

inline constexpr int kMaxShiftDays = 28;

// Linear-interpolation (type 7) quantile of a sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Policy vectors for days t..t+horizon: day t is the observed policy, later
// days come from the recorded future timeline, then the last vector is held.
inline std::vector<PolicyVector> default_future_policy(const RegionRecord& region,
                                                       int horizon) {
  std::vector<PolicyVector> out;
  const std::size_t t = region.fatalities.size() - 1;
  out.push_back(region.policy.days[t]);
  for (int k = 1; k <= horizon; ++k) {
    const std::size_t idx = static_cast<std::size_t>(k - 1);
    out.push_back(idx < region.future_policy.days.size() ? region.future_policy.days[idx]
                                                         : out.back());
  }
  return out;
}

namespace detail {

// Upper-layer conditional for contact-rate latents at policy vectors that the
// region never experienced during training.
struct NewInputConditional {
  std::vector<PolicyVector> vectors;
  std::vector<std::size_t> train_latent;     // flat latent index per training row
  std::vector<bool> train_is_own;
  std::vector<std::size_t> own_slot;         // position within own beta block
  Eigen::MatrixXd weights;                   // K_train^{-1} K_*  (n_train x n_new)
  Eigen::MatrixXd chol;                      // lower Cholesky of conditional cov
  double prior_mean = 0.0;
};

inline NewInputConditional build_conditional(const PosteriorModel& model,
                                             const RegionPosterior& region,
                                             const std::vector<PolicyVector>& fresh) {
  NewInputConditional c;
  c.vectors = fresh;
  const UpperOutput& out = model.config.output(Output::beta);
  c.prior_mean = out.mean;
  std::vector<std::vector<double>> rows;
  for (const auto& r : model.regions) {
    for (std::size_t j = 0; j < r.policies.size(); ++j) {
      std::vector<double> z = r.features;
      z.insert(z.end(), r.policies[j].begin(), r.policies[j].end());
      rows.push_back(std::move(z));
      c.train_latent.push_back(r.offset + 3 + j);
      c.train_is_own.push_back(r.region_id == region.region_id);
      c.own_slot.push_back(j);
    }
  }
  const auto dim = out.kernel.dimension();
  Eigen::MatrixXd zt(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index d = 0; d < dim; ++d) zt(static_cast<Eigen::Index>(i), d) = rows[i][static_cast<std::size_t>(d)];
  }
  Eigen::MatrixXd zs(static_cast<Eigen::Index>(fresh.size()), dim);
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    std::vector<double> z = region.features;
    z.insert(z.end(), fresh[i].begin(), fresh[i].end());
    if (static_cast<Eigen::Index>(z.size()) != dim) {
      throw ShapeError("scenario policy vector has the wrong number of indicators");
    }
    for (Eigen::Index d = 0; d < dim; ++d) zs(static_cast<Eigen::Index>(i), d) = z[static_cast<std::size_t>(d)];
  }
  const JitteredCholesky kt = cholesky_with_jitter(gram_matrix(out.kernel, zt), out.kernel.signal_variance);
  const Eigen::MatrixXd ks = cross_covariance(out.kernel, zt, zs);
  c.weights = kt.llt.solve(ks);
  Eigen::MatrixXd cov = gram_matrix(out.kernel, zs) - ks.transpose() * c.weights;
  cov = 0.5 * (cov + cov.transpose());
  const JitteredCholesky cc = cholesky_with_jitter(cov, out.kernel.signal_variance);
  c.chol = cc.llt.matrixL();
  return c;
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::size_t sample, int stream) {
  return mix_seed(seed ^ mix_seed(static_cast<std::uint64_t>(sample) * 4 +
                                  static_cast<std::uint64_t>(stream) + 1));
}

struct PredictiveSamples {
  std::vector<std::vector<double>> paths;  // cumulative deaths per output day
  std::size_t failed = 0;
};

// Draws posterior-predictive cumulative-death paths over output days
// [first_day, last_day] with the given policy timeline (one vector per day,
// at least last_day entries). The lower GP is conditioned on the residuals of
// the observations against the SEIR mean under the observed policy, so a
// timeline edit changes the mean but keeps the fitted residual structure.
inline PredictiveSamples sample_predictive(const PosteriorModel& model,
                                           const RegionRecord& region,
                                           const std::vector<PolicyVector>& timeline,
                                           std::size_t first_day, std::size_t last_day,
                                           int num_samples, std::uint64_t seed) {
  const RegionPosterior& rp = model.at(region.region_id);
  const ModelConfig& cfg = model.config;
  const VariationalParams& q = model.params;
  const std::size_t t_obs = region.fatalities.size();
  if (t_obs == 0) throw DomainError("region has no observations");
  if (timeline.size() < last_day) throw RangeError("scenario timeline shorter than horizon");

  // Map each day to an own latent or a fresh input.
  std::vector<PolicyVector> fresh;
  std::vector<std::size_t> latent_of_day(std::max<std::size_t>(last_day, 1));
  const std::size_t own = rp.policies.size();
  for (std::size_t d = 0; d < latent_of_day.size(); ++d) {
    const PolicyVector& p = timeline[std::min(d, timeline.size() - 1)];
    auto it = std::find(rp.policies.begin(), rp.policies.end(), p);
    if (it != rp.policies.end()) {
      latent_of_day[d] = static_cast<std::size_t>(it - rp.policies.begin());
      continue;
    }
    auto jt = std::find(fresh.begin(), fresh.end(), p);
    if (jt == fresh.end()) {
      fresh.push_back(p);
      jt = fresh.end() - 1;
    }
    latent_of_day[d] = own + static_cast<std::size_t>(jt - fresh.begin());
  }
  std::optional<NewInputConditional> cond;
  if (!fresh.empty()) cond = build_conditional(model, rp, fresh);

  // Observed-policy latents, for the residual baseline.
  const PolicyIndex observed = PolicyIndex::build(std::vector<PolicyVector>(
      region.policy.days.begin(), region.policy.days.begin() + static_cast<std::ptrdiff_t>(t_obs)));
  std::vector<std::size_t> observed_latent(std::max<std::size_t>(t_obs, 2) - 1);
  for (std::size_t d = 0; d < observed_latent.size(); ++d) {
    const auto& p = observed.distinct[observed.day_to_distinct[std::min(d, t_obs - 1)]];
    auto it = std::find(rp.policies.begin(), rp.policies.end(), p);
    if (it == rp.policies.end()) {
      throw LookupError("observed policy of '" + region.region_id +
                        "' does not match the trained model");
    }
    observed_latent[d] = static_cast<std::size_t>(it - rp.policies.begin());
  }
  bool same_history = last_day + 1 >= t_obs;
  for (std::size_t d = 0; same_history && d < observed_latent.size(); ++d) {
    same_history = d < latent_of_day.size() && latent_of_day[d] == observed_latent[d];
  }

  const auto n = static_cast<Eigen::Index>(t_obs);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    y[k] = to_observation(cfg.observation_space, region.fatalities[static_cast<std::size_t>(k)]);
  }
  const Eigen::MatrixXd obs_days = day_inputs(0, t_obs);
  const std::size_t n_out = last_day - first_day + 1;
  const Eigen::MatrixXd out_days = day_inputs(first_day, n_out);
  const SeirState init = initial_state(region, cfg);
  // Both lower variances at zero switch the residual layer off, leaving the
  // SEIR mean as the forecast.
  const bool lower_off = cfg.lower_signal_variance == 0.0 && cfg.lower_noise_variance == 0.0;

  PredictiveSamples result;
  result.paths.reserve(static_cast<std::size_t>(num_samples));
  for (int s = 0; s < num_samples; ++s) {
    const auto su = static_cast<std::size_t>(s);
    // Own latents: sigma, lengthscale, gamma, mu, beta[0..own).
    const std::vector<double> ea = standard_normal_draws(4 + own, stream_seed(seed, su, 0));
    auto draw = [&](std::size_t idx, double e) { return q.mean[idx] + q.std_at(idx) * e; };
    const double u_sigma = draw(kSigmaIndex, ea[0]);
    const double u_ell = draw(rp.offset, ea[1]);
    const double u_gamma = draw(rp.offset + 1, ea[2]);
    const double u_mu = draw(rp.offset + 2, ea[3]);
    std::vector<double> u_beta(own + fresh.size());
    for (std::size_t j = 0; j < own; ++j) u_beta[j] = draw(rp.offset + 3 + j, ea[4 + j]);
    if (cond) {
      const std::size_t nt = cond->train_latent.size();
      const std::vector<double> eb =
          standard_normal_draws(nt + fresh.size(), stream_seed(seed, su, 1));
      Eigen::VectorXd centred(static_cast<Eigen::Index>(nt));
      for (std::size_t i = 0; i < nt; ++i) {
        const double u = cond->train_is_own[i] ? u_beta[cond->own_slot[i]]
                                               : draw(cond->train_latent[i], eb[i]);
        centred[static_cast<Eigen::Index>(i)] = u - cond->prior_mean;
      }
      Eigen::VectorXd z(static_cast<Eigen::Index>(fresh.size()));
      for (std::size_t i = 0; i < fresh.size(); ++i) z[static_cast<Eigen::Index>(i)] = eb[nt + i];
      const Eigen::VectorXd u_new = (cond->weights.transpose() * centred).array() +
                                    cond->prior_mean;
      const Eigen::VectorXd dev = cond->chol * z;
      for (std::size_t i = 0; i < fresh.size(); ++i) {
        u_beta[own + i] = u_new[static_cast<Eigen::Index>(i)] + dev[static_cast<Eigen::Index>(i)];
      }
    }

    SeirParams seir;
    seir.population = region.population;
    seir.incubation_rate = constrain_rate(u_sigma);
    seir.recovery_rate = constrain_rate(u_gamma);
    seir.mortality_rate = constrain_rate(u_mu);
    const int horizon = static_cast<int>(std::max<std::size_t>(last_day, 1));
    seir.contact_rate.resize(static_cast<std::size_t>(horizon));
    for (int d = 0; d < horizon; ++d) {
      seir.contact_rate[static_cast<std::size_t>(d)] =
          contact_rate(u_beta[latent_of_day[static_cast<std::size_t>(d)]], cfg.beta_reference);
    }
    SeirTrajectory scen, base;
    try {
      scen = integrate_euler(init, seir, horizon, cfg.step_size);
      if (same_history) {
        base = scen;
      } else {
        SeirParams sb = seir;
        sb.contact_rate.resize(observed_latent.size());
        for (std::size_t d = 0; d < observed_latent.size(); ++d) {
          sb.contact_rate[d] = contact_rate(u_beta[observed_latent[d]], cfg.beta_reference);
        }
        base = integrate_euler(init, sb, static_cast<int>(observed_latent.size()), cfg.step_size);
      }
    } catch (const IntegrationError&) {
      ++result.failed;
      continue;
    }

    Eigen::VectorXd g_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_out));
    Eigen::VectorXd dev = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_out));
    if (!lower_off) {
      Eigen::VectorXd resid(n);
      for (Eigen::Index k = 0; k < n; ++k) {
        resid[k] = y[k] - to_observation(cfg.observation_space,
                                         base.states[static_cast<std::size_t>(k)].deceased);
      }
      KernelSpec lower;
      lower.family = cfg.lower_family;
      lower.lengthscale = Eigen::VectorXd::Constant(1, constrain_lengthscale(u_ell));
      lower.signal_variance = cfg.lower_signal_variance;
      Eigen::MatrixXd c = gram_matrix(lower, obs_days);
      c.diagonal().array() += cfg.lower_noise_variance;
      const JitteredCholesky cc = cholesky_with_jitter(c, cfg.lower_signal_variance);
      const Eigen::VectorXd alpha = cc.llt.solve(resid);
      const Eigen::MatrixXd kx = cross_covariance(lower, obs_days, out_days);
      g_mean = kx.transpose() * alpha;
      const Eigen::MatrixXd v = cc.llt.matrixL().solve(kx);
      Eigen::MatrixXd g_cov = gram_matrix(lower, out_days) - v.transpose() * v;
      g_cov = 0.5 * (g_cov + g_cov.transpose());
      g_cov.diagonal().array() += cfg.lower_noise_variance;
      const JitteredCholesky pc = cholesky_with_jitter(g_cov, cfg.lower_signal_variance);
      const std::vector<double> ec = standard_normal_draws(n_out, stream_seed(seed, su, 2));
      Eigen::VectorXd e(static_cast<Eigen::Index>(n_out));
      for (std::size_t k = 0; k < n_out; ++k) e[static_cast<Eigen::Index>(k)] = ec[k];
      dev = pc.llt.matrixL() * e;
    }

    std::vector<double> path(n_out);
    double running = 0.0;
    for (std::size_t k = 0; k < n_out; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      const double m = to_observation(cfg.observation_space, scen.states[first_day + k].deceased);
      const double deaths =
          std::max(0.0, from_observation(cfg.observation_space, m + g_mean[ki] + dev[ki]));
      running = k == 0 ? deaths : std::max(running, deaths);
      path[k] = running;
    }
    result.paths.push_back(std::move(path));
  }
  if (static_cast<double>(result.failed) > 0.1 * num_samples) {
    throw ForecastError(std::to_string(result.failed) + " of " + std::to_string(num_samples) +
                        " SEIR integrations failed for '" + region.region_id + "'");
  }
  return result;
}

inline ForecastResult summarize(const PredictiveSamples& samples, const RegionRecord& region,
                                std::size_t first_day, std::uint64_t seed, int requested) {
  ForecastResult r;
  r.region_id = region.region_id;
  r.outbreak_date = region.policy.anchor;
  r.first_day = first_day;
  r.seed = seed;
  r.num_samples = static_cast<std::size_t>(requested);
  r.failed_samples = samples.failed;
  const std::size_t n_out = samples.paths.empty() ? 0 : samples.paths.front().size();
  const double count = static_cast<double>(samples.paths.size());
  for (auto& q : r.quantiles) q.resize(n_out);
  r.mean.resize(n_out);
  r.variance.resize(n_out);
  std::vector<double> column(samples.paths.size());
  for (std::size_t k = 0; k < n_out; ++k) {
    double sum = 0.0;
    for (std::size_t s = 0; s < samples.paths.size(); ++s) {
      column[s] = samples.paths[s][k];
      sum += column[s];
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    r.mean[k] = mean;
    r.variance[k] = count > 1 ? ss / (count - 1.0) : 0.0;
    std::sort(column.begin(), column.end());
    for (std::size_t qi = 0; qi < kQuantileLevels.size(); ++qi) {
      r.quantiles[qi][k] = sorted_quantile(column, kQuantileLevels[qi]);
    }
  }
  r.daily_mean.resize(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    double prev = 0.0;
    if (k > 0) {
      prev = r.mean[k - 1];
    } else if (first_day > 0 && first_day - 1 < region.fatalities.size()) {
      prev = region.fatalities[first_day - 1];
    }
    r.daily_mean[k] = r.mean[k] - prev;
  }
  return r;
}

inline std::vector<PolicyVector> observed_plus_future(const RegionRecord& region,
                                                      const std::vector<PolicyVector>& future) {
  const std::size_t t = region.fatalities.size() - 1;
  std::vector<PolicyVector> timeline(region.policy.days.begin(),
                                     region.policy.days.begin() + static_cast<std::ptrdiff_t>(t));
  timeline.insert(timeline.end(), future.begin(), future.end());
  return timeline;
}

inline std::vector<PolicyVector> resolve_future(const RegionRecord& region,
                                                const ScenarioSpec& scenario) {
  if (scenario.horizon < 0) throw DomainError("horizon must be non-negative");
  if (scenario.future_policy.empty()) return default_future_policy(region, scenario.horizon);
  if (scenario.future_policy.size() != static_cast<std::size_t>(scenario.horizon) + 1) {
    throw ShapeError("future policy must have horizon + 1 = " +
                     std::to_string(scenario.horizon + 1) + " entries, got " +
                     std::to_string(scenario.future_policy.size()));
  }
  for (const auto& p : scenario.future_policy) {
    if (p.size() != region.policy.indicators()) {
      throw ShapeError("future policy vector has the wrong number of indicators");
    }
    for (double v : p) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("policy levels must lie in [0, 1]");
    }
  }
  return scenario.future_policy;
}

}  // namespace detail

inline const RegionRecord& find_region(const Dataset& data, const std::string& id) {
  const RegionRecord* r = data.find(id);
  if (!r) throw LookupError("region '" + id + "' not found in dataset");
  return *r;
}

inline constexpr int kMinForecastSamples = 100;

// Forecast over days t..t+horizon under the scenario's future policy.
inline ForecastResult forecast(const PosteriorModel& model, const RegionRecord& region,
                               const ScenarioSpec& scenario, int num_samples,
                               std::uint64_t seed) {
  if (num_samples < kMinForecastSamples) {
    throw DomainError("forecast needs at least " + std::to_string(kMinForecastSamples) +
                      " samples");
  }
  model.at(region.region_id);
  const std::vector<PolicyVector> future = detail::resolve_future(region, scenario);
  const std::vector<PolicyVector> timeline = detail::observed_plus_future(region, future);
  const std::size_t t = region.fatalities.size() - 1;
  const std::size_t last = t + static_cast<std::size_t>(scenario.horizon);
  const auto samples =
      detail::sample_predictive(model, region, timeline, t, last, num_samples, seed);
  return detail::summarize(samples, region, t, seed, num_samples);
}

struct ShiftedTimeline {
  std::vector<PolicyVector> days;
  std::vector<std::string> warnings;
};

// Moves every policy change in the observed part of the timeline by
// shift_days (negative = earlier). Days whose source would fall before day 0
// take the day-0 policy; sources past the end take the last entry.
inline ShiftedTimeline shift_timeline(const std::vector<PolicyVector>& full,
                                      std::size_t observed_days, int shift_days) {
  if (std::abs(shift_days) > kMaxShiftDays) {
    throw DomainError("|shift_days| must not exceed " + std::to_string(kMaxShiftDays));
  }
  ShiftedTimeline out;
  out.days = full;
  const auto last = static_cast<long>(full.size()) - 1;
  for (std::size_t d = 0; d < observed_days && d < full.size(); ++d) {
    const long src = std::clamp(static_cast<long>(d) - shift_days, 0L, last);
    out.days[d] = full[static_cast<std::size_t>(src)];
  }
  for (std::size_t c = 1; c < observed_days && c < full.size(); ++c) {
    if (full[c] != full[c - 1] && static_cast<long>(c) + shift_days < 0) {
      out.warnings.push_back("policy change on day " + std::to_string(c + 1) +
                             " clamped to day 1");
    }
  }
  return out;
}

struct CounterfactualResult {
  ForecastResult baseline;
  ForecastResult shifted;
  double cumulative_difference = 0.0;  // shifted - baseline, final day
  std::vector<std::string> warnings;
};

// Re-runs the predictive over the whole history plus horizon with every
// observed policy change moved by shift_days. The model is not retrained.
inline CounterfactualResult counterfactual_shift(const PosteriorModel& model,
                                                 const RegionRecord& region, int shift_days,
                                                 int horizon, int num_samples,
                                                 std::uint64_t seed,
                                                 std::vector<PolicyVector> future = {}) {
  if (num_samples < kMinForecastSamples) {
    throw DomainError("forecast needs at least " + std::to_string(kMinForecastSamples) +
                      " samples");
  }
  model.at(region.region_id);
  ScenarioSpec spec;
  spec.horizon = horizon;
  spec.future_policy = std::move(future);
  future = detail::resolve_future(region, spec);
  const std::vector<PolicyVector> full = detail::observed_plus_future(region, future);
  const std::size_t t = region.fatalities.size() - 1;
  const std::size_t last = t + static_cast<std::size_t>(horizon);
  ShiftedTimeline shifted = shift_timeline(full, t + 1, shift_days);
  CounterfactualResult out;
  out.warnings = shifted.warnings;
  out.baseline = detail::summarize(
      detail::sample_predictive(model, region, full, 0, last, num_samples, seed), region, 0,
      seed, num_samples);
  out.shifted = detail::summarize(
      detail::sample_predictive(model, region, shifted.days, 0, last, num_samples, seed),
      region, 0, seed, num_samples);
  out.cumulative_difference = out.shifted.mean.back() - out.baseline.mean.back();
  return out;
}

// sum_k (truth_k - predicted_k); positive means the forecast under-predicted.
inline double cumulative_error(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("truth has " + std::to_string(truth.size()) + " days, forecast has " +
                     std::to_string(predicted.size()));
  }
  double e = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) e += truth[k] - predicted[k];
  return e;
}

// Error over days t+1..t+horizon, where t is the forecast's first day and
// truth is the full cumulative series indexed by outbreak day.
inline double cumulative_error(std::span<const double> truth, const ForecastResult& f,
                               int horizon) {
  if (horizon < 1 || f.mean.size() < static_cast<std::size_t>(horizon) + 1) {
    throw ShapeError("forecast does not cover a horizon of " + std::to_string(horizon));
  }
  const std::size_t start = f.first_day + 1;
  if (truth.size() < start + static_cast<std::size_t>(horizon)) {
    throw ShapeError("truth does not cover the forecast horizon");
  }
  return cumulative_error(truth.subspan(start, static_cast<std::size_t>(horizon)),
                          std::span<const double>(f.mean).subspan(1, static_cast<std::size_t>(horizon)));
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LinearFit ols_fit(const std::vector<std::pair<double, double>>& points) {
  std::set<double> xs;
  for (const auto& p : points) xs.insert(p.first);
  if (xs.size() < 2) throw InsufficientVariationError("regression needs two distinct x values");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : points) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

struct StringencyRegression {
  LinearFit fit;
  std::vector<std::pair<double, double>> points;  // (stringency, posterior-mean R0)
};

// Posterior-mean reproduction number per observed day (Monte Carlo over the
// variational posterior).
inline std::vector<double> posterior_r0(const PosteriorModel& model, const RegionRecord& region,
                                        int num_samples = 1000, std::uint64_t seed = 0) {
  const RegionPosterior& rp = model.at(region.region_id);
  const VariationalParams& q = model.params;
  const std::size_t own = rp.policies.size();
  std::vector<double> per_policy(own, 0.0);
  for (int s = 0; s < num_samples; ++s) {
    const auto e = standard_normal_draws(4 + own, detail::stream_seed(seed, static_cast<std::size_t>(s), 3));
    auto draw = [&](std::size_t idx, double eps) { return q.mean[idx] + q.std_at(idx) * eps; };
    const double sigma = constrain_rate(draw(kSigmaIndex, e[0]));
    const double gamma = constrain_rate(draw(rp.offset + 1, e[2]));
    const double mu = constrain_rate(draw(rp.offset + 2, e[3]));
    for (std::size_t j = 0; j < own; ++j) {
      const double beta = contact_rate(draw(rp.offset + 3 + j, e[4 + j]), model.config.beta_reference);
      per_policy[j] += (sigma / (mu + sigma)) * (beta / (mu + gamma));
    }
  }
  for (double& v : per_policy) v /= static_cast<double>(num_samples);
  std::vector<double> out;
  for (std::size_t d = 0; d < region.fatalities.size(); ++d) {
    auto it = std::find(rp.policies.begin(), rp.policies.end(), region.policy.days[d]);
    if (it == rp.policies.end()) throw LookupError("observed policy not in trained model");
    out.push_back(per_policy[static_cast<std::size_t>(it - rp.policies.begin())]);
  }
  return out;
}

inline StringencyRegression stringency_regression(const PosteriorModel& model,
                                                  const RegionRecord& region,
                                                  int num_samples = 1000,
                                                  std::uint64_t seed = 0) {
  StringencyRegression out;
  const std::vector<double> r0 = posterior_r0(model, region, num_samples, seed);
  std::set<double> distinct;
  for (std::size_t d = 0; d < r0.size(); ++d) {
    const double s = stringency_on_day(region.policy, d);
    distinct.insert(s);
    out.points.emplace_back(s, r0[d]);
  }
  if (distinct.size() < 3) {
    throw InsufficientVariationError("region '" + region.region_id + "' has only " +
                                     std::to_string(distinct.size()) +
                                     " distinct stringency values");
  }
  out.fit = ols_fit(out.points);
  return out;
}

struct AggregateForecast {
  std::string region_id;
  Date start;
  std::vector<double> mean;
  std::vector<double> variance;
};

// National forecast as the calendar-aligned sum of child forecasts; child
// errors are treated as independent.
inline AggregateForecast aggregate_forecasts(const std::vector<ForecastResult>& children,
                                             const std::string& national_id) {
  if (children.empty()) throw AlignmentError("no child forecasts to aggregate");
  auto start_of = [](const ForecastResult& f) {
    return f.outbreak_date + static_cast<int>(f.first_day);
  };
  AggregateForecast out;
  out.region_id = national_id;
  out.start = start_of(children.front());
  const std::size_t n = children.front().mean.size();
  out.mean.assign(n, 0.0);
  out.variance.assign(n, 0.0);
  for (const auto& c : children) {
    if (start_of(c) != out.start || c.mean.size() != n) {
      throw AlignmentError("child forecast '" + c.region_id + "' is on a different calendar");
    }
    for (std::size_t k = 0; k < n; ++k) {
      out.mean[k] += c.mean[k];
      out.variance[k] += c.variance.empty() ? 0.0 : c.variance[k];
    }
  }
  return out;
}

// CSV: day,date,mean,q5,q25,q50,q75,q95,daily_mean (day is 1-based).
inline std::string forecast_csv(const ForecastResult& f) {
  std::string out = "day,date,mean,q5,q25,q50,q75,q95,daily_mean\n";
  for (std::size_t k = 0; k < f.mean.size(); ++k) {
    const std::size_t day = f.first_day + k;
    out += std::to_string(day + 1) + "," + format_date(f.outbreak_date + static_cast<int>(day));
    out += "," + format_fixed(f.mean[k], 4);
    for (const auto& q : f.quantiles) out += "," + format_fixed(q[k], 4);
    out += "," + format_fixed(f.daily_mean[k], 4) + "\n";
  }
  return out;
}

struct ForecastTable {
  std::vector<Date> dates;
  std::vector<double> mean;
};

inline ForecastTable parse_forecast_csv(const std::string& text, const std::string& where) {
  ForecastTable t;
  const auto lines = split_lines(text);
  if (lines.empty() || split(lines.front(), ',').size() < 3) {
    throw ParseError(where + ": missing forecast header");
  }
  const auto header = split(lines.front(), ',');
  if (header[0] != "day" || header[1] != "date" || header[2] != "mean") {
    throw ParseError(where + ": forecast header must start with day,date,mean");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto f = split(lines[i], ',');
    if (f.size() < 3) throw ParseError(where + ":" + std::to_string(i + 1) + ": too few columns");
    Date d;
    if (!try_parse_date(f[1], d)) throw ParseError(where + ":" + std::to_string(i + 1) + ":2: bad date");
    t.dates.push_back(d);
    t.mean.push_back(parse_double(f[2], where + ":" + std::to_string(i + 1) + ":3"));
  }
  return t;
}

}  // namespace cgp

#pragma once

// The two-layer compartmental GP.
//
// Upper layer: independent GPs over (features, policy) emit the unconstrained
// latents of every region: the lower-layer lengthscale, one contact-rate
// latent per distinct policy vector the region experienced, and the rates
// sigma (shared by all regions), gamma and mu.
//
// Lower layer: per region, observed cumulative deaths (optionally log1p'd)
// are a GP draw around the SEIR death compartment, with a Matern kernel over
// the day index.
//
// Latents are mapped to SEIR parameters by
//   beta(t) = 2 beta_ref sigmoid(u_beta(t))
//   x       = floor_x + softplus(u_x)       for x in {l_L, sigma, gamma, mu}.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cgp/data.hpp"
#include "cgp/errors.hpp"
#include "cgp/gp.hpp"
#include "cgp/kernel.hpp"
#include "cgp/seir.hpp"
#include "cgp/transforms.hpp"

namespace cgp {

enum class ObservationSpace { raw_cumulative, log1p_cumulative };

inline const char* to_string(ObservationSpace s) {
  return s == ObservationSpace::raw_cumulative ? "raw_cumulative"
                                               : "log1p_cumulative";
}

inline ObservationSpace parse_observation_space(const std::string& s) {
  if (s == "raw_cumulative") return ObservationSpace::raw_cumulative;
  if (s == "log1p_cumulative") return ObservationSpace::log1p_cumulative;
  throw ConfigError("unknown observation_space '" + s + "'");
}

inline double to_observation(ObservationSpace s, double deaths) {
  return s == ObservationSpace::log1p_cumulative ? std::log1p(deaths) : deaths;
}

inline double from_observation(ObservationSpace s, double y) {
  return s == ObservationSpace::log1p_cumulative ? std::expm1(y) : y;
}

inline double observation_slope(ObservationSpace s, double deaths) {
  return s == ObservationSpace::log1p_cumulative ? 1.0 / (1.0 + deaths) : 1.0;
}

// Upper-layer outputs, in the order used by every flattened layout.
enum class Output { lengthscale = 0, beta = 1, sigma = 2, gamma = 3, mu = 4 };
inline constexpr std::array<const char*, 5> kOutputNames = {
    "lengthscale", "beta", "sigma", "gamma", "mu"};
inline constexpr std::size_t kNumOutputs = 5;

inline constexpr double kLengthscaleFloor = 0.5;  // days
inline constexpr double kRateFloor = 1e-6;        // 1/day

struct UpperOutput {
  double mean = 0.0;  // constant prior mean m_alpha
  KernelSpec kernel;
};

struct ModelConfig {
  double beta_reference = 0.5;
  ObservationSpace observation_space = ObservationSpace::log1p_cumulative;
  MaternFamily upper_family = MaternFamily::three_half;
  MaternFamily lower_family = MaternFamily::three_half;
  std::array<UpperOutput, kNumOutputs> upper;
  double lower_signal_variance = 0.1;
  double lower_noise_variance = 0.01;
  double step_size = kDefaultStepSize;
  double initial_exposed = 0.0;  // <= 0 selects the data-driven seed

  // Initial values on the constrained scale.
  double init_r0 = 2.5;
  double init_sigma = 0.2;
  double init_gamma = 0.1;
  double init_mu = 0.01;
  double init_lengthscale = 14.0;
  double init_log_std = -2.0;

  std::size_t feature_dim = 0;
  std::size_t indicator_dim = 0;

  UpperOutput& output(Output o) { return upper[static_cast<std::size_t>(o)]; }
  const UpperOutput& output(Output o) const {
    return upper[static_cast<std::size_t>(o)];
  }

  // Contact rate that gives init_r0 under the initial sigma, gamma, mu.
  double init_beta() const {
    return init_r0 * (init_mu + init_sigma) * (init_mu + init_gamma) / init_sigma;
  }

  // Unconstrained values matching the init_* fields.
  double init_unconstrained(Output o) const {
    switch (o) {
      case Output::lengthscale: return softplus_inverse(init_lengthscale - kLengthscaleFloor);
      case Output::beta: return logit(init_beta() / (2.0 * beta_reference));
      case Output::sigma: return softplus_inverse(init_sigma - kRateFloor);
      case Output::gamma: return softplus_inverse(init_gamma - kRateFloor);
      case Output::mu: return softplus_inverse(init_mu - kRateFloor);
    }
    return 0.0;
  }

  // Resets every upper output to mean = init latent, unit signal variance and
  // unit lengthscales, sized for the given feature and indicator counts.
  void reset_upper(std::size_t features, std::size_t indicators) {
    feature_dim = features;
    indicator_dim = indicators;
    for (std::size_t k = 0; k < kNumOutputs; ++k) {
      const auto o = static_cast<Output>(k);
      Eigen::Index dim = static_cast<Eigen::Index>(features);
      if (o == Output::beta) dim += static_cast<Eigen::Index>(indicators);
      if (o == Output::sigma) dim = 0;
      upper[k].mean = init_unconstrained(o);
      upper[k].kernel.family = upper_family;
      upper[k].kernel.lengthscale = Eigen::VectorXd::Ones(dim);
      upper[k].kernel.signal_variance = 1.0;
      upper[k].kernel.noise_variance = 0.0;
    }
  }

  void validate() const {
    if (!(beta_reference > 0.0)) throw ConfigError("beta_reference must be > 0");
    if (!(lower_signal_variance > 0.0) || !(lower_noise_variance > 0.0)) {
      throw ConfigError("lower-layer variances must be > 0");
    }
    for (const auto& u : upper) u.kernel.validate();
  }
};

// Unconstrained upper-layer outputs for one region.
struct RegionLatents {
  double lower_lengthscale = 0.0;
  std::vector<double> beta_latent;  // per day
  double incubation_rate = 0.0;
  double recovery_rate = 0.0;
  double mortality_rate = 0.0;
};

struct TransformedLatents {
  SeirParams seir;
  KernelSpec lower_kernel;
};

inline double constrain_lengthscale(double u) { return kLengthscaleFloor + softplus(u); }
inline double constrain_rate(double u) { return kRateFloor + softplus(u); }
inline double contact_rate(double u, double beta_reference) {
  return 2.0 * beta_reference * sigmoid(u);
}

inline TransformedLatents transform_latents(const RegionLatents& latents,
                                            const ModelConfig& config,
                                            double population = 1.0e6) {
  TransformedLatents out;
  out.seir.contact_rate.reserve(latents.beta_latent.size());
  for (double u : latents.beta_latent) {
    out.seir.contact_rate.push_back(contact_rate(u, config.beta_reference));
  }
  out.seir.incubation_rate = constrain_rate(latents.incubation_rate);
  out.seir.recovery_rate = constrain_rate(latents.recovery_rate);
  out.seir.mortality_rate = constrain_rate(latents.mortality_rate);
  out.seir.population = population;
  out.lower_kernel.family = config.lower_family;
  out.lower_kernel.lengthscale =
      Eigen::VectorXd::Constant(1, constrain_lengthscale(latents.lower_lengthscale));
  out.lower_kernel.signal_variance = config.lower_signal_variance;
  out.lower_kernel.noise_variance = config.lower_noise_variance;
  return out;
}

// Distinct policy vectors of a timeline, in order of first appearance, and the
// index of each day's vector.
struct PolicyIndex {
  std::vector<PolicyVector> distinct;
  std::vector<std::size_t> day_to_distinct;

  static PolicyIndex build(const std::vector<PolicyVector>& days) {
    PolicyIndex idx;
    std::map<PolicyVector, std::size_t> seen;
    for (const auto& p : days) {
      auto [it, inserted] = seen.emplace(p, idx.distinct.size());
      if (inserted) idx.distinct.push_back(p);
      idx.day_to_distinct.push_back(it->second);
    }
    return idx;
  }

  // Upper-layer inputs (features ++ policy) for each distinct vector.
  Eigen::MatrixXd inputs(const std::vector<double>& features) const {
    const std::size_t k = distinct.empty() ? 0 : distinct.front().size();
    Eigen::MatrixXd z(static_cast<Eigen::Index>(distinct.size()),
                      static_cast<Eigen::Index>(features.size() + k));
    for (std::size_t j = 0; j < distinct.size(); ++j) {
      for (std::size_t c = 0; c < features.size(); ++c) {
        z(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = features[c];
      }
      for (std::size_t c = 0; c < k; ++c) {
        z(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(features.size() + c)) =
            distinct[j][c];
      }
    }
    return z;
  }
};

inline Eigen::MatrixXd feature_row(const std::vector<double>& features) {
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(features.size()));
  for (std::size_t c = 0; c < features.size(); ++c) {
    x(0, static_cast<Eigen::Index>(c)) = features[c];
  }
  return x;
}

// Exposed count on the first outbreak day. When not configured it is ten
// times the first-day deaths divided by the fatality fraction mu / (mu + gamma)
// implied by the initial rates, floored at 1.
inline double initial_exposed(const RegionRecord& region, const ModelConfig& config) {
  if (config.initial_exposed > 0.0) return config.initial_exposed;
  const double first = region.fatalities.empty() ? 0.0 : region.fatalities.front();
  const double fraction = config.init_mu / (config.init_mu + config.init_gamma);
  return std::max(1.0, 10.0 * first / fraction);
}

inline SeirState initial_state(const RegionRecord& region, const ModelConfig& config) {
  SeirState s;
  const double e0 = std::min(initial_exposed(region, config), region.population);
  s.susceptible = region.population - e0;
  s.exposed = e0;
  s.infectious = 0.0;
  s.recovered = 0.0;
  s.deceased = region.fatalities.empty() ? 0.0 : region.fatalities.front();
  s.day = 0;
  return s;
}

inline Eigen::MatrixXd day_inputs(std::size_t first, std::size_t count) {
  Eigen::MatrixXd t(static_cast<Eigen::Index>(count), 1);
  for (std::size_t k = 0; k < count; ++k) {
    t(static_cast<Eigen::Index>(k), 0) = static_cast<double>(first + k);
  }
  return t;
}

struct LowerLayerPrior {
  Eigen::VectorXd mean;  // observation space, one per observed day
  KernelSpec kernel;     // over the scalar day index
  SeirTrajectory trajectory;
};

// Prior mean of the lower GP over days 0..days-1: the SEIR death compartment
// under the transformed latents, mapped into the observation space.
inline LowerLayerPrior lower_layer_prior(const RegionRecord& region,
                                         const RegionLatents& latents,
                                         const ModelConfig& config,
                                         std::size_t days = 0) {
  if (days == 0) days = region.fatalities.size();
  if (latents.beta_latent.size() + 1 < days) {
    throw RangeError("contact-rate latents do not cover the observed days");
  }
  TransformedLatents tl = transform_latents(latents, config, region.population);
  const int horizon = static_cast<int>(std::max<std::size_t>(days, 2) - 1);
  if (tl.seir.contact_rate.size() < static_cast<std::size_t>(horizon)) {
    tl.seir.contact_rate.resize(static_cast<std::size_t>(horizon),
                                tl.seir.contact_rate.empty()
                                    ? contact_rate(0.0, config.beta_reference)
                                    : tl.seir.contact_rate.back());
  }
  LowerLayerPrior out;
  out.trajectory = integrate_euler(initial_state(region, config), tl.seir, horizon,
                                   config.step_size);
  out.mean.resize(static_cast<Eigen::Index>(days));
  for (std::size_t k = 0; k < days; ++k) {
    out.mean[static_cast<Eigen::Index>(k)] = to_observation(
        config.observation_space, out.trajectory.states[k].deceased);
  }
  out.kernel = tl.lower_kernel;
  return out;
}

// ---------------------------------------------------------------------------
// Flattened hyperparameter layout (alpha plus lower-layer variances):
//   for each output: [mean, log signal variance, log lengthscale...]
//   then [log lower signal variance, log lower noise variance].

struct HyperLayout {
  std::array<std::size_t, kNumOutputs> offset{};
  std::array<std::size_t, kNumOutputs> dim{};
  std::size_t lower_offset = 0;
  std::size_t size = 0;

  explicit HyperLayout(const ModelConfig& c) {
    std::size_t o = 0;
    for (std::size_t k = 0; k < kNumOutputs; ++k) {
      offset[k] = o;
      dim[k] = static_cast<std::size_t>(c.upper[k].kernel.dimension());
      o += 2 + dim[k];
    }
    lower_offset = o;
    size = o + 2;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n(size);
    for (std::size_t k = 0; k < kNumOutputs; ++k) {
      const std::string base = std::string("upper/") + kOutputNames[k];
      n[offset[k]] = base + "/mean";
      n[offset[k] + 1] = base + "/log_signal_variance";
      for (std::size_t d = 0; d < dim[k]; ++d) {
        n[offset[k] + 2 + d] = base + "/log_lengthscale[" + std::to_string(d) + "]";
      }
    }
    n[lower_offset] = "lower/log_signal_variance";
    n[lower_offset + 1] = "lower/log_noise_variance";
    return n;
  }
};

inline std::vector<double> pack_hyper(const ModelConfig& c) {
  const HyperLayout layout(c);
  std::vector<double> v(layout.size);
  for (std::size_t k = 0; k < kNumOutputs; ++k) {
    v[layout.offset[k]] = c.upper[k].mean;
    v[layout.offset[k] + 1] = std::log(c.upper[k].kernel.signal_variance);
    for (std::size_t d = 0; d < layout.dim[k]; ++d) {
      v[layout.offset[k] + 2 + d] =
          std::log(c.upper[k].kernel.lengthscale[static_cast<Eigen::Index>(d)]);
    }
  }
  v[layout.lower_offset] = std::log(c.lower_signal_variance);
  v[layout.lower_offset + 1] = std::log(c.lower_noise_variance);
  return v;
}

inline void unpack_hyper(std::span<const double> v, ModelConfig& c) {
  const HyperLayout layout(c);
  if (v.size() != layout.size) throw ShapeError("hyperparameter vector has wrong size");
  for (std::size_t k = 0; k < kNumOutputs; ++k) {
    c.upper[k].mean = v[layout.offset[k]];
    c.upper[k].kernel.signal_variance = std::exp(v[layout.offset[k] + 1]);
    for (std::size_t d = 0; d < layout.dim[k]; ++d) {
      c.upper[k].kernel.lengthscale[static_cast<Eigen::Index>(d)] =
          std::exp(v[layout.offset[k] + 2 + d]);
    }
  }
  c.lower_signal_variance = std::exp(v[layout.lower_offset]);
  c.lower_noise_variance = std::exp(v[layout.lower_offset + 1]);
}

// ---------------------------------------------------------------------------
// Per-region density on the compact latent block.

// Unconstrained latents of one region with one contact-rate latent per
// distinct policy vector.
struct CompactLatents {
  double sigma = 0.0;
  double lengthscale = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  std::vector<double> beta;  // per distinct policy vector
};

struct CompactGradient {
  double sigma = 0.0;
  double lengthscale = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  std::vector<double> beta;
  std::vector<double> hyper;  // HyperLayout order
};

struct DensityParts {
  double data = 0.0;
  double prior = 0.0;
  std::size_t clamp_events = 0;
  double total() const { return data + prior; }
};

namespace detail {

// log N(u | m 1, K(z) + jitter), accumulating d/du and the hyper gradient.
inline double upper_prior_term(const ModelConfig& config, Output o,
                               const Eigen::MatrixXd& z, const Eigen::VectorXd& u,
                               Eigen::VectorXd* d_u, std::vector<double>* d_hyper,
                               const HyperLayout& layout) {
  const UpperOutput& out = config.output(o);
  const Eigen::MatrixXd k = gram_matrix(out.kernel, z);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(u.size(), out.mean);
  const bool want = d_hyper != nullptr;
  const GaussianLogDensity g =
      gaussian_log_density(u, mean, k, out.kernel.signal_variance, want);
  if (d_u) *d_u = -g.d_mean;
  if (want) {
    const std::size_t ko = static_cast<std::size_t>(o);
    const std::size_t off = layout.offset[ko];
    (*d_hyper)[off] += g.d_mean.sum();
    const Eigen::VectorXd c = gram_log_hyper_contraction(out.kernel, z, g.d_cov);
    const std::size_t dim = layout.dim[ko];
    (*d_hyper)[off + 1] += c[static_cast<Eigen::Index>(dim)];
    for (std::size_t d = 0; d < dim; ++d) (*d_hyper)[off + 2 + d] += c[static_cast<Eigen::Index>(d)];
  }
  return g.value;
}

}  // namespace detail

// Which upper-layer terms region_log_density adds. A multi-region objective
// uses `none` and evaluates the joint upper prior across regions itself.
enum class PriorScope { none, region, region_with_sigma };

// log P(Y | theta) + log P(theta | X, P, alpha) for one region, with the
// exact gradient when grad is non-null.
inline DensityParts region_log_density(const RegionRecord& region,
                                       const PolicyIndex& policy,
                                       const CompactLatents& u,
                                       const ModelConfig& config,
                                       PriorScope scope,
                                       CompactGradient* grad) {
  const std::size_t t_obs = region.fatalities.size();
  if (t_obs == 0) throw DomainError("region '" + region.region_id + "' has no observations");
  if (policy.day_to_distinct.size() < t_obs) {
    throw RangeError("policy index shorter than observed days");
  }
  if (u.beta.size() != policy.distinct.size()) {
    throw ShapeError("contact-rate latents do not match distinct policies");
  }
  const HyperLayout layout(config);
  if (grad) {
    grad->sigma = grad->lengthscale = grad->gamma = grad->mu = 0.0;
    grad->beta.assign(u.beta.size(), 0.0);
    grad->hyper.assign(layout.size, 0.0);
  }
  DensityParts parts;

  // Lower layer: SEIR mean + Matern kernel over days.
  SeirParams seir;
  seir.population = region.population;
  seir.incubation_rate = constrain_rate(u.sigma);
  seir.recovery_rate = constrain_rate(u.gamma);
  seir.mortality_rate = constrain_rate(u.mu);
  const int horizon = static_cast<int>(std::max<std::size_t>(t_obs, 2) - 1);
  seir.contact_rate.resize(static_cast<std::size_t>(horizon));
  for (int d = 0; d < horizon; ++d) {
    const std::size_t day = std::min<std::size_t>(static_cast<std::size_t>(d), t_obs - 1);
    seir.contact_rate[static_cast<std::size_t>(d)] =
        contact_rate(u.beta[policy.day_to_distinct[day]], config.beta_reference);
  }
  const EulerTape tape(initial_state(region, config), seir, horizon, config.step_size);
  parts.clamp_events = tape.trajectory().clamp_events;

  const auto n = static_cast<Eigen::Index>(t_obs);
  Eigen::VectorXd y(n), mean(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    y[k] = to_observation(config.observation_space, region.fatalities[static_cast<std::size_t>(k)]);
    mean[k] = to_observation(config.observation_space,
                             tape.trajectory().states[static_cast<std::size_t>(k)].deceased);
  }
  KernelSpec lower;
  lower.family = config.lower_family;
  const double ell = constrain_lengthscale(u.lengthscale);
  lower.lengthscale = Eigen::VectorXd::Constant(1, ell);
  lower.signal_variance = config.lower_signal_variance;
  const Eigen::MatrixXd days = day_inputs(0, t_obs);
  Eigen::MatrixXd cov = gram_matrix(lower, days);
  cov.diagonal().array() += config.lower_noise_variance;
  const GaussianLogDensity lik =
      gaussian_log_density(y, mean, cov, config.lower_signal_variance, grad != nullptr);
  parts.data = lik.value;

  if (grad) {
    std::vector<double> d_deceased(static_cast<std::size_t>(horizon) + 1, 0.0);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double dk = tape.trajectory().states[static_cast<std::size_t>(k)].deceased;
      d_deceased[static_cast<std::size_t>(k)] =
          lik.d_mean[k] * observation_slope(config.observation_space, dk);
    }
    const SeirGradient sg = tape.backprop(d_deceased);
    for (int d = 0; d < horizon; ++d) {
      const std::size_t day = std::min<std::size_t>(static_cast<std::size_t>(d), t_obs - 1);
      const std::size_t j = policy.day_to_distinct[day];
      const double s = sigmoid(u.beta[j]);
      grad->beta[j] += sg.contact_rate[static_cast<std::size_t>(d)] *
                       2.0 * config.beta_reference * s * (1.0 - s);
    }
    grad->sigma += sg.incubation_rate * softplus_grad(u.sigma);
    grad->gamma += sg.recovery_rate * softplus_grad(u.gamma);
    grad->mu += sg.mortality_rate * softplus_grad(u.mu);

    const Eigen::VectorXd c = gram_log_hyper_contraction(lower, days, lik.d_cov);
    // c[0] = d/dlog(ell), c[1] = d/dlog(signal variance)
    grad->lengthscale += c[0] / ell * softplus_grad(u.lengthscale);
    grad->hyper[layout.lower_offset] += c[1];
    grad->hyper[layout.lower_offset + 1] +=
        config.lower_noise_variance * lik.d_cov.trace();
  }

  if (scope == PriorScope::none) return parts;

  // Upper layer, evaluated at this region's inputs.
  const Eigen::MatrixXd x = feature_row(region.features);
  std::vector<double>* dh = grad ? &grad->hyper : nullptr;
  auto scalar_term = [&](Output o, double value, double* d_value) {
    Eigen::VectorXd uv = Eigen::VectorXd::Constant(1, value);
    Eigen::VectorXd du;
    const Eigen::MatrixXd z = o == Output::sigma ? Eigen::MatrixXd(1, 0) : x;
    const double v = detail::upper_prior_term(config, o, z, uv, d_value ? &du : nullptr, dh, layout);
    if (d_value) *d_value += du[0];
    return v;
  };
  parts.prior += scalar_term(Output::lengthscale, u.lengthscale, grad ? &grad->lengthscale : nullptr);
  parts.prior += scalar_term(Output::gamma, u.gamma, grad ? &grad->gamma : nullptr);
  parts.prior += scalar_term(Output::mu, u.mu, grad ? &grad->mu : nullptr);
  if (scope == PriorScope::region_with_sigma) {
    parts.prior += scalar_term(Output::sigma, u.sigma, grad ? &grad->sigma : nullptr);
  }
  {
    const Eigen::MatrixXd z = policy.inputs(region.features);
    Eigen::VectorXd ub(static_cast<Eigen::Index>(u.beta.size()));
    for (std::size_t j = 0; j < u.beta.size(); ++j) ub[static_cast<Eigen::Index>(j)] = u.beta[j];
    Eigen::VectorXd du;
    parts.prior += detail::upper_prior_term(config, Output::beta, z, ub, grad ? &du : nullptr, dh, layout);
    if (grad) {
      for (std::size_t j = 0; j < u.beta.size(); ++j) grad->beta[j] += du[static_cast<Eigen::Index>(j)];
    }
  }
  return parts;
}

// Collapses per-day contact-rate latents onto distinct policy vectors. Days
// that share a policy vector must share a latent value.
inline CompactLatents compact_latents(const RegionLatents& latents,
                                      const PolicyIndex& policy, std::size_t days) {
  CompactLatents c;
  c.sigma = latents.incubation_rate;
  c.lengthscale = latents.lower_lengthscale;
  c.gamma = latents.recovery_rate;
  c.mu = latents.mortality_rate;
  c.beta.assign(policy.distinct.size(), 0.0);
  std::vector<bool> set(policy.distinct.size(), false);
  if (latents.beta_latent.size() < days) {
    throw RangeError("contact-rate latents do not cover the observed days");
  }
  for (std::size_t d = 0; d < days; ++d) {
    const std::size_t j = policy.day_to_distinct[d];
    if (!set[j]) {
      c.beta[j] = latents.beta_latent[d];
      set[j] = true;
    } else if (c.beta[j] != latents.beta_latent[d]) {
      throw DomainError("days " + std::to_string(d) +
                        " shares a policy vector with an earlier day but has a "
                        "different contact-rate latent");
    }
  }
  return c;
}

// Joint log density of one region's observations and latents.
inline double joint_log_density(const RegionRecord& region,
                                const RegionLatents& latents,
                                const ModelConfig& config) {
  if (region.fatalities.empty()) {
    throw DomainError("joint_log_density needs at least one observation");
  }
  const std::size_t days = region.fatalities.size();
  std::vector<PolicyVector> obs(region.policy.days.begin(),
                                region.policy.days.begin() + static_cast<std::ptrdiff_t>(days));
  const PolicyIndex policy = PolicyIndex::build(obs);
  const CompactLatents c = compact_latents(latents, policy, days);
  return region_log_density(region, policy, c, config, PriorScope::region_with_sigma, nullptr)
      .total();
}

}  // namespace cgp

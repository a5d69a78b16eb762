#pragma once

// Binds the compartmental GP to the generic SVI loop and defines the trained
// model artifact and its checkpoint format.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cgp/data.hpp"
#include "cgp/errors.hpp"
#include "cgp/model.hpp"
#include "cgp/svi.hpp"
#include "cgp/text.hpp"

namespace cgp {

// Position of one region's latents in the flat vector:
//   [offset] lengthscale, [offset+1] gamma, [offset+2] mu,
//   [offset+3 ...] contact-rate latent per distinct policy vector.
// Index 0 of the flat vector is the shared sigma latent.
struct RegionBlock {
  std::size_t offset = 0;
  PolicyIndex policy;
};

inline constexpr std::size_t kSigmaIndex = 0;

class CgpObjective {
 public:
  CgpObjective(std::vector<RegionRecord> regions, ModelConfig config)
      : regions_(std::move(regions)), config_(std::move(config)), layout_(config_) {
    std::size_t offset = 1;
    for (const auto& r : regions_) {
      if (r.fatalities.empty()) {
        throw DomainError("region '" + r.region_id + "' has no observations");
      }
      std::vector<PolicyVector> obs(r.policy.days.begin(),
                                    r.policy.days.begin() +
                                        static_cast<std::ptrdiff_t>(r.fatalities.size()));
      RegionBlock b;
      b.offset = offset;
      b.policy = PolicyIndex::build(obs);
      offset += 3 + b.policy.distinct.size();
      blocks_.push_back(std::move(b));
    }
    latent_dim_ = offset;
    const std::size_t d = regions_.empty() ? 0 : regions_.front().features.size();
    feature_inputs_.resize(static_cast<Eigen::Index>(regions_.size()), static_cast<Eigen::Index>(d));
    std::vector<Eigen::MatrixXd> parts;
    Eigen::Index rows = 0;
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      feature_inputs_.row(static_cast<Eigen::Index>(i)) = feature_row(regions_[i].features);
      parts.push_back(blocks_[i].policy.inputs(regions_[i].features));
      rows += parts.back().rows();
    }
    beta_inputs_.resize(rows, parts.empty() ? 0 : parts.front().cols());
    Eigen::Index r = 0;
    for (const auto& m : parts) {
      beta_inputs_.middleRows(r, m.rows()) = m;
      r += m.rows();
    }
  }

  std::size_t latent_dim() const { return latent_dim_; }
  std::size_t hyper_dim() const { return layout_.size; }
  const std::vector<RegionRecord>& regions() const { return regions_; }
  const std::vector<RegionBlock>& blocks() const { return blocks_; }
  const ModelConfig& config() const { return config_; }

  CompactLatents region_latents(std::span<const double> theta, std::size_t i) const {
    const RegionBlock& b = blocks_[i];
    CompactLatents c;
    c.sigma = theta[kSigmaIndex];
    c.lengthscale = theta[b.offset];
    c.gamma = theta[b.offset + 1];
    c.mu = theta[b.offset + 2];
    c.beta.assign(theta.begin() + static_cast<std::ptrdiff_t>(b.offset + 3),
                  theta.begin() + static_cast<std::ptrdiff_t>(b.offset + 3 +
                                                              b.policy.distinct.size()));
    return c;
  }

  LogJoint log_joint(std::span<const double> theta, std::span<const double> hyper,
                     std::span<double> g_theta, std::span<double> g_hyper) const {
    ModelConfig cfg = config_;
    unpack_hyper(hyper, cfg);
    const bool want = !g_theta.empty();
    if (want) {
      std::fill(g_theta.begin(), g_theta.end(), 0.0);
      std::fill(g_hyper.begin(), g_hyper.end(), 0.0);
    }
    LogJoint out;
    CompactGradient cg;
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      const CompactLatents c = region_latents(theta, i);
      const DensityParts parts = region_log_density(regions_[i], blocks_[i].policy, c, cfg,
                                                    PriorScope::none, want ? &cg : nullptr);
      out.value += parts.total();
      out.clamp_events += parts.clamp_events;
      if (want) {
        const std::size_t o = blocks_[i].offset;
        g_theta[kSigmaIndex] += cg.sigma;
        g_theta[o] += cg.lengthscale;
        g_theta[o + 1] += cg.gamma;
        g_theta[o + 2] += cg.mu;
        for (std::size_t j = 0; j < cg.beta.size(); ++j) g_theta[o + 3 + j] += cg.beta[j];
        for (std::size_t j = 0; j < cg.hyper.size(); ++j) g_hyper[j] += cg.hyper[j];
      }
    }
    // Upper layer: one GP per output over all regions' inputs.
    std::vector<double> dh(want ? layout_.size : 0, 0.0);
    auto joint_term = [&](Output o, const Eigen::MatrixXd& z,
                          const std::vector<std::size_t>& index) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(index.size()));
      for (std::size_t j = 0; j < index.size(); ++j) u[static_cast<Eigen::Index>(j)] = theta[index[j]];
      Eigen::VectorXd du;
      out.value += detail::upper_prior_term(cfg, o, z, u, want ? &du : nullptr,
                                            want ? &dh : nullptr, layout_);
      if (want) {
        for (std::size_t j = 0; j < index.size(); ++j) g_theta[index[j]] += du[static_cast<Eigen::Index>(j)];
      }
    };
    joint_term(Output::sigma, Eigen::MatrixXd(1, 0), {kSigmaIndex});
    for (std::size_t k = 0; k < 3; ++k) {
      static constexpr Output kScalar[] = {Output::lengthscale, Output::gamma, Output::mu};
      std::vector<std::size_t> index;
      for (const auto& b : blocks_) index.push_back(b.offset + k);
      joint_term(kScalar[k], feature_inputs_, index);
    }
    {
      std::vector<std::size_t> index;
      for (const auto& b : blocks_) {
        for (std::size_t j = 0; j < b.policy.distinct.size(); ++j) index.push_back(b.offset + 3 + j);
      }
      joint_term(Output::beta, beta_inputs_, index);
    }
    if (want) {
      for (std::size_t j = 0; j < dh.size(); ++j) g_hyper[j] += dh[j];
    }
    return out;
  }

  std::vector<std::string> latent_names() const {
    std::vector<std::string> n(latent_dim_);
    n[kSigmaIndex] = "sigma";
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      const std::string& id = regions_[i].region_id;
      const std::size_t o = blocks_[i].offset;
      n[o] = id + "/lengthscale";
      n[o + 1] = id + "/gamma";
      n[o + 2] = id + "/mu";
      for (std::size_t j = 0; j < blocks_[i].policy.distinct.size(); ++j) {
        n[o + 3 + j] = id + "/beta[" + std::to_string(j) + "]";
      }
    }
    return n;
  }

  VariationalParams initial_params() const {
    VariationalParams p;
    p.mean.assign(latent_dim_, 0.0);
    p.log_std.assign(latent_dim_, config_.init_log_std);
    p.mean[kSigmaIndex] = config_.init_unconstrained(Output::sigma);
    for (const auto& b : blocks_) {
      p.mean[b.offset] = config_.init_unconstrained(Output::lengthscale);
      p.mean[b.offset + 1] = config_.init_unconstrained(Output::gamma);
      p.mean[b.offset + 2] = config_.init_unconstrained(Output::mu);
      for (std::size_t j = 0; j < b.policy.distinct.size(); ++j) {
        p.mean[b.offset + 3 + j] = config_.init_unconstrained(Output::beta);
      }
    }
    p.hyper = pack_hyper(config_);
    p.latent_names = latent_names();
    p.hyper_names = layout_.names();
    return p;
  }

 private:
  std::vector<RegionRecord> regions_;
  ModelConfig config_;
  HyperLayout layout_;
  std::vector<RegionBlock> blocks_;
  std::size_t latent_dim_ = 0;
  Eigen::MatrixXd feature_inputs_;  // one row per region
  Eigen::MatrixXd beta_inputs_;     // one row per (region, distinct policy)
};

struct RegionPosterior {
  std::string region_id;
  std::vector<double> features;
  std::vector<PolicyVector> policies;  // distinct vectors seen in training
  std::size_t offset = 0;
  std::size_t observed_days = 0;
  double population = 1.0e6;

  friend bool operator==(const RegionPosterior&, const RegionPosterior&) = default;
};

struct PosteriorModel {
  ModelConfig config;  // alpha holds the trained hyperparameters
  VariationalParams params;
  std::vector<RegionPosterior> regions;

  const RegionPosterior* find(const std::string& id) const {
    for (const auto& r : regions) {
      if (r.region_id == id) return &r;
    }
    return nullptr;
  }

  const RegionPosterior& at(const std::string& id) const {
    const RegionPosterior* r = find(id);
    if (!r) throw LookupError("region '" + id + "' is not part of the trained model");
    return *r;
  }
};

// Makes the upper-layer shapes match the data when they do not already.
inline ModelConfig fit_config_to_data(ModelConfig config, const std::vector<RegionRecord>& data) {
  const std::size_t d = data.empty() ? config.feature_dim : data.front().features.size();
  const std::size_t k = data.empty() ? config.indicator_dim : data.front().policy.indicators();
  const bool shaped =
      config.feature_dim == d && config.indicator_dim == k &&
      config.output(Output::beta).kernel.dimension() == static_cast<Eigen::Index>(d + k) &&
      config.output(Output::gamma).kernel.dimension() == static_cast<Eigen::Index>(d);
  if (!shaped) config.reset_upper(d, k);
  return config;
}

inline PosteriorModel make_posterior(const CgpObjective& objective,
                                     const VariationalParams& params) {
  PosteriorModel m;
  m.config = objective.config();
  unpack_hyper(params.hyper, m.config);
  m.params = params;
  for (std::size_t i = 0; i < objective.regions().size(); ++i) {
    const RegionRecord& r = objective.regions()[i];
    RegionPosterior rp;
    rp.region_id = r.region_id;
    rp.features = r.features;
    rp.policies = objective.blocks()[i].policy.distinct;
    rp.offset = objective.blocks()[i].offset;
    rp.observed_days = r.fatalities.size();
    rp.population = r.population;
    m.regions.push_back(std::move(rp));
  }
  return m;
}

inline std::pair<PosteriorModel, TrainReport> train(const std::vector<RegionRecord>& data,
                                                    ModelConfig config,
                                                    const TrainOptions& options) {
  bool enough = false;
  for (const auto& r : data) enough = enough || r.fatalities.size() >= 5;
  if (!enough) throw DomainError("training needs at least one region with >= 5 observations");
  config = fit_config_to_data(std::move(config), data);
  config.validate();
  const CgpObjective objective(data, config);
  TrainReport report = train_svi(objective, objective.initial_params(), options);
  PosteriorModel model = make_posterior(objective, report.final_params);
  return {std::move(model), std::move(report)};
}

// ---------------------------------------------------------------------------
// Checkpoint: versioned line-oriented text, doubles written round-trip exact.

inline std::string serialize_checkpoint(const PosteriorModel& m) {
  std::ostringstream out;
  const ModelConfig& c = m.config;
  out << "cgp-checkpoint 1\n";
  out << "beta_reference " << format_exact(c.beta_reference) << "\n";
  out << "observation_space " << to_string(c.observation_space) << "\n";
  out << "upper_family " << to_string(c.upper_family) << "\n";
  out << "lower_family " << to_string(c.lower_family) << "\n";
  out << "step_size " << format_exact(c.step_size) << "\n";
  out << "initial_exposed " << format_exact(c.initial_exposed) << "\n";
  out << "init_r0 " << format_exact(c.init_r0) << "\n";
  out << "init_sigma " << format_exact(c.init_sigma) << "\n";
  out << "init_gamma " << format_exact(c.init_gamma) << "\n";
  out << "init_mu " << format_exact(c.init_mu) << "\n";
  out << "init_lengthscale " << format_exact(c.init_lengthscale) << "\n";
  out << "init_log_std " << format_exact(c.init_log_std) << "\n";
  out << "feature_dim " << c.feature_dim << "\n";
  out << "indicator_dim " << c.indicator_dim << "\n";
  // The optimizer's own values, so parsing reproduces them bit for bit.
  const std::vector<double> hyper = m.params.hyper.empty() ? pack_hyper(c) : m.params.hyper;
  const auto hyper_names = HyperLayout(c).names();
  out << "hyper " << hyper.size() << "\n";
  for (std::size_t i = 0; i < hyper.size(); ++i) {
    out << hyper_names[i] << " " << format_exact(hyper[i]) << "\n";
  }
  out << "latents " << m.params.mean.size() << "\n";
  for (std::size_t i = 0; i < m.params.mean.size(); ++i) {
    out << m.params.latent_names[i] << " " << format_exact(m.params.mean[i]) << " "
        << format_exact(m.params.log_std[i]) << "\n";
  }
  out << "regions " << m.regions.size() << "\n";
  auto nums = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_exact(v[i]);
    return s.empty() ? std::string("-") : s;
  };
  for (const auto& r : m.regions) {
    out << "region " << r.region_id << " " << r.offset << " " << r.observed_days << " "
        << format_exact(r.population) << " " << r.policies.size() << "\n";
    out << "features " << nums(r.features) << "\n";
    for (const auto& p : r.policies) out << "policy " << nums(p) << "\n";
  }
  out << "end\n";
  return out.str();
}

inline std::string checkpoint_id(const PosteriorModel& m) {
  return hex64(fnv1a(serialize_checkpoint(m)));
}

inline PosteriorModel parse_checkpoint(const std::string& text) {
  const auto lines = split_lines(text);
  std::size_t i = 0;
  auto fields = [&](const std::string& key, std::size_t count) {
    if (i >= lines.size()) throw ParseError("checkpoint truncated before '" + key + "'");
    auto f = split(lines[i], ' ');
    ++i;
    if (f.empty() || f[0] != key || f.size() != count + 1) {
      throw ParseError("checkpoint line " + std::to_string(i) + ": expected '" + key + "'");
    }
    return f;
  };
  auto num = [&](const std::string& key) {
    return parse_double(fields(key, 1)[1], "checkpoint " + key);
  };
  auto nums = [&](const std::string& s) {
    std::vector<double> v;
    if (s == "-") return v;
    for (const auto& x : split(s, ',')) v.push_back(parse_double(x, "checkpoint vector"));
    return v;
  };
  if (fields("cgp-checkpoint", 1)[1] != "1") throw ParseError("unsupported checkpoint version");
  PosteriorModel m;
  ModelConfig& c = m.config;
  c.beta_reference = num("beta_reference");
  c.observation_space = parse_observation_space(fields("observation_space", 1)[1]);
  c.upper_family = parse_matern_family(fields("upper_family", 1)[1]);
  c.lower_family = parse_matern_family(fields("lower_family", 1)[1]);
  c.step_size = num("step_size");
  c.initial_exposed = num("initial_exposed");
  c.init_r0 = num("init_r0");
  c.init_sigma = num("init_sigma");
  c.init_gamma = num("init_gamma");
  c.init_mu = num("init_mu");
  c.init_lengthscale = num("init_lengthscale");
  c.init_log_std = num("init_log_std");
  const auto d = static_cast<std::size_t>(parse_integer(fields("feature_dim", 1)[1], "feature_dim"));
  const auto k = static_cast<std::size_t>(parse_integer(fields("indicator_dim", 1)[1], "indicator_dim"));
  c.reset_upper(d, k);
  const auto nh = parse_integer(fields("hyper", 1)[1], "hyper count");
  std::vector<double> hyper;
  for (long long h = 0; h < nh; ++h) {
    if (i >= lines.size()) throw ParseError("checkpoint truncated in hyper block");
    const auto f = split(lines[i++], ' ');
    if (f.size() != 2) throw ParseError("bad hyper line " + std::to_string(i));
    hyper.push_back(parse_double(f[1], "hyper value"));
    m.params.hyper_names.push_back(f[0]);
  }
  unpack_hyper(hyper, c);
  m.params.hyper = hyper;
  const auto nl = parse_integer(fields("latents", 1)[1], "latent count");
  for (long long l = 0; l < nl; ++l) {
    if (i >= lines.size()) throw ParseError("checkpoint truncated in latent block");
    const auto f = split(lines[i++], ' ');
    if (f.size() != 3) throw ParseError("bad latent line " + std::to_string(i));
    m.params.latent_names.push_back(f[0]);
    m.params.mean.push_back(parse_double(f[1], "latent mean"));
    m.params.log_std.push_back(parse_double(f[2], "latent log_std"));
  }
  const auto nr = parse_integer(fields("regions", 1)[1], "region count");
  for (long long r = 0; r < nr; ++r) {
    const auto f = fields("region", 5);
    RegionPosterior rp;
    rp.region_id = f[1];
    rp.offset = static_cast<std::size_t>(parse_integer(f[2], "region offset"));
    rp.observed_days = static_cast<std::size_t>(parse_integer(f[3], "observed days"));
    rp.population = parse_double(f[4], "population");
    const auto np = parse_integer(f[5], "policy count");
    rp.features = nums(fields("features", 1)[1]);
    for (long long p = 0; p < np; ++p) rp.policies.push_back(nums(fields("policy", 1)[1]));
    if (rp.offset + 3 + rp.policies.size() > m.params.mean.size()) {
      throw ParseError("checkpoint region '" + rp.region_id + "' exceeds latent block");
    }
    m.regions.push_back(std::move(rp));
  }
  fields("end", 0);
  return m;
}

}  // namespace cgp

#pragma once

// Stochastic variational inference with a mean-field normal family.
//
// A model exposes log p(Y, theta | hyper) and its gradient; the estimator
// averages log p(Y, theta) - log q(theta) over reparameterized draws
// theta = mean + std * eps and differentiates that same seeded estimator.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cgp/errors.hpp"

namespace cgp {

struct LogJoint {
  double value = 0.0;
  std::size_t clamp_events = 0;
};

// grad_theta / grad_hyper are overwritten when non-empty.
template <class M>
concept LogJointModel = requires(const M& m, std::span<const double> theta,
                                 std::span<const double> hyper,
                                 std::span<double> g_theta, std::span<double> g_hyper) {
  { m.latent_dim() } -> std::convertible_to<std::size_t>;
  { m.hyper_dim() } -> std::convertible_to<std::size_t>;
  { m.log_joint(theta, hyper, g_theta, g_hyper) } -> std::convertible_to<LogJoint>;
};

inline constexpr double kMinStd = 1e-6;
inline constexpr double kMaxStd = 1e3;

struct VariationalParams {
  std::vector<double> mean;
  std::vector<double> log_std;
  std::vector<double> hyper;
  std::vector<std::string> latent_names;
  std::vector<std::string> hyper_names;

  std::size_t latent_dim() const { return mean.size(); }

  static double clamp_log_std(double v) {
    return std::clamp(v, std::log(kMinStd), std::log(kMaxStd));
  }
  double std_at(std::size_t i) const { return std::exp(clamp_log_std(log_std[i])); }

  friend bool operator==(const VariationalParams&, const VariationalParams&) = default;
};

// SplitMix64 finalizer; derives independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Standard normal draws in sample-major order.
inline std::vector<double> standard_normal_draws(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> eps(count);
  for (auto& e : eps) e = normal(rng);
  return eps;
}

struct ElboEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t clamp_events = 0;
};

struct ElboGradient {
  double value = 0.0;
  std::vector<double> mean;
  std::vector<double> log_std;
  std::vector<double> hyper;
  std::size_t clamp_events = 0;
};

namespace detail {

template <LogJointModel M>
ElboGradient elbo_pass(const M& model, const VariationalParams& params,
                       int num_samples, std::uint64_t seed, bool want_gradient,
                       double* standard_error) {
  if (num_samples < 1) throw DomainError("num_samples must be >= 1");
  const std::size_t d = params.latent_dim();
  if (model.latent_dim() != d || params.log_std.size() != d) {
    throw ShapeError("variational parameters do not match the model's latents");
  }
  if (model.hyper_dim() != params.hyper.size()) {
    throw ShapeError("hyperparameters do not match the model");
  }
  const auto s = static_cast<std::size_t>(num_samples);
  const std::vector<double> eps = standard_normal_draws(s * d, seed);
  std::vector<double> sd(d), log_sd(d);
  double entropy_const = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    log_sd[i] = VariationalParams::clamp_log_std(params.log_std[i]);
    sd[i] = std::exp(log_sd[i]);
    entropy_const += log_sd[i];
  }
  entropy_const += 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);

  ElboGradient out;
  if (want_gradient) {
    out.mean.assign(d, 0.0);
    out.log_std.assign(d, 0.0);
    out.hyper.assign(params.hyper.size(), 0.0);
  }
  std::vector<double> theta(d), g_theta(want_gradient ? d : 0),
      g_hyper(want_gradient ? params.hyper.size() : 0);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < s; ++k) {
    const double* e = eps.data() + k * d;
    double half_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      theta[i] = params.mean[i] + sd[i] * e[i];
      half_sq += 0.5 * e[i] * e[i];
    }
    const LogJoint lj = model.log_joint(theta, params.hyper, g_theta, g_hyper);
    out.clamp_events += lj.clamp_events;
    // -log q(theta) = sum log sd + 0.5 |eps|^2 + (d/2) log 2 pi
    const double v = lj.value + entropy_const + half_sq;
    sum += v;
    sum_sq += v * v;
    if (want_gradient) {
      for (std::size_t i = 0; i < d; ++i) {
        out.mean[i] += g_theta[i];
        out.log_std[i] += g_theta[i] * e[i] * sd[i];
      }
      for (std::size_t j = 0; j < g_hyper.size(); ++j) out.hyper[j] += g_hyper[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(s);
  out.value = sum * inv;
  if (standard_error) {
    const double var = s > 1 ? std::max(0.0, (sum_sq - sum * sum * inv) /
                                                 static_cast<double>(s - 1))
                             : 0.0;
    *standard_error = std::sqrt(var * inv);
  }
  if (want_gradient) {
    const double lo = std::log(kMinStd), hi = std::log(kMaxStd);
    for (std::size_t i = 0; i < d; ++i) {
      out.mean[i] *= inv;
      const bool clamped = params.log_std[i] < lo || params.log_std[i] > hi;
      // The entropy contributes +1 per coordinate through sum log sd.
      out.log_std[i] = clamped ? 0.0 : out.log_std[i] * inv + 1.0;
    }
    for (auto& g : out.hyper) g *= inv;
  }
  return out;
}

}  // namespace detail

template <LogJointModel M>
ElboEstimate elbo_estimate(const M& model, const VariationalParams& params,
                           int num_samples, std::uint64_t seed) {
  ElboEstimate e;
  const ElboGradient g =
      detail::elbo_pass(model, params, num_samples, seed, false, &e.standard_error);
  e.value = g.value;
  e.clamp_events = g.clamp_events;
  return e;
}

// Pathwise gradient of the seeded estimator; exact for the realized draws.
template <LogJointModel M>
ElboGradient elbo_gradient(const M& model, const VariationalParams& params,
                           int num_samples, std::uint64_t seed) {
  ElboGradient g = detail::elbo_pass(model, params, num_samples, seed, true, nullptr);
  auto check = [&](const std::vector<double>& v, const std::vector<std::string>& names,
                   const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) {
        const std::string name = i < names.size() ? names[i] : std::to_string(i);
        throw TrainingError(std::string("non-finite ELBO gradient for ") + what +
                            " of '" + name + "'");
      }
    }
  };
  check(g.mean, params.latent_names, "mean");
  check(g.log_std, params.latent_names, "log_std");
  check(g.hyper, params.hyper_names, "hyperparameter");
  return g;
}

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// ADAM ascent on a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, AdamOptions options) : opt_(options), m_(n, 0.0), v_(n, 0.0) {}

  void ascend(std::vector<double>& x, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * grad[i];
      v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * grad[i] * grad[i];
      const double mh = m_[i] / c1;
      const double vh = v_[i] / c2;
      x[i] += opt_.learning_rate * mh / (std::sqrt(vh) + opt_.epsilon);
    }
  }

  std::size_t steps() const { return t_; }

 private:
  AdamOptions opt_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct TrainOptions {
  int iterations = 1000;
  double learning_rate = 0.01;
  int num_samples = 8;
  std::uint64_t seed = 0;
  bool learn_hyper = true;
  int max_consecutive_failures = 10;
};

struct TrainReport {
  std::vector<double> elbo;  // one entry per iteration (NaN if it failed)
  VariationalParams final_params;
  double wall_seconds = 0.0;
  std::size_t failed_iterations = 0;
  std::size_t clamp_events = 0;
  std::uint64_t seed = 0;
};

inline std::string elbo_trace_csv(const TrainReport& report) {
  std::string out = "iteration,elbo\n";
  char buf[64];
  for (std::size_t i = 0; i < report.elbo.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, report.elbo[i]);
    out += buf;
  }
  return out;
}

// Maximizes the ELBO with ADAM. Iteration k uses draws seeded from
// (seed, k), so the whole run is a pure function of its inputs.
template <LogJointModel M>
TrainReport train_svi(const M& model, VariationalParams init, const TrainOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.seed = options.seed;
  report.final_params = std::move(init);
  VariationalParams& p = report.final_params;
  const std::size_t d = p.latent_dim();
  const std::size_t h = p.hyper.size();
  AdamOptions adam_opts;
  adam_opts.learning_rate = options.learning_rate;
  Adam adam(2 * d + h, adam_opts);
  std::vector<double> x(2 * d + h), g(2 * d + h, 0.0);
  int consecutive = 0;
  std::string last_error;
  report.elbo.reserve(static_cast<std::size_t>(std::max(options.iterations, 0)));
  for (int it = 0; it < options.iterations; ++it) {
    const std::uint64_t seed =
        mix_seed(options.seed ^ mix_seed(static_cast<std::uint64_t>(it) + 1));
    ElboGradient eg;
    bool ok = true;
    try {
      eg = elbo_gradient(model, p, options.num_samples, seed);
      ok = std::isfinite(eg.value);
      if (!ok) last_error = "non-finite ELBO";
    } catch (const Error& e) {
      ok = false;
      last_error = e.what();
    }
    if (!ok) {
      report.elbo.push_back(std::numeric_limits<double>::quiet_NaN());
      ++report.failed_iterations;
      if (++consecutive >= options.max_consecutive_failures) {
        throw TrainingError("ELBO failed for " + std::to_string(consecutive) +
                            " consecutive iterations (iteration " + std::to_string(it) +
                            "): " + last_error);
      }
      continue;
    }
    consecutive = 0;
    report.elbo.push_back(eg.value);
    report.clamp_events += eg.clamp_events;
    std::copy(p.mean.begin(), p.mean.end(), x.begin());
    std::copy(p.log_std.begin(), p.log_std.end(), x.begin() + static_cast<std::ptrdiff_t>(d));
    std::copy(p.hyper.begin(), p.hyper.end(), x.begin() + static_cast<std::ptrdiff_t>(2 * d));
    std::copy(eg.mean.begin(), eg.mean.end(), g.begin());
    std::copy(eg.log_std.begin(), eg.log_std.end(), g.begin() + static_cast<std::ptrdiff_t>(d));
    if (options.learn_hyper) {
      std::copy(eg.hyper.begin(), eg.hyper.end(), g.begin() + static_cast<std::ptrdiff_t>(2 * d));
    } else {
      std::fill(g.begin() + static_cast<std::ptrdiff_t>(2 * d), g.end(), 0.0);
    }
    adam.ascend(x, g);
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d), p.mean.begin());
    for (std::size_t i = 0; i < d; ++i) p.log_std[i] = VariationalParams::clamp_log_std(x[d + i]);
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(2 * d), x.end(), p.hyper.begin());
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace cgp

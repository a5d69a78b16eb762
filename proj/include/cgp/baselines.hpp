#pragma once

// Reference forecasters: a Gompertz growth curve and a constant-rate SEIR,
// both fitted to cumulative deaths by Levenberg-Marquardt least squares.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cgp/errors.hpp"
#include "cgp/forecast.hpp"
#include "cgp/model.hpp"
#include "cgp/seir.hpp"

namespace cgp {

struct LeastSquaresResult {
  Eigen::VectorXd params;
  double cost = std::numeric_limits<double>::infinity();  // 0.5 * |r|^2
  int iterations = 0;
  bool converged = false;
};

struct LeastSquaresOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
  double cost_tolerance = 1e-15;
};

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Levenberg-Marquardt with a central-difference Jacobian. Residual functions
// may throw; such trial points are rejected like a cost increase.
inline LeastSquaresResult levenberg_marquardt(const ResidualFunction& residual,
                                              Eigen::VectorXd x,
                                              const LeastSquaresOptions& opt = {}) {
  LeastSquaresResult out;
  auto safe_eval = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    try {
      r = residual(p);
      return r.allFinite();
    } catch (const Error&) {
      return false;
    }
  };
  Eigen::VectorXd r;
  if (!safe_eval(x, r)) return out;
  double cost = 0.5 * r.squaredNorm();
  const double scale = std::max(cost, 1.0);
  double lambda = 1e-3;
  const auto n = x.size();
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    if (cost <= opt.cost_tolerance * scale) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd jac(r.size(), n);
    bool ok = true;
    for (Eigen::Index j = 0; j < n && ok; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x, rp, rm;
      xp[j] += h;
      xm[j] -= h;
      ok = safe_eval(xp, rp) && safe_eval(xm, rm);
      if (ok) jac.col(j) = (rp - rm) / (2.0 * h);
    }
    if (!ok) break;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance * scale) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      Eigen::VectorXd trial_r;
      const Eigen::VectorXd trial = x + step;
      if (safe_eval(trial, trial_r) && 0.5 * trial_r.squaredNorm() < cost) {
        const double new_cost = 0.5 * trial_r.squaredNorm();
        const bool tiny_step = step.norm() <= opt.step_tolerance * (x.norm() + opt.step_tolerance);
        const bool tiny_gain = cost - new_cost <= 1e-14 * cost;
        x = trial;
        r = trial_r;
        cost = new_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (tiny_step || tiny_gain) out.converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // No descent direction left at machine precision: a stationary point.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }
  out.params = x;
  out.cost = cost;
  return out;
}

enum class BaselineMethod { vanilla_seir, gompertz };

inline BaselineMethod parse_baseline_method(const std::string& s) {
  if (s == "vanilla_seir") return BaselineMethod::vanilla_seir;
  if (s == "gompertz") return BaselineMethod::gompertz;
  throw ConfigError("unknown baseline method '" + s + "'");
}

struct GompertzFit {
  double a = 0.0, b = 0.0, c = 0.0;
  double cost = 0.0;
  double operator()(double t) const { return a * std::exp(-b * std::exp(-c * t)); }
};

inline constexpr int kBaselineRestarts = 5;
inline constexpr std::size_t kMinBaselineDays = 5;

// Fits y(t) = a exp(-b exp(-c t)) with t the 0-based day index. Parameters
// are optimized on log scale, so the fit stays in a, b, c > 0.
inline GompertzFit fit_gompertz(const std::vector<double>& cumulative) {
  if (cumulative.size() < kMinBaselineDays) {
    throw DomainError("baseline fit needs at least 5 observed days");
  }
  const auto n = static_cast<Eigen::Index>(cumulative.size());
  const double ymax = std::max(1.0, *std::max_element(cumulative.begin(), cumulative.end()));
  const double y0 = std::max(cumulative.front(), 1e-3 * ymax);
  auto residual = [&](const Eigen::VectorXd& p) {
    const double a = std::exp(p[0]), b = std::exp(p[1]), c = std::exp(p[2]);
    Eigen::VectorXd r(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      r[k] = a * std::exp(-b * std::exp(-c * static_cast<double>(k))) -
             cumulative[static_cast<std::size_t>(k)];
    }
    return r;
  };
  const std::array<double, kBaselineRestarts> a_mult = {1.5, 2.0, 4.0, 1.1, 10.0};
  const std::array<double, kBaselineRestarts> c_init = {0.1, 0.05, 0.03, 0.2, 0.02};
  LeastSquaresResult best;
  bool any = false;
  for (int i = 0; i < kBaselineRestarts; ++i) {
    const double a = a_mult[static_cast<std::size_t>(i)] * ymax;
    const double b = std::max(std::log(a / y0), 1e-3);
    Eigen::Vector3d x0(std::log(a), std::log(b), std::log(c_init[static_cast<std::size_t>(i)]));
    const LeastSquaresResult r = levenberg_marquardt(residual, x0);
    if (r.converged && std::isfinite(r.cost) && (!any || r.cost < best.cost)) {
      best = r;
      any = true;
    }
  }
  if (!any) throw FitError("Gompertz fit did not converge in 5 restarts");
  GompertzFit f;
  f.a = std::exp(best.params[0]);
  f.b = std::exp(best.params[1]);
  f.c = std::exp(best.params[2]);
  f.cost = best.cost;
  return f;
}

struct VanillaSeirFit {
  SeirParams params;
  SeirState initial;
  double cost = 0.0;
};

// Constant (beta, gamma, mu) SEIR fitted to cumulative deaths. The incubation
// rate and initial state follow the CGP defaults in `config`.
inline VanillaSeirFit fit_vanilla_seir(const std::vector<double>& cumulative, double population,
                                       const ModelConfig& config = {}) {
  if (cumulative.size() < kMinBaselineDays) {
    throw DomainError("baseline fit needs at least 5 observed days");
  }
  RegionRecord pseudo;
  pseudo.fatalities = cumulative;
  pseudo.population = population;
  const SeirState init = initial_state(pseudo, config);
  const int days = static_cast<int>(cumulative.size()) - 1;
  const auto n = static_cast<Eigen::Index>(cumulative.size());
  auto make = [&](const Eigen::VectorXd& p, int horizon) {
    SeirParams s;
    s.population = population;
    s.incubation_rate = config.init_sigma;
    s.contact_rate.assign(static_cast<std::size_t>(std::max(horizon, 1)), std::exp(p[0]));
    s.recovery_rate = std::exp(p[1]);
    s.mortality_rate = std::exp(p[2]);
    return s;
  };
  auto residual = [&](const Eigen::VectorXd& p) {
    const SeirTrajectory traj = integrate_euler(init, make(p, days), days, config.step_size);
    Eigen::VectorXd r(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      r[k] = traj.states[static_cast<std::size_t>(k)].deceased - cumulative[static_cast<std::size_t>(k)];
    }
    return r;
  };
  const std::array<double, kBaselineRestarts> r0_init = {2.5, 1.5, 4.0, 1.1, 6.0};
  LeastSquaresResult best;
  bool any = false;
  for (int i = 0; i < kBaselineRestarts; ++i) {
    const double gamma = config.init_gamma, mu = config.init_mu, sigma = config.init_sigma;
    const double beta = r0_init[static_cast<std::size_t>(i)] * (mu + gamma) * (mu + sigma) / sigma;
    Eigen::Vector3d x0(std::log(beta), std::log(gamma), std::log(mu));
    const LeastSquaresResult r = levenberg_marquardt(residual, x0);
    if (r.converged && std::isfinite(r.cost) && (!any || r.cost < best.cost)) {
      best = r;
      any = true;
    }
  }
  if (!any) throw FitError("vanilla SEIR fit did not converge in 5 restarts");
  VanillaSeirFit f;
  f.params = make(best.params, days);
  f.initial = init;
  f.cost = best.cost;
  return f;
}

// Mean-only forecast over days t..t+horizon; quantiles collapse to the mean.
inline ForecastResult baseline_forecast(BaselineMethod method, const RegionRecord& region,
                                        int horizon, const ModelConfig& config = {}) {
  if (horizon < 0) throw DomainError("horizon must be non-negative");
  const std::vector<double>& y = region.fatalities;
  if (y.size() < kMinBaselineDays) throw DomainError("baseline fit needs at least 5 observed days");
  const std::size_t t = y.size() - 1;
  std::vector<double> path(static_cast<std::size_t>(horizon) + 1);
  if (method == BaselineMethod::gompertz) {
    const GompertzFit g = fit_gompertz(y);
    for (std::size_t k = 0; k < path.size(); ++k) path[k] = g(static_cast<double>(t + k));
  } else {
    VanillaSeirFit v = fit_vanilla_seir(y, region.population, config);
    const int total = static_cast<int>(t) + horizon;
    v.params.contact_rate.assign(static_cast<std::size_t>(std::max(total, 1)),
                                 v.params.contact_rate.front());
    const SeirTrajectory traj = integrate_euler(v.initial, v.params, total, config.step_size);
    for (std::size_t k = 0; k < path.size(); ++k) path[k] = traj.states[t + k].deceased;
  }
  ForecastResult r;
  r.region_id = region.region_id;
  r.outbreak_date = region.policy.anchor;
  r.first_day = t;
  r.mean = path;
  r.variance.assign(path.size(), 0.0);
  for (auto& q : r.quantiles) q = path;
  r.daily_mean.resize(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double prev = k == 0 ? (t > 0 ? y[t - 1] : 0.0) : path[k - 1];
    r.daily_mean[k] = path[k] - prev;
  }
  return r;
}

}  // namespace cgp

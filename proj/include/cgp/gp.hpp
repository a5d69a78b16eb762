#pragma once

// Exact Gaussian-process conditioning on Matern kernels, plus the dense
// Gaussian log-density used by both layers of the model.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cgp/errors.hpp"
#include "cgp/kernel.hpp"

namespace cgp {

using MeanFunction = std::function<double(const Eigen::VectorXd&)>;

inline MeanFunction constant_mean(double c) {
  return [c](const Eigen::VectorXd&) { return c; };
}

inline constexpr double kBaseJitter = 1e-8;
inline constexpr double kMaxJitter = 1e-2;

struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;     // absolute amount added to the diagonal
  int escalations = 0;     // number of x10 increases beyond the base jitter
};

// Cholesky of (a + jitter I). The jitter starts at 1e-8 * scale and grows x10
// on failure up to 1e-2 * scale; a NumericalError carrying the extreme
// eigenvalues is thrown if every attempt fails.
inline JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& a,
                                             double scale) {
  JitteredCholesky out;
  const Eigen::Index n = a.rows();
  double rel = kBaseJitter;
  for (;;) {
    out.jitter = rel * scale;
    Eigen::MatrixXd m = a;
    m.diagonal().array() += out.jitter;
    out.llt.compute(m);
    if (out.llt.info() == Eigen::Success) {
      bool ok = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = out.llt.matrixLLT()(i, i);
        if (!(d > 0.0) || !std::isfinite(d)) ok = false;
      }
      if (ok) return out;
    }
    if (rel >= kMaxJitter * (1.0 - 1e-12)) break;
    rel *= 10.0;
    ++out.escalations;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << "Cholesky failed after jitter escalation to " << out.jitter
      << " (n=" << n;
  if (eig.info() == Eigen::Success && n > 0) {
    msg << ", min eigenvalue=" << eig.eigenvalues().minCoeff()
        << ", max eigenvalue=" << eig.eigenvalues().maxCoeff();
  }
  msg << ")";
  throw NumericalError(msg.str());
}

// log N(y | mean, cov) and its sensitivities.
struct GaussianLogDensity {
  double value = 0.0;
  Eigen::VectorXd d_mean;   // d value / d mean = cov^{-1} (y - mean)
  Eigen::MatrixXd d_cov;    // d value / d cov (symmetric), if requested
  double jitter = 0.0;
};

inline GaussianLogDensity gaussian_log_density(const Eigen::VectorXd& y,
                                               const Eigen::VectorXd& mean,
                                               const Eigen::MatrixXd& cov,
                                               double jitter_scale,
                                               bool want_cov_gradient) {
  const Eigen::Index n = y.size();
  if (mean.size() != n || cov.rows() != n || cov.cols() != n) {
    throw ShapeError("Gaussian log-density shape mismatch");
  }
  GaussianLogDensity out;
  const JitteredCholesky chol = cholesky_with_jitter(cov, jitter_scale);
  out.jitter = chol.jitter;
  const Eigen::VectorXd r = y - mean;
  out.d_mean = chol.llt.solve(r);
  const auto& l = chol.llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(l(i, i));
  out.value = -0.5 * r.dot(out.d_mean) - 0.5 * log_det -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (want_cov_gradient) {
    const Eigen::MatrixXd inv =
        chol.llt.solve(Eigen::MatrixXd::Identity(n, n));
    out.d_cov = 0.5 * (out.d_mean * out.d_mean.transpose() - inv);
  }
  return out;
}

struct GpPosterior {
  Eigen::MatrixXd training_inputs;   // rows are points
  Eigen::VectorXd training_targets;
  MeanFunction prior_mean;
  KernelSpec kernel;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> cholesky;  // of K + noise I + jitter
  Eigen::VectorXd weights;  // (K + noise I + jitter)^{-1} (targets - prior mean)
  double jitter = 0.0;
  int jitter_escalations = 0;

  Eigen::Index size() const { return training_inputs.rows(); }
};

inline GpPosterior gp_posterior(MeanFunction prior_mean, const KernelSpec& kernel,
                                const Eigen::MatrixXd& inputs,
                                const Eigen::VectorXd& targets) {
  kernel.validate();
  if (inputs.rows() != targets.size()) {
    throw ShapeError("GP inputs have " + std::to_string(inputs.rows()) +
                     " rows but " + std::to_string(targets.size()) + " targets");
  }
  if (inputs.cols() != kernel.dimension()) {
    throw ShapeError("GP input dimension does not match kernel");
  }
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    if (!std::isfinite(targets[i])) throw DomainError("non-finite GP target");
  }
  GpPosterior post;
  post.training_inputs = inputs;
  post.training_targets = targets;
  post.prior_mean = std::move(prior_mean);
  post.kernel = kernel;
  if (inputs.rows() == 0) return post;

  Eigen::MatrixXd k = gram_matrix(kernel, inputs);
  k.diagonal().array() += kernel.noise_variance;
  JitteredCholesky chol = cholesky_with_jitter(k, kernel.signal_variance);
  Eigen::VectorXd resid(inputs.rows());
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    resid[i] = targets[i] - post.prior_mean(inputs.row(i).transpose());
  }
  post.weights = chol.llt.solve(resid);
  post.jitter = chol.jitter;
  post.jitter_escalations = chol.escalations;
  post.cholesky = std::move(chol.llt);
  return post;
}

struct GpPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;                 // latent-function variance, >= 0
  std::optional<Eigen::MatrixXd> covariance;
};

inline GpPrediction gp_predict(const GpPosterior& post,
                               const Eigen::MatrixXd& queries,
                               bool want_covariance) {
  if (queries.cols() != post.kernel.dimension()) {
    throw ShapeError("query dimension " + std::to_string(queries.cols()) +
                     " does not match GP dimension " +
                     std::to_string(post.kernel.dimension()));
  }
  const Eigen::Index m = queries.rows();
  GpPrediction out;
  out.mean.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.mean[i] = post.prior_mean(queries.row(i).transpose());
  }
  Eigen::MatrixXd cov;
  Eigen::VectorXd var;
  if (post.size() == 0) {
    if (want_covariance) cov = gram_matrix(post.kernel, queries);
    var = Eigen::VectorXd::Constant(m, post.kernel.signal_variance);
  } else {
    const Eigen::MatrixXd ks =
        cross_covariance(post.kernel, post.training_inputs, queries);
    out.mean += ks.transpose() * post.weights;
    const Eigen::MatrixXd v = post.cholesky->matrixL().solve(ks);
    var = (Eigen::VectorXd::Constant(m, post.kernel.signal_variance) -
           v.colwise().squaredNorm().transpose());
    if (want_covariance) {
      cov = gram_matrix(post.kernel, queries) - v.transpose() * v;
    }
  }
  out.variance = var.cwiseMax(0.0);
  if (want_covariance) {
    for (Eigen::Index i = 0; i < m; ++i) cov(i, i) = out.variance[i];
    out.covariance = std::move(cov);
  }
  return out;
}

// Independent single-output GPs sharing one input matrix.
inline std::map<std::string, GpPosterior> multi_output_gp(
    const std::vector<std::string>& output_names,
    const Eigen::MatrixXd& shared_inputs,
    const std::map<std::string, Eigen::VectorXd>& per_output_targets,
    const std::map<std::string, KernelSpec>& kernels,
    const std::map<std::string, MeanFunction>& prior_means) {
  std::map<std::string, GpPosterior> out;
  for (const auto& name : output_names) {
    auto t = per_output_targets.find(name);
    if (t == per_output_targets.end()) {
      throw ShapeError("no targets supplied for output '" + name + "'");
    }
    if (t->second.size() != shared_inputs.rows()) {
      throw ShapeError("targets for output '" + name + "' have length " +
                       std::to_string(t->second.size()) + ", expected " +
                       std::to_string(shared_inputs.rows()));
    }
    auto k = kernels.find(name);
    if (k == kernels.end()) {
      throw ShapeError("no kernel supplied for output '" + name + "'");
    }
    auto mf = prior_means.find(name);
    MeanFunction mean = mf == prior_means.end() ? constant_mean(0.0) : mf->second;
    out.emplace(name, gp_posterior(mean, k->second, shared_inputs, t->second));
  }
  return out;
}

}  // namespace cgp

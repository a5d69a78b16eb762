#pragma once

// Matern covariance functions with per-dimension (ARD) lengthscales.

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "cgp/errors.hpp"

namespace cgp {

enum class MaternFamily { half, three_half, five_half };

inline const char* to_string(MaternFamily f) {
  switch (f) {
    case MaternFamily::half: return "matern_half";
    case MaternFamily::three_half: return "matern_three_half";
    case MaternFamily::five_half: return "matern_five_half";
  }
  return "matern_three_half";
}

inline MaternFamily parse_matern_family(const std::string& s) {
  if (s == "matern_half") return MaternFamily::half;
  if (s == "matern_three_half") return MaternFamily::three_half;
  if (s == "matern_five_half") return MaternFamily::five_half;
  throw ConfigError("unknown kernel family '" + s + "'");
}

struct KernelSpec {
  MaternFamily family = MaternFamily::three_half;
  Eigen::VectorXd lengthscale;  // one per input dimension
  double signal_variance = 1.0;
  double noise_variance = 0.0;

  Eigen::Index dimension() const { return lengthscale.size(); }

  void validate() const {
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
      throw DomainError("kernel signal_variance must be positive");
    }
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
      throw DomainError("kernel noise_variance must be non-negative");
    }
    for (Eigen::Index j = 0; j < lengthscale.size(); ++j) {
      if (!(lengthscale[j] > 0.0) || !std::isfinite(lengthscale[j])) {
        throw DomainError("kernel lengthscales must be positive");
      }
    }
  }
};

namespace detail {

inline double matern_scale(MaternFamily f) {
  switch (f) {
    case MaternFamily::half: return 1.0;
    case MaternFamily::three_half: return std::sqrt(3.0);
    case MaternFamily::five_half: return std::sqrt(5.0);
  }
  return std::sqrt(3.0);
}

// Correlation as a function of a = c * r, where r is the scaled distance.
inline double matern_profile(MaternFamily f, double a) {
  switch (f) {
    case MaternFamily::half: return std::exp(-a);
    case MaternFamily::three_half: return (1.0 + a) * std::exp(-a);
    case MaternFamily::five_half: return (1.0 + a + a * a / 3.0) * std::exp(-a);
  }
  return 0.0;
}

// -(d profile / da) * c / r, i.e. the factor that multiplies dx_j^2 / l_j^3
// in d k / d l_j (before the signal variance). Finite at r = 0 except for
// the exponential kernel, whose derivative there is taken as 0.
inline double matern_lengthscale_factor(MaternFamily f, double r) {
  const double c = matern_scale(f);
  const double a = c * r;
  switch (f) {
    case MaternFamily::half: return r > 0.0 ? std::exp(-a) / r : 0.0;
    case MaternFamily::three_half: return c * c * std::exp(-a);
    case MaternFamily::five_half: return c * c * std::exp(-a) * (1.0 + a) / 3.0;
  }
  return 0.0;
}

template <typename A, typename B>
double scaled_distance(const KernelSpec& spec, const A& x, const B& y) {
  double r2 = 0.0;
  for (Eigen::Index j = 0; j < spec.lengthscale.size(); ++j) {
    const double d = (x[j] - y[j]) / spec.lengthscale[j];
    r2 += d * d;
  }
  return std::sqrt(r2);
}

}  // namespace detail

template <typename A, typename B>
double kernel_eval(const KernelSpec& spec, const A& x, const B& y) {
  if (x.size() != spec.dimension() || y.size() != spec.dimension()) {
    throw ShapeError("kernel input dimension " + std::to_string(x.size()) +
                     "/" + std::to_string(y.size()) + " does not match " +
                     std::to_string(spec.dimension()) + " lengthscales");
  }
  const double r = detail::scaled_distance(spec, x, y);
  return spec.signal_variance *
         detail::matern_profile(spec.family, detail::matern_scale(spec.family) * r);
}

// Cross-covariance between the rows of a and the rows of b (noise excluded).
inline Eigen::MatrixXd cross_covariance(const KernelSpec& spec,
                                        const Eigen::MatrixXd& a,
                                        const Eigen::MatrixXd& b) {
  if (a.cols() != spec.dimension() || b.cols() != spec.dimension()) {
    throw ShapeError("input columns do not match kernel dimension");
  }
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      k(i, j) = kernel_eval(spec, a.row(i), b.row(j));
    }
  }
  return k;
}

// Symmetric Gram matrix over the rows of x (noise excluded).
inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec,
                                   const Eigen::MatrixXd& x) {
  if (x.cols() != spec.dimension()) {
    throw ShapeError("input columns do not match kernel dimension");
  }
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = spec.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = kernel_eval(spec, x.row(i), x.row(j));
    }
  }
  return k;
}

// Contracts a weight matrix W (same shape as the Gram matrix) against the
// Gram derivatives: returns sum_ij W_ij dK_ij/dlog(l_d) for every d, and
// sum_ij W_ij dK_ij/dlog(s2) in the last slot.
inline Eigen::VectorXd gram_log_hyper_contraction(const KernelSpec& spec,
                                                  const Eigen::MatrixXd& x,
                                                  const Eigen::MatrixXd& w) {
  const Eigen::Index dim = spec.dimension();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim + 1);
  const double c = detail::matern_scale(spec.family);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      const double r = detail::scaled_distance(spec, x.row(i), x.row(j));
      const double k = spec.signal_variance * detail::matern_profile(spec.family, c * r);
      out[dim] += wij * k;
      if (i == j) continue;
      const double factor =
          spec.signal_variance * detail::matern_lengthscale_factor(spec.family, r);
      for (Eigen::Index d = 0; d < dim; ++d) {
        const double diff = x(i, d) - x(j, d);
        const double l = spec.lengthscale[d];
        // l * dk/dl = factor * diff^2 / l^2
        out[d] += wij * factor * diff * diff / (l * l);
      }
    }
  }
  return out;
}

}  // namespace cgp

#pragma once

#include <cmath>

namespace cgp {

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  // log(1 + e^x) without overflow for large x.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// d softplus / dx
inline double softplus_grad(double x) { return sigmoid(x); }

inline double softplus_inverse(double y) {
  // log(e^y - 1), stable for both tiny and large y.
  return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace cgp

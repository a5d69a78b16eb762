#pragma once

// Deterministic SEIR model with vital dynamics and a cumulative death
// compartment, integrated with forward Euler on a daily-varying contact rate.
//
//   dS/dt = mu (n - S) - beta S I / n
//   dE/dt = beta S I / n - (mu + sigma) E
//   dI/dt = sigma E - (gamma + mu) I
//   dR/dt = gamma I - mu R
//   dD/dt = mu I
//
// Day indices are 0-based: day 0 is the first outbreak day and
// contact_rate[d] drives the flow from day d to day d + 1.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cgp/errors.hpp"

namespace cgp {

struct SeirParams {
  std::vector<double> contact_rate;  // beta(t), 1/day
  double incubation_rate = 0.2;      // sigma, 1/day
  double recovery_rate = 0.1;        // gamma, 1/day
  double mortality_rate = 0.01;      // mu, 1/day
  double population = 1.0e6;         // n, persons

  // Throws DomainError when a rate is non-positive or non-finite, or when a
  // contact rate falls outside (0, max_contact_rate].
  void validate(double max_contact_rate =
                    std::numeric_limits<double>::infinity()) const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(incubation_rate) || !positive(recovery_rate) ||
        !positive(mortality_rate) || !positive(population)) {
      throw DomainError("SEIR rates and population must be positive and finite");
    }
    for (std::size_t d = 0; d < contact_rate.size(); ++d) {
      const double b = contact_rate[d];
      if (!positive(b) || b > max_contact_rate) {
        throw DomainError("contact rate on day " + std::to_string(d) +
                          " outside (0, " + std::to_string(max_contact_rate) +
                          "]");
      }
    }
  }
};

struct SeirState {
  double susceptible = 0.0;
  double exposed = 0.0;
  double infectious = 0.0;
  double recovered = 0.0;
  double deceased = 0.0;
  int day = 0;
};

struct SeirDerivative {
  double susceptible = 0.0;
  double exposed = 0.0;
  double infectious = 0.0;
  double recovered = 0.0;
  double deceased = 0.0;
};

struct SeirTrajectory {
  std::vector<SeirState> states;  // one per integer day, states[0] = initial
  double step_size = 0.25;
  std::size_t clamp_events = 0;

  std::vector<double> deceased() const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.deceased);
    return out;
  }
};

inline constexpr double kDefaultStepSize = 0.25;

namespace detail {

inline bool finite_state(const SeirState& s) {
  return std::isfinite(s.susceptible) && std::isfinite(s.exposed) &&
         std::isfinite(s.infectious) && std::isfinite(s.recovered) &&
         std::isfinite(s.deceased);
}

inline double contact_rate_at(const SeirParams& params, int day) {
  if (day < 0 || static_cast<std::size_t>(day) >= params.contact_rate.size()) {
    throw RangeError("day " + std::to_string(day) +
                     " outside contact-rate series of length " +
                     std::to_string(params.contact_rate.size()));
  }
  return params.contact_rate[static_cast<std::size_t>(day)];
}

inline SeirDerivative derivatives(const SeirState& x, double beta, double sigma,
                                  double gamma, double mu, double n) {
  const double infection = beta * x.susceptible * x.infectious / n;
  return {mu * (n - x.susceptible) - infection,
          infection - (mu + sigma) * x.exposed,
          sigma * x.exposed - (gamma + mu) * x.infectious,
          gamma * x.infectious - mu * x.recovered, mu * x.infectious};
}

// Number of Euler sub-steps per day. The step is shrunk so that integer days
// fall on step boundaries.
inline int substeps_per_day(double step_size) {
  if (!(step_size > 0.0) || step_size > 1.0) {
    throw DomainError("step_size must lie in (0, 1]");
  }
  return static_cast<int>(std::ceil(1.0 / step_size - 1e-9));
}

}  // namespace detail

inline SeirDerivative seir_derivatives(const SeirState& state,
                                       const SeirParams& params, int day) {
  const double beta = detail::contact_rate_at(params, day);
  if (!detail::finite_state(state)) {
    throw DomainError("non-finite SEIR state on day " + std::to_string(day));
  }
  return detail::derivatives(state, beta, params.incubation_rate,
                             params.recovery_rate, params.mortality_rate,
                             params.population);
}

inline double reproduction_number(const SeirParams& params, int day) {
  const double beta = detail::contact_rate_at(params, day);
  const double sigma = params.incubation_rate;
  const double mu = params.mortality_rate;
  const double gamma = params.recovery_rate;
  return (sigma / (mu + sigma)) * (beta / (mu + gamma));
}

// Sensitivity of an objective that depends on D at integer days, obtained by
// the discrete adjoint of the Euler recursion actually taken (clamps
// included).
struct SeirGradient {
  std::vector<double> contact_rate;  // d/d beta(day)
  double incubation_rate = 0.0;
  double recovery_rate = 0.0;
  double mortality_rate = 0.0;
};

// Forward Euler solve that keeps every sub-step so that the adjoint can be
// replayed. Use integrate_euler() when no gradient is needed.
class EulerTape {
 public:
  EulerTape(const SeirState& initial, const SeirParams& params,
            int horizon_days, double step_size = kDefaultStepSize)
      : params_(params),
        substeps_(detail::substeps_per_day(step_size)),
        h_(1.0 / substeps_) {
    if (horizon_days < 1) throw DomainError("horizon_days must be >= 1");
    if (params.contact_rate.size() < static_cast<std::size_t>(horizon_days)) {
      throw RangeError("contact-rate series shorter than horizon");
    }
    if (!detail::finite_state(initial)) {
      throw DomainError("non-finite initial SEIR state");
    }
    const double n = params.population;
    const double sigma = params.incubation_rate;
    const double gamma = params.recovery_rate;
    const double mu = params.mortality_rate;
    const std::size_t total = static_cast<std::size_t>(horizon_days) * substeps_;
    steps_.reserve(total + 1);
    clamped_.reserve(total);
    trajectory_.step_size = h_;
    trajectory_.states.reserve(static_cast<std::size_t>(horizon_days) + 1);

    SeirState x = initial;
    x.day = initial.day;
    steps_.push_back(x);
    trajectory_.states.push_back(x);
    const double limit = 10.0 * n;
    for (int d = 0; d < horizon_days; ++d) {
      const double beta = params.contact_rate[static_cast<std::size_t>(d)];
      for (int s = 0; s < substeps_; ++s) {
        const SeirDerivative f = detail::derivatives(x, beta, sigma, gamma, mu, n);
        SeirState y{x.susceptible + h_ * f.susceptible,
                    x.exposed + h_ * f.exposed,
                    x.infectious + h_ * f.infectious,
                    x.recovered + h_ * f.recovered,
                    x.deceased + h_ * f.deceased, x.day};
        unsigned mask = 0;
        double* comp[5] = {&y.susceptible, &y.exposed, &y.infectious,
                           &y.recovered, &y.deceased};
        for (unsigned c = 0; c < 5; ++c) {
          if (*comp[c] < 0.0) {
            *comp[c] = 0.0;
            mask |= 1u << c;
            ++trajectory_.clamp_events;
          }
        }
        if (!detail::finite_state(y) || y.susceptible > limit ||
            y.exposed > limit || y.infectious > limit || y.recovered > limit ||
            y.deceased > limit) {
          throw IntegrationError(initial.day + d + 1,
                                 "SEIR integration diverged on day " +
                                     std::to_string(initial.day + d + 1));
        }
        clamped_.push_back(mask);
        x = y;
        steps_.push_back(x);
      }
      x.day = initial.day + d + 1;
      steps_.back().day = x.day;
      trajectory_.states.push_back(x);
    }
  }

  const SeirTrajectory& trajectory() const { return trajectory_; }

  // d_deceased[k] is dL/dD at trajectory day k (k = 0..horizon).
  SeirGradient backprop(std::span<const double> d_deceased) const {
    const std::size_t days = trajectory_.states.size();
    if (d_deceased.size() != days) {
      throw ShapeError("adjoint seed length does not match trajectory");
    }
    const double n = params_.population;
    const double sigma = params_.incubation_rate;
    const double gamma = params_.recovery_rate;
    const double mu = params_.mortality_rate;

    SeirGradient g;
    g.contact_rate.assign(days - 1, 0.0);
    // Adjoint of (S, E, I, R, D).
    double lam[5] = {0, 0, 0, 0, d_deceased[days - 1]};
    const std::size_t total = steps_.size() - 1;
    for (std::size_t j = total; j-- > 0;) {
      const unsigned mask = clamped_[j];
      for (unsigned c = 0; c < 5; ++c) {
        if (mask & (1u << c)) lam[c] = 0.0;
      }
      const SeirState& x = steps_[j];
      const std::size_t day = j / static_cast<std::size_t>(substeps_);
      const double beta = params_.contact_rate[day];
      const double S = x.susceptible, E = x.exposed, I = x.infectious,
                   R = x.recovered;
      const double lS = lam[0], lE = lam[1], lI = lam[2], lR = lam[3],
                   lD = lam[4];

      const double si_n = S * I / n;
      g.contact_rate[day] += h_ * si_n * (lE - lS);
      g.incubation_rate += h_ * E * (lI - lE);
      g.recovery_rate += h_ * I * (lR - lI);
      g.mortality_rate +=
          h_ * ((n - S) * lS - E * lE - I * lI - R * lR + I * lD);

      // lambda_j = (I + h J^T) lambda_{j+1}
      lam[0] = lS + h_ * ((-mu - beta * I / n) * lS + (beta * I / n) * lE);
      lam[1] = lE + h_ * (-(mu + sigma) * lE + sigma * lI);
      lam[2] = lI + h_ * ((-beta * S / n) * lS + (beta * S / n) * lE -
                          (gamma + mu) * lI + gamma * lR + mu * lD);
      lam[3] = lR + h_ * (-mu * lR);
      lam[4] = lD;
      if (j % static_cast<std::size_t>(substeps_) == 0) {
        lam[4] += d_deceased[j / static_cast<std::size_t>(substeps_)];
      }
    }
    return g;
  }

 private:
  SeirParams params_;
  int substeps_;
  double h_;
  std::vector<SeirState> steps_;
  std::vector<unsigned> clamped_;
  SeirTrajectory trajectory_;
};

// Forward-Euler trajectory sampled at integer days. Negative compartments are
// clamped to zero and counted in clamp_events.
inline SeirTrajectory integrate_euler(const SeirState& initial,
                                      const SeirParams& params,
                                      int horizon_days,
                                      double step_size = kDefaultStepSize) {
  EulerTape tape(initial, params, horizon_days, step_size);
  return tape.trajectory();
}

}  // namespace cgp

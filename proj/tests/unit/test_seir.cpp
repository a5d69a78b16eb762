#include <gtest/gtest.h>

#include <random>

#include "cgp/seir.hpp"
#include "support/oracles.hpp"

using namespace cgp;

namespace {

SeirParams params(double beta, int days, double n = 1e6) {
  SeirParams p;
  p.contact_rate.assign(static_cast<std::size_t>(days), beta);
  p.population = n;
  return p;
}

SeirState seed_state(double n) { return {n - 100.0, 100.0, 0.0, 0.0, 0.0, 0}; }

}  // namespace

// Forward Euler is first order: against the fine RK4 oracle the error in D
// halves with the step, and at step 0.01 it is within 1%.
TEST(Seir, EulerConvergesToRk4AtFirstOrder) {
  const SeirParams p = params(0.35, 100);
  const auto ref = oracle::rk4_deceased({p.population - 100.0, 100.0, 0, 0, 1.0}, p.contact_rate,
                                        {0.2, 0.1, 0.01, p.population}, 100, 0.001);
  auto max_rel = [&](double h) {
    const SeirState x0{p.population - 100.0, 100.0, 0.0, 0.0, 1.0, 0};
    const auto d = integrate_euler(x0, p, 100, h).deceased();
    double worst = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(d[k] / ref[k] - 1.0));
    return worst;
  };
  const double e1 = max_rel(0.1), e2 = max_rel(0.05), e3 = max_rel(0.01);
  EXPECT_NEAR(e1 / e2, 2.0, 0.1);
  EXPECT_NEAR(e2 / e3, 5.0, 0.25);
  EXPECT_LT(e3, 1e-2);
}

TEST(Seir, DerivativesSumToVitalDynamics) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double n = 1e5 + 1e7 * u(rng);
    SeirParams p = params(0.05 + u(rng), 1, n);
    p.incubation_rate = 0.05 + u(rng);
    p.recovery_rate = 0.05 + u(rng);
    p.mortality_rate = 0.001 + 0.1 * u(rng);
    const SeirState x{n * u(rng), n * 0.1 * u(rng), n * 0.1 * u(rng), n * 0.1 * u(rng), 0.0, 0};
    const SeirDerivative f = seir_derivatives(x, p, 0);
    const double sum = f.susceptible + f.exposed + f.infectious + f.recovered + f.deceased;
    const double expect = p.mortality_rate * (n - x.susceptible - x.exposed - x.recovered);
    EXPECT_NEAR(sum, expect, 1e-9 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Seir, DeceasedIsMonotoneAndCompartmentsNonNegative) {
  const SeirParams p = params(0.6, 120);
  const auto traj = integrate_euler(seed_state(p.population), p, 120);
  ASSERT_EQ(traj.states.size(), 121u);
  for (std::size_t d = 1; d < traj.states.size(); ++d) {
    const auto& s = traj.states[d];
    EXPECT_GE(s.deceased, traj.states[d - 1].deceased);
    EXPECT_GE(s.susceptible, 0.0);
    EXPECT_GE(s.exposed, 0.0);
    EXPECT_GE(s.infectious, 0.0);
    EXPECT_GE(s.recovered, 0.0);
    EXPECT_EQ(s.day, static_cast<int>(d));
  }
}

TEST(Seir, ZeroInfectionStaysAtRest) {
  const SeirParams p = params(0.5, 30);
  const auto traj = integrate_euler({p.population, 0, 0, 0, 0, 0}, p, 30);
  for (const auto& s : traj.states) {
    EXPECT_DOUBLE_EQ(s.deceased, 0.0);
    EXPECT_DOUBLE_EQ(s.susceptible, p.population);
  }
}

TEST(Seir, ReproductionNumberClosedForm) {
  SeirParams p = params(0.3, 1);
  EXPECT_NEAR(reproduction_number(p, 0), (0.2 / 0.21) * (0.3 / 0.11), 1e-15);
}

TEST(Seir, RejectsBadInputs) {
  SeirParams p = params(0.3, 10);
  EXPECT_THROW(integrate_euler(seed_state(p.population), p, 11), RangeError);
  EXPECT_THROW(integrate_euler(seed_state(p.population), p, 5, 0.0), DomainError);
  p.recovery_rate = -1.0;
  EXPECT_THROW(p.validate(), DomainError);
  SeirState bad = seed_state(1e6);
  bad.exposed = std::nan("");
  EXPECT_THROW(seir_derivatives(bad, params(0.3, 1), 0), DomainError);
}

TEST(Seir, DivergenceRaisesIntegrationError) {
  SeirParams p = params(1e9, 10);
  p.population = 1e3;
  try {
    integrate_euler({900, 100, 10, 0, 0, 0}, p, 10, 1.0);
    FAIL() << "expected IntegrationError";
  } catch (const IntegrationError& e) {
    EXPECT_GE(e.day(), 1);
  }
}

TEST(Seir, AdjointMatchesFiniteDifferences) {
  SeirParams p;
  for (int d = 0; d < 40; ++d) p.contact_rate.push_back(d < 20 ? 0.45 : 0.15);
  p.population = 2e6;
  const SeirState x0 = seed_state(p.population);
  std::vector<double> w(41);
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = 1.0 / (1.0 + static_cast<double>(k));
  auto objective = [&](const SeirParams& q) {
    const auto d = integrate_euler(x0, q, 40).deceased();
    double s = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) s += w[k] * d[k];
    return s;
  };
  const EulerTape tape(x0, p, 40);
  const SeirGradient g = tape.backprop(w);
  auto fd = [&](auto mutate) {
    const double h = 1e-6;
    SeirParams a = p, b = p;
    mutate(a, h);
    mutate(b, -h);
    return (objective(a) - objective(b)) / (2 * h);
  };
  for (int d : {0, 5, 19, 20, 39}) {
    const double num = fd([d](SeirParams& q, double h) { q.contact_rate[static_cast<std::size_t>(d)] += h; });
    EXPECT_NEAR(g.contact_rate[static_cast<std::size_t>(d)], num, 1e-5 * std::max(1.0, std::abs(num)))
        << "beta day " << d;
  }
  const double ns = fd([](SeirParams& q, double h) { q.incubation_rate += h; });
  const double ng = fd([](SeirParams& q, double h) { q.recovery_rate += h; });
  const double nm = fd([](SeirParams& q, double h) { q.mortality_rate += h; });
  EXPECT_NEAR(g.incubation_rate, ns, 1e-5 * std::max(1.0, std::abs(ns)));
  EXPECT_NEAR(g.recovery_rate, ng, 1e-5 * std::max(1.0, std::abs(ng)));
  EXPECT_NEAR(g.mortality_rate, nm, 1e-5 * std::max(1.0, std::abs(nm)));
}

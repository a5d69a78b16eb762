#include <gtest/gtest.h>

#include "cgp/svi.hpp"
#include "support/oracles.hpp"

using namespace cgp;

namespace {

VariationalParams exact_posterior(const oracle::NormalNormal& m) {
  VariationalParams p;
  for (std::size_t i = 0; i < m.latent_dim(); ++i) {
    p.mean.push_back(m.posterior_mean(i));
    p.log_std.push_back(0.5 * std::log(m.posterior_var(i)));
  }
  return p;
}

VariationalParams start(std::size_t d) {
  VariationalParams p;
  p.mean.assign(d, 0.0);
  p.log_std.assign(d, 0.0);
  return p;
}

}  // namespace

TEST(Svi, ElboAtExactPosteriorEqualsEvidence) {
  const auto m = oracle::make_normal_normal(1);
  const ElboEstimate e = elbo_estimate(m, exact_posterior(m), 64, 9);
  EXPECT_NEAR(e.value, m.log_evidence(), 1e-9);
  EXPECT_LT(e.standard_error, 1e-9);
}

TEST(Svi, ElboIsBelowEvidenceElsewhere) {
  const auto m = oracle::make_normal_normal(1);
  auto p = exact_posterior(m);
  p.mean[0] += 0.5;
  p.log_std[1] += 0.3;
  const ElboEstimate e = elbo_estimate(m, p, 4096, 2);
  EXPECT_LT(e.value, m.log_evidence());
}

TEST(Svi, GradientMatchesFixedNoiseFiniteDifferences) {
  const auto m = oracle::make_normal_normal(4);
  VariationalParams p = start(m.latent_dim());
  p.mean = {0.3, -0.2, 1.0};
  p.log_std = {-0.5, 0.1, -1.0};
  const ElboGradient g = elbo_gradient(m, p, 16, 77);
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.mean.size(); ++i) {
    auto a = p, b = p;
    a.mean[i] += h;
    b.mean[i] -= h;
    const double num = (elbo_estimate(m, a, 16, 77).value - elbo_estimate(m, b, 16, 77).value) / (2 * h);
    EXPECT_NEAR(g.mean[i], num, 1e-6 * std::max(1.0, std::abs(num)));
    a = p;
    b = p;
    a.log_std[i] += h;
    b.log_std[i] -= h;
    const double nl = (elbo_estimate(m, a, 16, 77).value - elbo_estimate(m, b, 16, 77).value) / (2 * h);
    EXPECT_NEAR(g.log_std[i], nl, 1e-6 * std::max(1.0, std::abs(nl)));
  }
}

TEST(Svi, AdamRecoversConjugatePosterior) {
  const auto m = oracle::make_normal_normal(5);
  TrainOptions opt;
  opt.iterations = 1000;
  opt.learning_rate = 0.01;
  opt.seed = 3;
  const TrainReport r = train_svi(m, start(m.latent_dim()), opt);
  for (std::size_t i = 0; i < m.latent_dim(); ++i) {
    const double mean = m.posterior_mean(i), sd = std::sqrt(m.posterior_var(i));
    EXPECT_NEAR(r.final_params.mean[i], mean, 0.05 * std::abs(mean));
    EXPECT_NEAR(r.final_params.std_at(i), sd, 0.05 * sd);
  }
  EXPECT_EQ(r.elbo.size(), 1000u);
  EXPECT_EQ(r.failed_iterations, 0u);
}

TEST(Svi, TrainingIsSeedDeterministic) {
  const auto m = oracle::make_normal_normal(6);
  TrainOptions opt;
  opt.iterations = 50;
  opt.seed = 12;
  const auto a = train_svi(m, start(3), opt);
  const auto b = train_svi(m, start(3), opt);
  EXPECT_EQ(a.final_params, b.final_params);
  EXPECT_EQ(a.elbo, b.elbo);
  opt.seed = 13;
  const auto c = train_svi(m, start(3), opt);
  EXPECT_NE(a.final_params, c.final_params);
}

TEST(Svi, ElboTraceCsv) {
  TrainReport r;
  r.elbo = {-1.5, -0.25};
  EXPECT_EQ(elbo_trace_csv(r), "iteration,elbo\n0,-1.5\n1,-0.25\n");
}

TEST(Svi, ShapeMismatchThrows) {
  const auto m = oracle::make_normal_normal(1);
  EXPECT_THROW(elbo_estimate(m, start(2), 4, 0), ShapeError);
  EXPECT_THROW(elbo_estimate(m, start(3), 0, 0), DomainError);
}

TEST(Svi, MixSeedSpreadsNeighbouringSeeds) {
  EXPECT_NE(mix_seed(0), mix_seed(1));
  EXPECT_NE(mix_seed(1) & 0xffff, mix_seed(2) & 0xffff);
}

#include <cmath>
#include <random>

#include <doctest.h>

#include "relgrid/errors.hpp"
#include "relgrid/estimate.hpp"

using namespace relgrid;

namespace {

// Deterministic synthetic covariates with a clear stressed cluster.
void synthetic_covariates(int n, std::vector<double>& c1, std::vector<double>& c2,
                          uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> base1(0.3, 0.1), base2(20.0, 3.0);
  c1.resize(n);
  c2.resize(n);
  for (int i = 0; i < n; ++i) {
    c1[i] = base1(rng);
    c2[i] = base2(rng);
  }
  // push every tenth row above both thresholds
  for (int i = 0; i < n; i += 10) {
    c1[i] = 0.8;
    c2[i] = 35.0;
  }
}

WeightedDataset weighted_from(const LabeledDataset& d) {
  WeightedDataset w;
  w.rows = d.rows;
  w.counts.assign(d.rows.size(), 1.0);
  return w;
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

TEST_CASE("per-step failure rates from the published ageing laws") {
  // thermal law at 102 °C over a 2 h step
  CHECK(tsfr_bus() == doctest::Approx(4.93e-6).epsilon(5e-3));
  // 0.05 failures/year over 365 × 12 steps
  CHECK(tsfr_line() == doctest::Approx(1.14e-5).epsilon(5e-3));
  CHECK(tsfr_line() == doctest::Approx(0.05 / (365.0 * 12.0)).epsilon(1e-12));
  // hazard and probability agree to first order at these magnitudes
  CHECK(std::abs((1.0 - std::exp(-tsfr_bus())) - tsfr_bus()) < 1e-10);
  // hotter insulation fails faster, longer steps accumulate more risk
  CHECK(tsfr_bus(110.0) > tsfr_bus(102.0));
  CHECK(tsfr_bus(102.0, 4.0) == doctest::Approx(2.0 * tsfr_bus()).epsilon(1e-12));
}

TEST_CASE("labeling assigns the documented failure fractions") {
  std::vector<double> c1, c2;
  synthetic_covariates(100, c1, c2);
  LabeledDataset d = label_failures(c1, c2, ComponentKind::Bus, 7);
  CHECK(d.kind == ComponentKind::Bus);
  CHECK(d.component_id == 7);
  CHECK(d.rows.size() == 100);
  // count stressed rows against the mean-plus-sd thresholds
  auto mean_sd = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double s2 = 0;
    for (double x : v) s2 += (x - m) * (x - m);
    return std::pair<double, double>(m, std::sqrt(s2 / (v.size() - 1)));
  };
  auto [m1, s1] = mean_sd(c1);
  auto [m2, s2] = mean_sd(c2);
  int stressed = 0;
  for (size_t i = 0; i < c1.size(); ++i)
    if (c1[i] > m1 + s1 && c2[i] > m2 + s2) ++stressed;
  const int expect =
      static_cast<int>(stressed * 0.72) + static_cast<int>(stressed * 0.08);
  CHECK(d.failure_count() == expect);
  // failures among stressed rows come first in scan order
  int seen = 0;
  for (size_t i = 0; i < d.rows.size() && seen < static_cast<int>(stressed * 0.72);
       ++i) {
    if (c1[i] > m1 + s1 && c2[i] > m2 + s2) {
      CHECK(d.rows[i].label == 1);
      ++seen;
    }
  }
}

TEST_CASE("labeling rejects a constant covariate") {
  std::vector<double> flat(50, 1.0), ok(50);
  for (int i = 0; i < 50; ++i) ok[i] = i * 0.01;
  CHECK_THROWS_AS(label_failures(flat, ok, ComponentKind::Line, 1),
                  DegenerateCovariate);
  CHECK_THROWS_AS(label_failures(ok, flat, ComponentKind::Line, 1),
                  DegenerateCovariate);
}

TEST_CASE("bootstrap weights rebalance to the target prevalence") {
  LabeledDataset d;
  d.rows.resize(10);
  d.rows[0].label = 1;
  d.rows[3].label = 1;  // s = 2, n = 10, prevalence 0.2
  const double target = 1e-3;
  std::vector<double> w = bootstrap_weights(d, target);
  REQUIRE(w.size() == 10);
  double total = 0.0, fail_mass = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    CHECK(w[i] > 0.0);
    total += w[i];
    if (d.rows[i].label == 1) fail_mass += w[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // expected failure share of a resample equals the target rate
  CHECK(fail_mass == doctest::Approx(target).epsilon(1e-12));
  // the two failure rows share identical weight
  CHECK(w[0] == doctest::Approx(w[3]).epsilon(1e-15));
}

TEST_CASE("one-class datasets cannot be rebalanced") {
  LabeledDataset all_ok;
  all_ok.rows.resize(5);
  CHECK_THROWS_AS(bootstrap_weights(all_ok, 1e-3), AllOneClass);
  LabeledDataset all_fail;
  all_fail.rows.resize(5);
  for (auto& r : all_fail.rows) r.label = 1;
  CHECK_THROWS_AS(bootstrap_weights(all_fail, 1e-3), AllOneClass);
}

TEST_CASE("bootstrap expansion conserves the draw count and prevalence") {
  std::vector<double> c1, c2;
  synthetic_covariates(200, c1, c2);
  LabeledDataset d = label_failures(c1, c2, ComponentKind::Bus, 0);
  const double target = 5e-3;
  std::vector<double> w = bootstrap_weights(d, target);
  const std::int64_t draws = 2000000;
  WeightedDataset boot = expand_bootstrap(d, w, draws, 99);
  REQUIRE(boot.rows.size() == boot.counts.size());
  double total = 0.0, failures = 0.0;
  for (size_t i = 0; i < boot.rows.size(); ++i) {
    total += boot.counts[i];
    if (boot.rows[i].label == 1) failures += boot.counts[i];
  }
  CHECK(total == doctest::Approx(static_cast<double>(draws)));
  // law of large numbers: prevalence near the target (binomial sd ≈ 5e-5)
  CHECK(failures / total == doctest::Approx(target).epsilon(0.1));
  // determinism of the expansion
  WeightedDataset again = expand_bootstrap(d, w, draws, 99);
  CHECK(again.counts == boot.counts);
}

TEST_CASE("saturated three-point design matches the observed log odds") {
  // one parameter per distinct covariate point → the fit reproduces the
  // empirical odds exactly
  WeightedDataset data;
  auto add = [&](double x1, double x2, double ok, double fail) {
    data.rows.push_back(LabeledRow{x1, x2, 0});
    data.counts.push_back(ok);
    data.rows.push_back(LabeledRow{x1, x2, 1});
    data.counts.push_back(fail);
  };
  add(0.0, 0.0, 900.0, 100.0);
  add(1.0, 0.0, 800.0, 200.0);
  add(0.0, 1.0, 700.0, 300.0);
  MleResult r = fit_mle(data);
  const double b0 = std::log(100.0 / 900.0);
  CHECK(r.beta[0] == doctest::Approx(b0).epsilon(1e-7));
  CHECK(r.beta[1] == doctest::Approx(std::log(200.0 / 800.0) - b0).epsilon(1e-7));
  CHECK(r.beta[2] == doctest::Approx(std::log(300.0 / 700.0) - b0).epsilon(1e-7));
}

TEST_CASE("regression recovers known coefficients from dense data") {
  const std::array<double, 3> truth{-12.0, 0.3, 0.3};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u1(0.0, 1.0), u2(10.0, 30.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  WeightedDataset data;
  for (int i = 0; i < 200000; ++i) {
    LabeledRow r;
    r.x1 = u1(rng);
    r.x2 = u2(rng);
    const double pr = sigmoid(truth[0] + truth[1] * r.x1 + truth[2] * r.x2);
    r.label = coin(rng) < pr ? 1 : 0;
    data.rows.push_back(r);
    data.counts.push_back(1.0);
  }
  MleResult r = fit_mle(data);
  CHECK(r.beta[0] == doctest::Approx(truth[0]).epsilon(0.15));
  CHECK(r.beta[1] == doctest::Approx(truth[1]).epsilon(0.5));
  CHECK(r.beta[2] == doctest::Approx(truth[2]).epsilon(0.15));
}

TEST_CASE("separated data is reported instead of diverging") {
  WeightedDataset one_class;
  one_class.rows = {LabeledRow{0.1, 20.0, 0}, LabeledRow{0.2, 21.0, 0}};
  one_class.counts = {5.0, 5.0};
  CHECK_THROWS_AS(fit_mle(one_class), Separation);
  // perfectly separable classes
  WeightedDataset sep;
  for (int i = 0; i < 20; ++i) {
    LabeledRow r;
    r.x1 = i < 10 ? 0.0 : 1.0;
    r.x2 = 20.0;
    r.label = i < 10 ? 0 : 1;
    sep.rows.push_back(r);
    sep.counts.push_back(1.0);
  }
  CHECK_THROWS_AS(fit_mle(sep), EstimationError);
}

TEST_CASE("leapfrog trajectories reverse exactly") {
  auto grad = [](const std::array<double, 3>& q) {
    // standard normal target: ∇ log p = −q
    return std::array<double, 3>{-q[0], -q[1], -q[2]};
  };
  std::array<double, 3> q{0.3, -1.2, 0.8};
  std::array<double, 3> p{0.5, 0.1, -0.9};
  const std::array<double, 3> q0 = q, p0 = p;
  leapfrog(grad, q, p, 0.1, 25);
  for (auto& v : p) v = -v;  // flip momentum and integrate back
  leapfrog(grad, q, p, 0.1, 25);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(q[i] - q0[i]) <= 1e-10);
    CHECK(std::abs(-p[i] - p0[i]) <= 1e-10);
  }
}

TEST_CASE("the sampler reproduces a Gaussian target") {
  const std::array<double, 3> mu{1.0, -2.0, 0.5};
  const std::array<double, 3> sd{0.5, 1.5, 1.0};
  auto logp = [&](const std::array<double, 3>& q) {
    double v = 0;
    for (int i = 0; i < 3; ++i) {
      const double z = (q[i] - mu[i]) / sd[i];
      v -= 0.5 * z * z;
    }
    return v;
  };
  auto grad = [&](const std::array<double, 3>& q) {
    std::array<double, 3> g;
    for (int i = 0; i < 3; ++i) g[i] = -(q[i] - mu[i]) / (sd[i] * sd[i]);
    return g;
  };
  HmcConfig cfg;
  cfg.total_iters = 12000;
  cfg.burn_in = 3000;
  cfg.seed = 17;
  HmcChain chain = hmc_chain(logp, grad, {0, 0, 0}, cfg);
  REQUIRE(chain.samples.size() == 9000);
  CHECK(chain.divergences == 0);
  CHECK(chain.mean_acceptance >= 0.55);
  CHECK(chain.mean_acceptance <= 0.95);
  for (int i = 0; i < 3; ++i) {
    double m = 0;
    for (const auto& s : chain.samples) m += s[i];
    m /= chain.samples.size();
    double v = 0;
    for (const auto& s : chain.samples) v += (s[i] - m) * (s[i] - m);
    v /= chain.samples.size() - 1;
    CHECK(m == doctest::Approx(mu[i]).epsilon(0.15));
    CHECK(std::sqrt(v) == doctest::Approx(sd[i]).epsilon(0.2));
  }
}

TEST_CASE("the posterior concentrates near the generating coefficients") {
  const std::array<double, 3> truth{-10.0, 0.5, 0.25};
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u1(0.0, 1.0), u2(10.0, 30.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  WeightedDataset data;
  for (int i = 0; i < 30000; ++i) {
    LabeledRow r;
    r.x1 = u1(rng);
    r.x2 = u2(rng);
    const double pr = sigmoid(truth[0] + truth[1] * r.x1 + truth[2] * r.x2);
    r.label = coin(rng) < pr ? 1 : 0;
    data.rows.push_back(r);
    data.counts.push_back(1.0);
  }
  HmcConfig cfg;
  cfg.total_iters = 6000;
  cfg.burn_in = 1500;
  cfg.seed = 31;
  PosteriorSummary post = hmc_posterior(data, fit_mle(data).beta, cfg);
  CHECK(post.samples == 4500);
  CHECK(post.mean_acceptance >= 0.4);
  CHECK(post.mean_acceptance <= 0.95);
  CHECK(post.divergences == 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(post.mean[i] - truth[i]) <= 4.0 * post.sd[i] + 0.05);
    CHECK(post.sd[i] > 0.0);
  }
  CHECK(post.lambda_hat == doctest::Approx(std::exp(-post.mean[0])).epsilon(1e-12));
}

TEST_CASE("with no informative rows the prior carries the posterior") {
  WeightedDataset data;
  data.rows = {LabeledRow{0.0, 0.0, 0}};
  data.counts = {1e-12};  // effectively no likelihood mass
  const std::array<double, 3> prior_mean{-9.0, 1.0, 0.2};
  HmcConfig cfg;
  cfg.total_iters = 6000;
  cfg.burn_in = 1500;
  cfg.prior_sd = 1.0;
  cfg.seed = 41;
  PosteriorSummary post = hmc_posterior(data, prior_mean, cfg);
  for (int i = 0; i < 3; ++i) {
    CHECK(post.mean[i] == doctest::Approx(prior_mean[i]).epsilon(0.15));
    CHECK(post.sd[i] == doctest::Approx(1.0).epsilon(0.25));
  }
}

#include "relgrid/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/Dense>

namespace relgrid {

double tsfr_bus(double temp_c_total, double delta_t_hours, double k1, double k2) {
  const double mttf_hours = std::pow(10.0, k1 / (273.0 + temp_c_total) + k2);
  return delta_t_hours / mttf_hours;
}

double tsfr_line() { return 0.05 / (365.0 * 12.0); }

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

LabeledDataset label_failures(const std::vector<double>& cov1,
                              const std::vector<double>& cov2, ComponentKind kind,
                              int component_id, uint64_t seed) {
  (void)seed;  // assignment is deterministic by design
  if (cov1.size() != cov2.size())
    throw DimensionMismatch("covariate series differ in length");
  if (cov1.size() < 2) throw InputError("need at least 2 rows to form thresholds");
  const auto [m1, s1] = mean_sd(cov1);
  const auto [m2, s2] = mean_sd(cov2);
  if (s1 <= 0.0 || s2 <= 0.0)
    throw DegenerateCovariate("a covariate has zero variance");
  const double tau1 = m1 + s1, tau2 = m2 + s2;

  LabeledDataset out;
  out.kind = kind;
  out.component_id = component_id;
  out.rows.resize(cov1.size());
  int stressed = 0;
  for (size_t i = 0; i < cov1.size(); ++i) {
    out.rows[i] = {cov1[i], cov2[i], 0};
    if (cov1[i] > tau1 && cov2[i] > tau2) ++stressed;
  }
  int above_quota = static_cast<int>(std::floor(stressed * 0.72));
  int below_quota = static_cast<int>(std::floor(stressed * 0.08));
  for (size_t i = 0; i < cov1.size() && above_quota > 0; ++i) {
    if (cov1[i] > tau1 && cov2[i] > tau2) {
      out.rows[i].label = 1;
      --above_quota;
    }
  }
  for (size_t i = 0; i < cov1.size() && below_quota > 0; ++i) {
    if (cov1[i] <= tau1 && cov2[i] <= tau2) {
      out.rows[i].label = 1;
      --below_quota;
    }
  }
  return out;
}

std::vector<double> bootstrap_weights(const LabeledDataset& dataset,
                                      double target_pr) {
  const int n = static_cast<int>(dataset.rows.size());
  const int s = dataset.failure_count();
  if (s == 0 || s == n)
    throw AllOneClass("resampling needs both failure and non-failure rows");
  const double w_fail = target_pr / (static_cast<double>(s) / n);
  const double w_ok = (1.0 - target_pr) / (static_cast<double>(n - s) / n);
  std::vector<double> w(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    w[i] = dataset.rows[i].label ? w_fail : w_ok;
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

WeightedDataset expand_bootstrap(const LabeledDataset& dataset,
                                 const std::vector<double>& weights,
                                 std::int64_t total_draws, uint64_t seed) {
  if (weights.size() != dataset.rows.size())
    throw DimensionMismatch("weights do not match the dataset");
  std::mt19937_64 rng(seed);
  // Sequential conditional binomials give an exact multinomial draw.
  std::vector<std::int64_t> counts(weights.size(), 0);
  double remaining_p = 1.0;
  std::int64_t remaining_n = total_draws;
  for (size_t i = 0; i + 1 < weights.size() && remaining_n > 0; ++i) {
    const double p = std::min(1.0, weights[i] / remaining_p);
    std::binomial_distribution<std::int64_t> bin(remaining_n, p);
    counts[i] = bin(rng);
    remaining_n -= counts[i];
    remaining_p -= weights[i];
    if (remaining_p <= 0) break;
  }
  if (!weights.empty()) counts.back() += remaining_n;

  WeightedDataset out;
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      out.rows.push_back(dataset.rows[i]);
      out.counts.push_back(static_cast<double>(counts[i]));
    }
  }
  return out;
}

MleResult fit_mle(const WeightedDataset& data, double grad_tol, int max_iter) {
  double total = 0.0, fails = 0.0;
  for (size_t i = 0; i < data.rows.size(); ++i) {
    total += data.counts[i];
    if (data.rows[i].label) fails += data.counts[i];
  }
  if (fails == 0.0 || fails == total)
    throw Separation("all observations share one class");

  Eigen::Vector3d beta = Eigen::Vector3d::Zero();
  MleResult res;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
    for (size_t i = 0; i < data.rows.size(); ++i) {
      const auto& r = data.rows[i];
      const Eigen::Vector3d x(1.0, r.x1, r.x2);
      const double mu = sigmoid(beta.dot(x));
      grad += data.counts[i] * (r.label - mu) * x;
      hess += data.counts[i] * mu * (1.0 - mu) * x * x.transpose();
    }
    res.iterations = it + 1;
    if (grad.norm() / std::max(1.0, total) <= grad_tol) {
      for (int j = 0; j < 3; ++j) res.beta[j] = beta[j];
      return res;
    }
    Eigen::LDLT<Eigen::Matrix3d> ldlt(hess);
    if (ldlt.info() != Eigen::Success || hess.diagonal().minCoeff() <= 1e-14)
      throw Separation("singular information matrix; data may be separable");
    beta += ldlt.solve(grad);
    if (!beta.allFinite() || beta.norm() > 1e4)
      throw Separation("coefficients diverged; data may be separable");
  }
  throw NoConvergence("IRLS did not reach the gradient tolerance");
}

void leapfrog(const std::function<std::array<double, 3>(
                  const std::array<double, 3>&)>& grad,
              std::array<double, 3>& q, std::array<double, 3>& p, double step,
              int steps) {
  auto g = grad(q);
  for (int j = 0; j < 3; ++j) p[j] += 0.5 * step * g[j];
  for (int s = 0; s < steps; ++s) {
    for (int j = 0; j < 3; ++j) q[j] += step * p[j];
    g = grad(q);
    const double half = (s + 1 == steps) ? 0.5 : 1.0;
    for (int j = 0; j < 3; ++j) p[j] += half * step * g[j];
  }
}

HmcChain hmc_chain(const std::function<double(const std::array<double, 3>&)>& logp,
                   const std::function<std::array<double, 3>(
                       const std::array<double, 3>&)>& grad,
                   const std::array<double, 3>& init, const HmcConfig& config) {
  if (config.burn_in >= config.total_iters)
    throw InputError("burn-in must be smaller than the iteration count");
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::array<double, 3> q = init;
  double current_logp = logp(q);

  // Dual averaging (target the configured acceptance rate during burn-in).
  double eps = config.initial_step;
  const double mu = std::log(10.0 * eps);
  double log_eps_bar = 0.0, h_bar = 0.0;
  const double gamma = 0.05, t0 = 10.0, kappa = 0.75;

  HmcChain chain;
  chain.samples.reserve(config.total_iters - config.burn_in);
  double accept_sum = 0.0;
  std::int64_t accept_count = 0;

  for (std::int64_t it = 1; it <= config.total_iters; ++it) {
    std::array<double, 3> p{gauss(rng), gauss(rng), gauss(rng)};
    const double h0 = -current_logp + 0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    std::array<double, 3> q_new = q;
    std::array<double, 3> p_new = p;
    leapfrog(grad, q_new, p_new, eps, config.leapfrog_steps);
    const double logp_new = logp(q_new);
    const double h1 =
        -logp_new +
        0.5 * (p_new[0] * p_new[0] + p_new[1] * p_new[1] + p_new[2] * p_new[2]);
    double accept_prob;
    if (!std::isfinite(h1) || h1 - h0 > 1000.0) {
      // the step size is still being adapted during burn-in, so only count
      // divergences on the sampling phase
      if (it > config.burn_in) ++chain.divergences;
      accept_prob = 0.0;
      if (chain.divergences > std::max<std::int64_t>(100, config.total_iters / 10))
        throw DivergentTrajectories(
            "energy error exploded in more than 10% of trajectories");
    } else {
      accept_prob = std::min(1.0, std::exp(h0 - h1));
    }
    if (unif(rng) < accept_prob) {
      q = q_new;
      current_logp = logp_new;
    }
    if (it <= config.burn_in) {
      const double m = static_cast<double>(it);
      h_bar = (1.0 - 1.0 / (m + t0)) * h_bar +
              (config.target_accept - accept_prob) / (m + t0);
      const double log_eps = mu - std::sqrt(m) / gamma * h_bar;
      const double w = std::pow(m, -kappa);
      log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
      eps = std::exp(log_eps);
      if (it == config.burn_in) eps = std::exp(log_eps_bar);
    } else {
      chain.samples.push_back(q);
      accept_sum += accept_prob;
      ++accept_count;
    }
  }
  chain.mean_acceptance = accept_count ? accept_sum / accept_count : 0.0;
  chain.step_size = eps;
  return chain;
}

PosteriorSummary hmc_posterior(const WeightedDataset& data,
                               const std::array<double, 3>& prior_mean,
                               const HmcConfig& config) {
  for (double m : prior_mean)
    if (!std::isfinite(m)) throw InputError("prior means must be finite");
  const double var = config.prior_sd * config.prior_sd;

  auto logp = [&](const std::array<double, 3>& b) {
    double lp = 0.0;
    for (size_t i = 0; i < data.rows.size(); ++i) {
      const auto& r = data.rows[i];
      const double t = b[0] + b[1] * r.x1 + b[2] * r.x2;
      // log σ(t) for failures, log(1−σ(t)) otherwise, numerically stable
      const double log_sig = t >= 0 ? -std::log1p(std::exp(-t))
                                    : t - std::log1p(std::exp(t));
      const double log_one_minus = log_sig - t;
      lp += data.counts[i] * (r.label ? log_sig : log_one_minus);
    }
    for (int j = 0; j < 3; ++j) {
      const double d = b[j] - prior_mean[j];
      lp -= d * d / (2.0 * var);
    }
    return lp;
  };
  auto grad = [&](const std::array<double, 3>& b) {
    std::array<double, 3> g{0.0, 0.0, 0.0};
    for (size_t i = 0; i < data.rows.size(); ++i) {
      const auto& r = data.rows[i];
      const double mu = sigmoid(b[0] + b[1] * r.x1 + b[2] * r.x2);
      const double res = data.counts[i] * (r.label - mu);
      g[0] += res;
      g[1] += res * r.x1;
      g[2] += res * r.x2;
    }
    for (int j = 0; j < 3; ++j) g[j] -= (b[j] - prior_mean[j]) / var;
    return g;
  };

  HmcChain chain = hmc_chain(logp, grad, prior_mean, config);
  PosteriorSummary out;
  out.samples = static_cast<std::int64_t>(chain.samples.size());
  out.mean_acceptance = chain.mean_acceptance;
  out.step_size = chain.step_size;
  out.divergences = chain.divergences;
  for (const auto& s : chain.samples)
    for (int j = 0; j < 3; ++j) out.mean[j] += s[j];
  for (int j = 0; j < 3; ++j) out.mean[j] /= std::max<std::int64_t>(1, out.samples);
  for (const auto& s : chain.samples)
    for (int j = 0; j < 3; ++j)
      out.sd[j] += (s[j] - out.mean[j]) * (s[j] - out.mean[j]);
  for (int j = 0; j < 3; ++j)
    out.sd[j] = std::sqrt(out.sd[j] / std::max<std::int64_t>(1, out.samples - 1));
  out.lambda_hat = std::exp(-out.mean[0]);
  return out;
}

}  // namespace relgrid

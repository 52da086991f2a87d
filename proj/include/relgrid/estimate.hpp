#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "relgrid/errors.hpp"

namespace relgrid {

enum class ComponentKind { Bus, Line };

struct LabeledRow {
  double x1 = 0.0;  // loading covariate (p.u. net power or current squared)
  double x2 = 0.0;  // ambient temperature, °C
  int label = 0;    // 1 = failure
};

struct LabeledDataset {
  ComponentKind kind = ComponentKind::Bus;
  int component_id = 0;
  std::vector<LabeledRow> rows;

  int failure_count() const {
    int s = 0;
    for (const auto& r : rows) s += r.label;
    return s;
  }
};

/// Dataset with per-row multiplicities (aggregated bootstrap resample).
struct WeightedDataset {
  std::vector<LabeledRow> rows;
  std::vector<double> counts;
};

/// Per-step failure rate of a bus from the thermal ageing law
/// Δt / 10^{K₁/(273+°C) + K₂}.
double tsfr_bus(double temp_c_total = 102.0, double delta_t_hours = 2.0,
                double k1 = 6328.80, double k2 = -11.269);

/// Per-step failure rate of an overhead line: 0.05 failures/year over
/// 365 days × 12 two-hour steps.
double tsfr_line();

/// Synthetic failure labeling: rows where both covariates exceed their
/// mean-plus-one-standard-deviation threshold count as stressed (s of them);
/// ⌊s·0.72⌋ failures are assigned among the stressed rows and ⌊s·0.08⌋ among
/// fully below-threshold rows, scanning from the first row. Deterministic;
/// the seed is reserved for future randomized assignment policies.
LabeledDataset label_failures(const std::vector<double>& cov1,
                              const std::vector<double>& cov2, ComponentKind kind,
                              int component_id, uint64_t seed = 0);

/// Rare-event sampling weights: failures target_pr/(s/n), non-failures
/// (1−target_pr)/((n−s)/n), normalized to a distribution.
std::vector<double> bootstrap_weights(const LabeledDataset& dataset, double target_pr);

/// Multinomial bootstrap of `total_draws` rows from the weight distribution,
/// aggregated into per-unique-row counts.
WeightedDataset expand_bootstrap(const LabeledDataset& dataset,
                                 const std::vector<double>& weights,
                                 std::int64_t total_draws, uint64_t seed);

struct MleResult {
  std::array<double, 3> beta{};  // intercept, loading, temperature
  int iterations = 0;
};

/// Weighted logistic regression by iteratively reweighted least squares.
MleResult fit_mle(const WeightedDataset& data, double grad_tol = 1e-8,
                  int max_iter = 200);

struct HmcConfig {
  std::int64_t total_iters = 100000;
  std::int64_t burn_in = 20000;
  double target_accept = 0.65;
  int leapfrog_steps = 20;
  double prior_sd = 10.0;
  double initial_step = 0.05;
  uint64_t seed = 0;
};

struct PosteriorSummary {
  std::array<double, 3> mean{};
  std::array<double, 3> sd{};
  double lambda_hat = 0.0;  // exp(−posterior-mean intercept)
  double mean_acceptance = 0.0;
  double step_size = 0.0;
  std::int64_t divergences = 0;
  std::int64_t samples = 0;
};

/// Hamiltonian Monte Carlo over the weighted logistic log-posterior with a
/// Gaussian prior centered at `prior_mean`. Leapfrog integration with a
/// Metropolis correction; the step size is dual-averaged toward
/// target_accept during burn-in.
PosteriorSummary hmc_posterior(const WeightedDataset& data,
                               const std::array<double, 3>& prior_mean,
                               const HmcConfig& config);

/// Generic HMC chain for an arbitrary differentiable log-density (used by the
/// posterior sampler and directly testable on analytic targets).
struct HmcChain {
  std::vector<std::array<double, 3>> samples;  // post burn-in
  double mean_acceptance = 0.0;
  double step_size = 0.0;
  std::int64_t divergences = 0;
};

HmcChain hmc_chain(const std::function<double(const std::array<double, 3>&)>& logp,
                   const std::function<std::array<double, 3>(
                       const std::array<double, 3>&)>& grad,
                   const std::array<double, 3>& init, const HmcConfig& config);

/// One deterministic leapfrog trajectory (exposed for reversibility tests).
void leapfrog(const std::function<std::array<double, 3>(
                  const std::array<double, 3>&)>& grad,
              std::array<double, 3>& position, std::array<double, 3>& momentum,
              double step, int steps);

}  // namespace relgrid

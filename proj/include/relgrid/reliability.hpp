#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "relgrid/errors.hpp"
#include "relgrid/grid.hpp"
#include "relgrid/scenario.hpp"

namespace relgrid {

struct LogisticCoefficients {
  double lambda = 1.0;  // inverse baseline odds, > 0
  double beta1 = 0.0;   // loading covariate coefficient
  double beta2 = 0.0;   // ambient-temperature coefficient
};

/// Per-component interval failure models (logistic in loading and ambient
/// temperature).
struct FailureModel {
  std::map<int, LogisticCoefficients> bus;   // by bus id (0 = substation)
  std::map<int, LogisticCoefficients> line;  // by line id (downstream bus)

  const LogisticCoefficients& bus_coeffs(int i) const;
  const LogisticCoefficients& line_coeffs(int i) const;

  /// Throws UnknownComponent if any network bus or line lacks coefficients.
  void require_coverage(const Network& net) const;
};

/// Probability that bus i fails within the interval given the absolute net
/// injection |p| (p.u.) and ambient temperature (°C).
double interval_unreliability_bus(const FailureModel& model, int i, double p_abs,
                                  double ambient_temp);

/// Same for line i; the loading covariate is the squared current magnitude.
double interval_unreliability_line(const FailureModel& model, int i, double l_sq,
                                   double ambient_temp);

/// Quantities of one time step that the expected failure cost depends on.
struct BusExposure {
  double consumption = 0;     // p_c, p.u.
  double dg = 0;              // p_DG
  double bess_charge = 0;     // p_B,c
  double bess_discharge = 0;  // p_B,d
  double dr = 0;              // p_DR
  double injection_abs = 0;   // |net injection|, the bus covariate
};

struct EensPoint {
  double substation_abs = 0;            // |p0|
  std::vector<BusExposure> bus;         // indexed by bus id; entry 0 ignored
  std::vector<double> line_current_sq;  // indexed by line id - 1
};

/// Partial derivatives of the expected failure cost of one time step.
struct EensGradient {
  double d_substation_abs = 0;       // wrt |p0|
  std::vector<double> d_injection;   // wrt the bus covariate |net injection|
  std::vector<double> d_line;        // wrt l, indexed by line id - 1
  // Channels through the shed value Q_i (weight times disconnection prob.):
  std::vector<double> d_consumption;
  std::vector<double> d_dg;
  std::vector<double> d_bess_charge;
  std::vector<double> d_bess_discharge;
  std::vector<double> d_dr;
};

double eens_cost(const EensPoint& point, const ShedWeights& weights,
                 const FailureModel& model, const Network& net, double ambient_temp);

EensGradient eens_gradient(const EensPoint& point, const ShedWeights& weights,
                           const FailureModel& model, const Network& net,
                           double ambient_temp);

/// Quadratic form xᵀH(p,l)x of the closed-form curvature of a one-bus/one-line
/// expected failure cost term with constants nu.
double hessian_probe(const std::array<double, 6>& nu, double p_dg, double l,
                     const std::array<double, 2>& x);

/// Gap between the logistic interval survival 1/(1+G) and the discrete
/// proportional-hazards survival exp(-G) at the same odds G.
double hazard_gap(double G);

/// Reads a coefficient CSV (id,lambda_bus,beta1_bus,beta2_bus,lambda_line,
/// beta1_line,beta2_line; line fields blank on the substation row).
FailureModel load_failure_model_csv(const std::string& path);
void save_failure_model_csv(const std::string& path, const FailureModel& model);

}  // namespace relgrid

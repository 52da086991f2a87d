#include "relgrid/reliability.hpp"

#include <cmath>

#include "relgrid/runio.hpp"

namespace relgrid {

const LogisticCoefficients& FailureModel::bus_coeffs(int i) const {
  auto it = bus.find(i);
  if (it == bus.end())
    throw UnknownComponent("no failure coefficients for bus " + std::to_string(i));
  return it->second;
}

const LogisticCoefficients& FailureModel::line_coeffs(int i) const {
  auto it = line.find(i);
  if (it == line.end())
    throw UnknownComponent("no failure coefficients for line " + std::to_string(i));
  return it->second;
}

void FailureModel::require_coverage(const Network& net) const {
  for (const auto& b : net.buses()) bus_coeffs(b.id);
  for (const auto& ln : net.lines()) line_coeffs(ln.id);
}

namespace {

// Numerically stable 1/(1 + lambda * exp(-z)) evaluated through
// t = log(lambda) - z so that huge lambda never overflows.
double logistic_unreliability(const LogisticCoefficients& c, double x, double at) {
  const double t = std::log(c.lambda) - (c.beta1 * x + c.beta2 * at);
  if (t >= 0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

double shed_value(const ShedWeights& w, const BusExposure& b) {
  return w.consumption * b.consumption + w.dg * b.dg + w.bess_charge * b.bess_charge +
         w.bess_discharge * b.bess_discharge + w.dr * b.dr;
}

struct FailureProbs {
  double substation = 0;
  std::vector<double> bus;         // by bus id
  std::vector<double> line;        // by line id - 1
  std::vector<double> line_surv;   // survival per line
  std::vector<double> path_surv;   // Π line survival over MCS, by bus id
};

FailureProbs evaluate_probs(const EensPoint& point, const FailureModel& model,
                            const Network& net, double at) {
  const int n = net.bus_count();
  if (static_cast<int>(point.bus.size()) != n ||
      static_cast<int>(point.line_current_sq.size()) != n - 1)
    throw DimensionMismatch("operating point does not match the network size");
  FailureProbs pr;
  pr.substation =
      logistic_unreliability(model.bus_coeffs(0), point.substation_abs, at);
  pr.bus.assign(n, 0.0);
  pr.line.assign(n - 1, 0.0);
  pr.line_surv.assign(n - 1, 1.0);
  std::vector<double> log_surv(n - 1, 0.0);
  bool any_large = false;
  for (int i = 1; i < n; ++i) {
    pr.bus[i] = logistic_unreliability(model.bus_coeffs(i), point.bus[i].injection_abs, at);
    pr.line[i - 1] = logistic_unreliability(model.line_coeffs(i),
                                            point.line_current_sq[i - 1], at);
    pr.line_surv[i - 1] = 1.0 - pr.line[i - 1];
    log_surv[i - 1] = std::log1p(-pr.line[i - 1]);
    if (pr.line[i - 1] > 1e-3) any_large = true;
  }
  // Survival over the path to the substation; log-space once any interval
  // probability is large enough for the direct product to lose digits.
  pr.path_surv.assign(n, 1.0);
  for (int i = 1; i < n; ++i) {
    if (any_large) {
      double s = 0;
      for (int j : net.minimum_cut_set(i)) s += log_surv[j - 1];
      pr.path_surv[i] = std::exp(s);
    } else {
      double s = 1;
      for (int j : net.minimum_cut_set(i)) s *= pr.line_surv[j - 1];
      pr.path_surv[i] = s;
    }
  }
  return pr;
}

}  // namespace

double interval_unreliability_bus(const FailureModel& model, int i, double p_abs,
                                  double ambient_temp) {
  return logistic_unreliability(model.bus_coeffs(i), p_abs, ambient_temp);
}

double interval_unreliability_line(const FailureModel& model, int i, double l_sq,
                                   double ambient_temp) {
  return logistic_unreliability(model.line_coeffs(i), l_sq, ambient_temp);
}

double eens_cost(const EensPoint& point, const ShedWeights& weights,
                 const FailureModel& model, const Network& net, double ambient_temp) {
  const FailureProbs pr = evaluate_probs(point, model, net, ambient_temp);
  double cost = weights.substation * point.substation_abs * pr.substation;
  for (int i = 1; i < net.bus_count(); ++i) {
    const double disconnect = 1.0 - (1.0 - pr.bus[i]) * pr.path_surv[i];
    cost += shed_value(weights, point.bus[i]) * disconnect;
  }
  return cost;
}

EensGradient eens_gradient(const EensPoint& point, const ShedWeights& weights,
                           const FailureModel& model, const Network& net,
                           double ambient_temp) {
  const FailureProbs pr = evaluate_probs(point, model, net, ambient_temp);
  const int n = net.bus_count();
  EensGradient g;
  g.d_injection.assign(n, 0.0);
  g.d_line.assign(n - 1, 0.0);
  g.d_consumption.assign(n, 0.0);
  g.d_dg.assign(n, 0.0);
  g.d_bess_charge.assign(n, 0.0);
  g.d_bess_discharge.assign(n, 0.0);
  g.d_dr.assign(n, 0.0);

  {
    const double p0 = pr.substation;
    const double dp0 = model.bus_coeffs(0).beta1 * p0 * (1.0 - p0);
    g.d_substation_abs =
        weights.substation * (p0 + point.substation_abs * dp0);
  }
  for (int i = 1; i < n; ++i) {
    const double surv_b = 1.0 - pr.bus[i];
    const double disconnect = 1.0 - surv_b * pr.path_surv[i];
    const double q = shed_value(weights, point.bus[i]);
    g.d_consumption[i] = weights.consumption * disconnect;
    g.d_dg[i] = weights.dg * disconnect;
    g.d_bess_charge[i] = weights.bess_charge * disconnect;
    g.d_bess_discharge[i] = weights.bess_discharge * disconnect;
    g.d_dr[i] = weights.dr * disconnect;
    const double dprb = model.bus_coeffs(i).beta1 * pr.bus[i] * (1.0 - pr.bus[i]);
    g.d_injection[i] = q * pr.path_surv[i] * dprb;
    for (int j : net.minimum_cut_set(i)) {
      const double dprl =
          model.line_coeffs(j).beta1 * pr.line[j - 1] * (1.0 - pr.line[j - 1]);
      // product over the path with line j removed
      const double rest = pr.path_surv[i] / pr.line_surv[j - 1];
      g.d_line[j - 1] += q * surv_b * rest * dprl;
    }
  }
  return g;
}

double hessian_probe(const std::array<double, 6>& nu, double p_dg, double l,
                     const std::array<double, 2>& x) {
  const double n1 = nu[0], n2 = nu[1], n3 = nu[2], n4 = nu[3], n5 = nu[4], n6 = nu[5];
  const double ep = std::exp(-n4 * p_dg);
  const double el = std::exp(-n6 * l);
  const double dp = n3 * ep + 1.0;  // bus denominator
  const double dl = n5 * el + 1.0;  // line denominator
  const double sb = 1.0 - 1.0 / dp; // bus survival
  const double sl = 1.0 - 1.0 / dl; // line survival
  const double q = n2 * p_dg + n1;

  const double h_pp = 2.0 * n2 * n3 * n4 * sl * ep / (dp * dp) +
                      2.0 * n3 * n3 * n4 * n4 * q * sl * ep * ep / (dp * dp * dp) -
                      n3 * n4 * n4 * q * sl * ep / (dp * dp);
  const double h_pl = n2 * n5 * n6 * sb * el / (dl * dl) -
                      n3 * n4 * n5 * n6 * q * ep * el / (dp * dp * dl * dl);
  const double h_ll = 2.0 * n5 * n5 * n6 * n6 * q * sb * el * el / (dl * dl * dl) -
                      n5 * n6 * n6 * q * sb * el / (dl * dl);

  return x[0] * (h_pp * x[0] + h_pl * x[1]) + x[1] * (h_pl * x[0] + h_ll * x[1]);
}

double hazard_gap(double G) {
  if (G < 0) throw InputError("odds must be non-negative");
  return std::abs(1.0 / (1.0 + G) - std::exp(-G));
}

FailureModel load_failure_model_csv(const std::string& path) {
  CsvTable table = read_csv(path, /*has_header=*/true);
  const int c_id = table.column("id");
  const int c_lb = table.column("lambda_bus");
  const int c_b1b = table.column("beta1_bus");
  const int c_b2b = table.column("beta2_bus");
  const int c_ll = table.column("lambda_line");
  const int c_b1l = table.column("beta1_line");
  const int c_b2l = table.column("beta2_line");
  if (c_id < 0 || c_lb < 0 || c_b1b < 0 || c_b2b < 0 || c_ll < 0 || c_b1l < 0 ||
      c_b2l < 0)
    throw InputError("coefficient CSV " + path +
                     " must have columns id,lambda_bus,beta1_bus,beta2_bus,"
                     "lambda_line,beta1_line,beta2_line");
  FailureModel model;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string ctx = path + " row " + std::to_string(r + 1);
    if (static_cast<int>(row.size()) <= c_b2l)
      throw InputError(ctx + ": too few columns");
    const int id = parse_int(row[c_id], ctx);
    LogisticCoefficients b{parse_double(row[c_lb], ctx), parse_double(row[c_b1b], ctx),
                           parse_double(row[c_b2b], ctx)};
    if (!(b.lambda > 0)) throw InputError(ctx + ": lambda_bus must be > 0");
    model.bus[id] = b;
    if (!row[c_ll].empty()) {
      LogisticCoefficients ln{parse_double(row[c_ll], ctx),
                              parse_double(row[c_b1l], ctx),
                              parse_double(row[c_b2l], ctx)};
      if (!(ln.lambda > 0)) throw InputError(ctx + ": lambda_line must be > 0");
      model.line[id] = ln;
    }
  }
  return model;
}

void save_failure_model_csv(const std::string& path, const FailureModel& model) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [id, b] : model.bus) {
    std::vector<std::string> row{std::to_string(id), format_number(b.lambda),
                                 format_number(b.beta1), format_number(b.beta2),
                                 "", "", ""};
    auto it = model.line.find(id);
    if (it != model.line.end()) {
      row[4] = format_number(it->second.lambda);
      row[5] = format_number(it->second.beta1);
      row[6] = format_number(it->second.beta2);
    }
    rows.push_back(std::move(row));
  }
  write_csv(path,
            {"id", "lambda_bus", "beta1_bus", "beta2_bus", "lambda_line", "beta1_line",
             "beta2_line"},
            rows);
}

}  // namespace relgrid

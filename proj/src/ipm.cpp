#include "relgrid/ipm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <Eigen/SparseCholesky>

#include "relgrid/runio.hpp"

namespace relgrid {

namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kStaticReg = 1e-8;

struct ConeLayout {
  int nonneg = 0;
  std::vector<int> soc_start;  // offsets of SOC blocks
  std::vector<int> soc_dim;
  int m = 0;
  int degree = 0;  // nonneg + number of SOC blocks

  explicit ConeLayout(const StandardConeProblem& p) {
    nonneg = p.nonneg;
    int off = nonneg;
    for (int d : p.soc_dims) {
      soc_start.push_back(off);
      soc_dim.push_back(d);
      off += d;
    }
    m = off;
    degree = nonneg + static_cast<int>(p.soc_dims.size());
  }
};

/// Nesterov-Todd scaling point for the orthant and each SOC block.
struct Scaling {
  VectorXd orth_w;               // sqrt(s/z) elementwise
  std::vector<double> eta;       // per SOC block
  std::vector<VectorXd> wbar;    // per SOC block, unit hyperbolic vector
  VectorXd lambda;               // scaled point, full cone vector
};

double soc_det(const Eigen::Ref<const VectorXd>& u) {
  return u[0] * u[0] - u.tail(u.size() - 1).squaredNorm();
}

Scaling compute_scaling(const ConeLayout& lay, const VectorXd& s, const VectorXd& z) {
  Scaling sc;
  sc.orth_w = (s.head(lay.nonneg).array() / z.head(lay.nonneg).array()).sqrt();
  sc.lambda = VectorXd::Zero(lay.m);
  sc.lambda.head(lay.nonneg) =
      (s.head(lay.nonneg).array() * z.head(lay.nonneg).array()).sqrt();
  for (size_t k = 0; k < lay.soc_start.size(); ++k) {
    const int o = lay.soc_start[k], d = lay.soc_dim[k];
    const VectorXd sb = s.segment(o, d), zb = z.segment(o, d);
    const double ds = soc_det(sb), dz = soc_det(zb);
    if (ds <= 0 || dz <= 0)
      throw NumericalFailure("iterate left the cone interior");
    const VectorXd sbar = sb / std::sqrt(ds), zbar = zb / std::sqrt(dz);
    // γ normalizes w̄ = (s̄ + Jz̄)/(2γ) to a unit hyperbolic vector:
    // (s̄+Jz̄)ᵀJ(s̄+Jz̄) = 2(1 + s̄ᵀz̄) with the standard inner product.
    const double dot = sbar.dot(zbar);
    const double gamma = std::sqrt((1.0 + dot) / 2.0);
    VectorXd w = zbar;
    w.tail(d - 1) *= -1.0;  // J z̄
    w += sbar;
    w /= (2.0 * gamma);
    sc.eta.push_back(std::pow(ds / dz, 0.25));
    sc.wbar.push_back(w);
    // λ block: λ = W z.
    VectorXd lam(d);
    lam[0] = w[0] * zb[0] + w.tail(d - 1).dot(zb.tail(d - 1));
    lam.tail(d - 1) = w.tail(d - 1) * zb[0] + zb.tail(d - 1) +
                      (w.tail(d - 1).dot(zb.tail(d - 1)) / (1.0 + w[0])) *
                          w.tail(d - 1);
    sc.lambda.segment(o, d) = sc.eta.back() * lam;
  }
  return sc;
}

/// u ← W v (W symmetric NT scaling).
VectorXd apply_W(const ConeLayout& lay, const Scaling& sc, const VectorXd& v) {
  VectorXd out(lay.m);
  out.head(lay.nonneg) = sc.orth_w.array() * v.head(lay.nonneg).array();
  for (size_t k = 0; k < lay.soc_start.size(); ++k) {
    const int o = lay.soc_start[k], d = lay.soc_dim[k];
    const VectorXd& w = sc.wbar[k];
    const VectorXd vb = v.segment(o, d);
    const double dot1 = w.tail(d - 1).dot(vb.tail(d - 1));
    out[o] = sc.eta[k] * (w[0] * vb[0] + dot1);
    out.segment(o + 1, d - 1) =
        sc.eta[k] * (vb[0] * w.tail(d - 1) + vb.tail(d - 1) +
                     (dot1 / (1.0 + w[0])) * w.tail(d - 1));
  }
  return out;
}

/// u ← W⁻¹ v.
VectorXd apply_Winv(const ConeLayout& lay, const Scaling& sc, const VectorXd& v) {
  VectorXd out(lay.m);
  out.head(lay.nonneg) = v.head(lay.nonneg).array() / sc.orth_w.array();
  for (size_t k = 0; k < lay.soc_start.size(); ++k) {
    const int o = lay.soc_start[k], d = lay.soc_dim[k];
    const VectorXd& w = sc.wbar[k];
    const VectorXd vb = v.segment(o, d);
    const double dot1 = w.tail(d - 1).dot(vb.tail(d - 1));
    out[o] = (w[0] * vb[0] - dot1) / sc.eta[k];
    out.segment(o + 1, d - 1) =
        (-vb[0] * w.tail(d - 1) + vb.tail(d - 1) +
         (dot1 / (1.0 + w[0])) * w.tail(d - 1)) /
        sc.eta[k];
  }
  return out;
}

/// Jordan product u∘v on the cone.
VectorXd jordan_product(const ConeLayout& lay, const VectorXd& u, const VectorXd& v) {
  VectorXd out(lay.m);
  out.head(lay.nonneg) = u.head(lay.nonneg).array() * v.head(lay.nonneg).array();
  for (size_t k = 0; k < lay.soc_start.size(); ++k) {
    const int o = lay.soc_start[k], d = lay.soc_dim[k];
    out[o] = u.segment(o, d).dot(v.segment(o, d));
    out.segment(o + 1, d - 1) =
        u[o] * v.segment(o + 1, d - 1) + v[o] * u.segment(o + 1, d - 1);
  }
  return out;
}

/// Solves λ∘x = d.
VectorXd jordan_solve(const ConeLayout& lay, const VectorXd& lambda, const VectorXd& d) {
  VectorXd out(lay.m);
  out.head(lay.nonneg) = d.head(lay.nonneg).array() / lambda.head(lay.nonneg).array();
  for (size_t k = 0; k < lay.soc_start.size(); ++k) {
    const int o = lay.soc_start[k], dim = lay.soc_dim[k];
    const double l0 = lambda[o];
    const auto l1 = lambda.segment(o + 1, dim - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double x0 = (l0 * d[o] - l1.dot(d.segment(o + 1, dim - 1))) / det;
    out[o] = x0;
    out.segment(o + 1, dim - 1) = (d.segment(o + 1, dim - 1) - x0 * l1) / l0;
  }
  return out;
}

VectorXd cone_identity(const ConeLayout& lay) {
  VectorXd e = VectorXd::Zero(lay.m);
  e.head(lay.nonneg).setOnes();
  for (size_t k = 0; k < lay.soc_start.size(); ++k) e[lay.soc_start[k]] = 1.0;
  return e;
}

/// Largest α ≥ 0 with u + α·du in the (closed) cone; capped at `cap`.
double max_step(const ConeLayout& lay, const VectorXd& u, const VectorXd& du,
                double cap) {
  double alpha = cap;
  for (int i = 0; i < lay.nonneg; ++i)
    if (du[i] < 0) alpha = std::min(alpha, -u[i] / du[i]);
  for (size_t k = 0; k < lay.soc_start.size(); ++k) {
    const int o = lay.soc_start[k], d = lay.soc_dim[k];
    const auto u1 = u.segment(o + 1, d - 1);
    const auto d1 = du.segment(o + 1, d - 1);
    const double a = du[o] * du[o] - d1.squaredNorm();
    const double b = 2.0 * (u[o] * du[o] - u1.dot(d1));
    const double c = u[o] * u[o] - u1.squaredNorm();
    // smallest positive root of aα² + bα + c = 0 (c ≥ 0 at an interior point)
    double root = cap;
    if (std::abs(a) < 1e-14) {
      if (b < 0) root = -c / b;
    } else {
      const double disc = b * b - 4.0 * a * c;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        const double qf = -0.5 * (b + (b >= 0 ? sq : -sq));
        double r1 = qf / a;
        double r2 = (qf != 0.0) ? c / qf : kInfinity;
        if (r1 > r2) std::swap(r1, r2);
        if (r1 > 1e-16)
          root = r1;
        else if (r2 > 1e-16)
          root = r2;
      }
    }
    alpha = std::min(alpha, root);
  }
  return alpha;
}

/// Shifts a vector into the interior of the cone (initialization only).
void shift_into_cone(const ConeLayout& lay, VectorXd& u) {
  if (lay.nonneg > 0) {
    const double mn = u.head(lay.nonneg).minCoeff();
    if (mn <= 0) u.head(lay.nonneg).array() += 1.0 - mn;
  }
  for (size_t k = 0; k < lay.soc_start.size(); ++k) {
    const int o = lay.soc_start[k], d = lay.soc_dim[k];
    const double margin = u[o] - u.segment(o + 1, d - 1).norm();
    if (margin <= 0) u[o] += 1.0 - margin;
  }
}

/// KKT system: [P+δ, Aᵀ, Gᵀ; A, −δ, 0; G, 0, −W²−δ]. The W² pattern is
/// constant across iterations, so the symbolic factorization is reused.
class KktSolver {
 public:
  KktSolver(const StandardConeProblem& p, const ConeLayout& lay)
      : p_(p), lay_(lay), n_(static_cast<int>(p.q.size())),
        me_(static_cast<int>(p.b.size())) {
    dim_ = n_ + me_ + lay.m;
  }

  bool factorize(const Scaling& sc) {
    std::vector<Triplet> trips;
    trips.reserve(p_.A.nonZeros() + p_.G.nonZeros() + dim_ + 16 * lay_.soc_dim.size());
    for (int j = 0; j < n_; ++j)
      trips.push_back({j, j, p_.p_diag[j] + kStaticReg});
    for (int c = 0; c < p_.A.outerSize(); ++c)
      for (SpMat::InnerIterator it(p_.A, c); it; ++it)
        trips.push_back({static_cast<int>(it.col()), n_ + static_cast<int>(it.row()),
                         it.value()});
    for (int i = 0; i < me_; ++i) trips.push_back({n_ + i, n_ + i, -kStaticReg});
    const int zoff = n_ + me_;
    for (int c = 0; c < p_.G.outerSize(); ++c)
      for (SpMat::InnerIterator it(p_.G, c); it; ++it)
        trips.push_back({static_cast<int>(it.col()), zoff + static_cast<int>(it.row()),
                         it.value()});
    // −W² blocks.
    for (int i = 0; i < lay_.nonneg; ++i) {
      const double w2 = sc.orth_w[i] * sc.orth_w[i];
      trips.push_back({zoff + i, zoff + i, -w2 - kStaticReg});
    }
    for (size_t k = 0; k < lay_.soc_start.size(); ++k) {
      const int o = lay_.soc_start[k], d = lay_.soc_dim[k];
      const double e2 = sc.eta[k] * sc.eta[k];
      const VectorXd& w = sc.wbar[k];
      for (int r = 0; r < d; ++r)
        for (int c = r; c < d; ++c) {
          double jrc = (r == c) ? (r == 0 ? 1.0 : -1.0) : 0.0;
          double v = e2 * (2.0 * w[r] * w[c] - jrc);
          trips.push_back({zoff + o + r, zoff + o + c,
                           -v - (r == c ? kStaticReg : 0.0)});
        }
    }
    kkt_.resize(dim_, dim_);
    kkt_.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(kkt_);
      analyzed_ = true;
    }
    ldlt_.factorize(kkt_);
    return ldlt_.info() == Eigen::Success;
  }

  /// One backsolve plus two rounds of iterative refinement against the
  /// unregularized system.
  VectorXd solve(const VectorXd& rhs) const {
    VectorXd x = ldlt_.solve(rhs);
    for (int pass = 0; pass < 2; ++pass) {
      VectorXd r = rhs - multiply_exact(x);
      x += ldlt_.solve(r);
    }
    return x;
  }

 private:
  VectorXd multiply_exact(const VectorXd& v) const {
    // The factored matrix includes ±δ regularization; remove it.
    VectorXd out = kkt_.selfadjointView<Eigen::Upper>() * v;
    out.head(n_) -= kStaticReg * v.head(n_);
    out.tail(me_ + lay_.m) += kStaticReg * v.tail(me_ + lay_.m);
    return out;
  }

  const StandardConeProblem& p_;
  const ConeLayout& lay_;
  int n_, me_, dim_ = 0;
  SpMat kkt_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Upper> ldlt_;
  bool analyzed_ = false;
};

struct KktRhs {
  VectorXd dx, dy, dz;
};

KktRhs split(const VectorXd& sol, int n, int me, int m) {
  return {sol.head(n), sol.segment(n, me), sol.tail(m)};
}

}  // namespace

IpmResult solve_standard(const StandardConeProblem& prob, const SolverOptions& opts) {
  const ConeLayout lay(prob);
  const int n = static_cast<int>(prob.q.size());
  const int me = static_cast<int>(prob.b.size());
  IpmResult res;

  if (lay.m == 0) {
    // Pure equality-constrained QP: one KKT solve.
    KktSolver kkt(prob, lay);
    Scaling empty;
    if (!kkt.factorize(empty)) {
      res.status = SolveStatus::NumericalFailure;
      return res;
    }
    VectorXd rhs(n + me);
    rhs.head(n) = -prob.q;
    rhs.tail(me) = prob.b;
    VectorXd sol = kkt.solve(rhs);
    res.x = sol.head(n);
    res.y = sol.tail(me);
    res.z.resize(0);
    res.s.resize(0);
    res.objective = 0.5 * res.x.dot(prob.p_diag.cwiseProduct(res.x)) + prob.q.dot(res.x);
    res.primal_residual = me > 0 ? (prob.A * res.x - prob.b).norm() : 0.0;
    res.dual_residual = 0.0;
    res.status = res.primal_residual <= 1e-6 ? SolveStatus::Optimal
                                             : SolveStatus::Infeasible;
    return res;
  }

  KktSolver kkt(prob, lay);
  VectorXd x, y, s, z;
  {
    // Initialization: solve with identity scaling, then shift into the cone.
    Scaling id;
    id.orth_w = VectorXd::Ones(lay.nonneg);
    id.lambda = cone_identity(lay);
    for (size_t k = 0; k < lay.soc_start.size(); ++k) {
      VectorXd w = VectorXd::Zero(lay.soc_dim[k]);
      w[0] = 1.0;
      id.eta.push_back(1.0);
      id.wbar.push_back(w);
    }
    if (!kkt.factorize(id)) {
      res.status = SolveStatus::NumericalFailure;
      return res;
    }
    VectorXd rhs(n + me + lay.m);
    rhs.head(n) = -prob.q;
    rhs.segment(n, me) = prob.b;
    rhs.tail(lay.m) = prob.h;
    VectorXd sol = kkt.solve(rhs);
    x = sol.head(n);
    y = sol.segment(n, me);
    z = sol.tail(lay.m);
    s = -z;
    shift_into_cone(lay, s);
    shift_into_cone(lay, z);
  }

  const VectorXd e = cone_identity(lay);
  double best_pres = kInfinity;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    res.iterations = iter;
    const VectorXd rx = prob.p_diag.cwiseProduct(x) + prob.q +
                        (me > 0 ? VectorXd(prob.A.transpose() * y)
                                : VectorXd::Zero(n)) +
                        prob.G.transpose() * z;
    const VectorXd ry = me > 0 ? VectorXd(prob.A * x - prob.b) : VectorXd(0);
    const VectorXd rz = prob.G * x + s - prob.h;
    const double gap = s.dot(z);
    const double pcost =
        0.5 * x.dot(prob.p_diag.cwiseProduct(x)) + prob.q.dot(x);
    const double pres =
        std::max(me > 0 ? ry.norm() / std::max(1.0, prob.b.norm()) : 0.0,
                 rz.norm() / std::max(1.0, prob.h.norm()));
    const double dres = rx.norm() / std::max(1.0, prob.q.norm());
    const double relgap = gap / std::max(1.0, std::abs(pcost));
    best_pres = std::min(best_pres, pres);
    res.objective = pcost;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.duality_gap = relgap;
    if (std::getenv("RELGRID_IPM_DEBUG"))
      std::fprintf(stderr, "iter %3d pres %.3e dres %.3e relgap %.3e pcost %.6e\n",
                   iter, pres, dres, relgap, pcost);
    if (pres <= opts.tolerance && dres <= opts.tolerance && relgap <= opts.tolerance) {
      res.status = SolveStatus::Optimal;
      res.x = x;
      res.y = y;
      res.z = z;
      res.s = s;
      return res;
    }

    Scaling sc;
    try {
      sc = compute_scaling(lay, s, z);
    } catch (const NumericalFailure&) {
      break;
    }
    if (!kkt.factorize(sc)) break;

    const double mu = gap / lay.degree;
    // Affine (predictor) direction.
    VectorXd rhs(n + me + lay.m);
    rhs.head(n) = -rx;
    rhs.segment(n, me) = -ry;
    rhs.tail(lay.m) = -rz + s;
    KktRhs aff = split(kkt.solve(rhs), n, me, lay.m);
    VectorXd ds_aff = -s - apply_W(lay, sc, apply_W(lay, sc, aff.dz));
    double alpha_aff = std::min({1.0, max_step(lay, s, ds_aff, kInfinity),
                                 max_step(lay, z, aff.dz, kInfinity)});
    const double mu_aff =
        (s + alpha_aff * ds_aff).dot(z + alpha_aff * aff.dz) / lay.degree;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(1.0, sigma);

    // Combined (corrector) direction.
    const VectorXd d_cc =
        jordan_product(lay, sc.lambda, sc.lambda) +
        jordan_product(lay, apply_Winv(lay, sc, ds_aff), apply_W(lay, sc, aff.dz)) -
        sigma * mu * e;
    const VectorXd wl = apply_W(lay, sc, jordan_solve(lay, sc.lambda, d_cc));
    rhs.head(n) = -rx;
    rhs.segment(n, me) = -ry;
    rhs.tail(lay.m) = -rz + wl;
    KktRhs dir = split(kkt.solve(rhs), n, me, lay.m);
    VectorXd ds = -wl - apply_W(lay, sc, apply_W(lay, sc, dir.dz));
    double alpha = 0.99 * std::min(max_step(lay, s, ds, kInfinity),
                                   max_step(lay, z, dir.dz, kInfinity));
    alpha = std::min(1.0, alpha);
    if (!(alpha > 1e-12)) break;

    x += alpha * dir.dx;
    y += alpha * dir.dy;
    s += alpha * ds;
    z += alpha * dir.dz;
  }

  res.x = x;
  res.y = y;
  res.z = z;
  res.s = s;
  // Degenerate problems (strict complementarity failing at a cone apex) can
  // stall just above the target tolerance; accept the iterate at reduced
  // accuracy as long as every metric is still tight.
  const double relaxed = std::max(100.0 * opts.tolerance, 1e-6);
  if (res.primal_residual <= relaxed && res.dual_residual <= relaxed &&
      res.duality_gap <= relaxed)
    res.status = SolveStatus::Optimal;
  else
    res.status = SolveStatus::IterationLimit;
  return res;
}

namespace {

/// Phase-1 feasibility check: minimize t subject to the original constraints
/// relaxed by t along the cone identity; equalities are tested by least
/// squares beforehand. Returns true when the region is (nearly) feasible.
bool region_feasible(const StandardConeProblem& prob, const SolverOptions& opts) {
  StandardConeProblem p1;
  const int n = static_cast<int>(prob.q.size());
  p1.q = VectorXd::Zero(n + 1);
  p1.q[n] = 1.0;
  p1.p_diag = VectorXd::Zero(n + 1);
  p1.A = SpMat(prob.A.rows(), n + 1);
  {
    std::vector<Triplet> ta;
    for (int c = 0; c < prob.A.outerSize(); ++c)
      for (SpMat::InnerIterator it(prob.A, c); it; ++it)
        ta.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value()});
    p1.A.setFromTriplets(ta.begin(), ta.end());
  }
  p1.b = prob.b;
  p1.nonneg = prob.nonneg;
  p1.soc_dims = prob.soc_dims;
  ConeLayout lay(prob);
  std::vector<Triplet> tg;
  for (int c = 0; c < prob.G.outerSize(); ++c)
    for (SpMat::InnerIterator it(prob.G, c); it; ++it)
      tg.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
  const VectorXd e = cone_identity(lay);
  for (int i = 0; i < lay.m; ++i)
    if (e[i] != 0) tg.push_back({i, n, -e[i]});
  // Keep t from running to −∞ and give the relaxed problem a bounded optimum.
  p1.G = SpMat(lay.m + 1, n + 1);
  tg.push_back({lay.m, n, -1.0});
  p1.nonneg += 1;
  // Reorder: the added bound row must live in the orthant part; rebuild rows
  // with the orthant rows first.
  std::vector<Triplet> tg2;
  for (auto& t : tg) {
    int r = t.row();
    if (r == lay.m) {
      tg2.push_back({prob.nonneg, t.col(), t.value()});
    } else if (r < prob.nonneg) {
      tg2.push_back({r, t.col(), t.value()});
    } else {
      tg2.push_back({r + 1, t.col(), t.value()});
    }
  }
  p1.G.setFromTriplets(tg2.begin(), tg2.end());
  p1.h = VectorXd(lay.m + 1);
  p1.h.head(prob.nonneg) = prob.h.head(prob.nonneg);
  p1.h[prob.nonneg] = 1.0;  // t ≥ −1
  p1.h.tail(lay.m - prob.nonneg) = prob.h.tail(lay.m - prob.nonneg);

  SolverOptions o = opts;
  o.tolerance = std::max(opts.tolerance, 1e-7);
  IpmResult r = solve_standard(p1, o);
  if (r.status != SolveStatus::Optimal) return true;  // inconclusive
  return r.x[r.x.size() - 1] <= 1e-6;
}

}  // namespace

SolveResult solve_continuous(const ConicProgram& program, const SolverOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult out;
  StandardFormMap sf;
  try {
    sf = to_standard_form(program);
  } catch (const Infeasible&) {
    // Fixed variables contradict a constraint outright (e.g. a fully fixed
    // branch-and-bound node): report infeasibility instead of raising.
    out.status = SolveStatus::Infeasible;
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }
  IpmResult r = solve_standard(sf.problem, options);
  out.iterations = r.iterations;
  out.primal_residual = r.primal_residual;
  out.dual_residual = r.dual_residual;
  out.duality_gap = r.duality_gap;
  if (r.status == SolveStatus::Optimal) {
    out.status = SolveStatus::Optimal;
    out.x.assign(program.variable_count(), 0.0);
    for (int j = 0; j < program.variable_count(); ++j)
      out.x[j] = sf.var_map[j] >= 0 ? r.x[sf.var_map[j]] : sf.fixed_value[j];
    out.objective = r.objective + sf.objective_constant;
  } else if (sf.problem.cone_size() > 0 &&
             !region_feasible(sf.problem, options)) {
    out.status = SolveStatus::Infeasible;
  } else {
    out.status = r.status;
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace relgrid

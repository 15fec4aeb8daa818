#include "ncg/capped_cg.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ncg {

const char* to_string(DirectionType t) { return t == DirectionType::SOL ? "SOL" : "NC"; }

namespace {

void validate(double epsilon, double zeta) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("capped_cg: epsilon must lie in (0,1)");
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("capped_cg: zeta must lie in (0,1)");
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// log of sqrt(T) (1 - tau)^{J/2} minus log zeta_hat; <= 0 means the cap is reached.
double cap_gap(const CgParameters& p, double J) {
  return 0.5 * std::log(p.T) + 0.5 * J * std::log1p(-p.tau) - std::log(p.zeta_hat);
}

}  // namespace

CgParameters cg_parameters(double M, double epsilon, double zeta, const TFormula& t_formula) {
  CgParameters p;
  p.M = M;
  p.kappa = (M + 2.0 * epsilon) / epsilon;
  p.zeta_hat = zeta / (3.0 * p.kappa);
  p.tau = 1.0 / (std::sqrt(p.kappa) + 1.0);
  if (t_formula) {
    p.T = t_formula(p.kappa, p.tau);
  } else {
    // 1 - sqrt(1 - tau) rewritten to avoid cancellation for small tau.
    const double denom = p.tau / (1.0 + std::sqrt(1.0 - p.tau));
    const double k2 = p.kappa * p.kappa;
    p.T = 4.0 * k2 * k2 / (denom * denom);
  }
  return p;
}

std::size_t j_cap(double M, double epsilon, double zeta) {
  validate(epsilon, zeta);
  if (!(M >= 0.0) || !std::isfinite(M)) throw std::invalid_argument("j_cap: M must be finite and nonnegative");
  const CgParameters p = cg_parameters(M, epsilon, zeta);
  const double slope = 0.5 * std::log1p(-p.tau);
  const double raw = (std::log(p.zeta_hat) - 0.5 * std::log(p.T)) / slope;
  double J = std::max(0.0, std::ceil(raw));
  while (J > 0.0 && cap_gap(p, J - 1.0) <= 0.0) J -= 1.0;
  while (cap_gap(p, J) > 0.0) J += 1.0;
  return static_cast<std::size_t>(J);
}

CappedCGResult capped_cg(const HessianOperator& H, const Vector& g, const CappedCGParams& params) {
  validate(params.epsilon, params.zeta);
  const double eps = params.epsilon;
  if (static_cast<Index>(g.size()) != H.dim()) throw std::invalid_argument("capped_cg: dimension mismatch");
  if (!g.allFinite()) throw std::invalid_argument("capped_cg: non-finite gradient");
  const double g_norm = g.norm();
  if (!(g_norm >= 1e-300)) throw std::invalid_argument("capped_cg: g must be nonzero");
  if (params.M_init && (!(*params.M_init >= 0.0) || !std::isfinite(*params.M_init))) {
    throw std::invalid_argument("capped_cg: M_init must be finite and nonnegative");
  }

  CgParameters prm = cg_parameters(params.M_init.value_or(0.0), eps, params.zeta, params.t_formula);
  auto raise_M = [&](double candidate) {
    if (candidate > prm.M) prm = cg_parameters(candidate, eps, params.zeta, params.t_formula);
  };

  CappedCGResult res;
  auto finish = [&](DirectionType type, CgExit exit, Vector d, std::size_t j) {
    res.d_type = type;
    res.exit = exit;
    res.d = std::move(d);
    res.iterations = j;
    res.M_final = prm.M;
    res.kappa = prm.kappa;
    res.T = prm.T;
    res.tau = prm.tau;
    res.zeta_hat = prm.zeta_hat;
    return res;
  };
  auto matvec = [&](const Vector& v, Vector& out) {
    H.apply(v, out);
    ++res.matvecs;
  };

  const Eigen::Index n = g.size();
  std::vector<Vector> ys{Vector::Zero(n)};
  std::vector<Vector> rs{g};
  Vector p = -g;
  Vector Hp(n);
  matvec(p, Hp);
  double pHbarp = p.dot(Hp) + 2.0 * eps * p.squaredNorm();
  if (pHbarp < eps * p.squaredNorm()) return finish(DirectionType::NC, CgExit::InitialCurvature, p, 0);
  if (Hp.norm() > prm.M * p.norm()) raise_M(Hp.norm() / p.norm());

  const double r0_norm = g_norm;
  const std::size_t hard_cap = params.max_iters_override.value_or(std::numeric_limits<std::size_t>::max());
  std::size_t j = 0;
  while (true) {
    if (j >= hard_cap) {
      throw ContractViolation("capped_cg: iteration cap reached without a termination test firing");
    }
    const Vector& y = ys.back();
    const Vector& r = rs.back();
    const double rr = r.squaredNorm();
    const double alpha = rr / pHbarp;
    Vector y_next = y + alpha * p;
    Vector r_next = r + alpha * (Hp + 2.0 * eps * p);
    const double beta = r_next.squaredNorm() / rr;
    Vector p_next = -r_next + beta * p;
    Vector Hp_next(n);
    matvec(p_next, Hp_next);
    // H r_{j+1} = -H p_{j+1} + beta H p_j and H y_{j+1} = r_{j+1} - g - 2 eps y_{j+1}.
    const Vector Hr_next = -Hp_next + beta * Hp;
    const Vector Hbar_y = r_next - g;
    const Vector Hy_next = Hbar_y - 2.0 * eps * y_next;
    ++j;
    ys.push_back(std::move(y_next));
    rs.push_back(std::move(r_next));
    p = std::move(p_next);
    Hp = std::move(Hp_next);

    const Vector& yj = ys.back();
    const Vector& rj = rs.back();
    const double rj_norm = rj.norm();
    raise_M(std::max({safe_ratio(Hp.norm(), p.norm()), safe_ratio(Hy_next.norm(), yj.norm()),
                      safe_ratio(Hr_next.norm(), rj_norm)}));
    if (params.trace) params.trace({j, rj_norm, prm.M});

    pHbarp = p.dot(Hp) + 2.0 * eps * p.squaredNorm();
    if (!std::isfinite(pHbarp) || !std::isfinite(rj_norm)) {
      throw ContractViolation("capped_cg: non-finite recurrence");
    }
    if (yj.dot(Hbar_y) <= eps * yj.squaredNorm()) {
      return finish(DirectionType::NC, CgExit::IterateCurvature, yj, j);
    }
    if (rj_norm <= prm.zeta_hat * r0_norm) {
      res.residual_norm = rj_norm;
      return finish(DirectionType::SOL, CgExit::Converged, yj, j);
    }
    if (pHbarp <= eps * p.squaredNorm()) {
      return finish(DirectionType::NC, CgExit::DirectionCurvature, p, j);
    }
    if (std::log(rj_norm / r0_norm) >= 0.5 * std::log(prm.T) + 0.5 * static_cast<double>(j) * std::log1p(-prm.tau)) {
      const double a_j = rj.squaredNorm() / pHbarp;
      const Vector y_ext = yj + a_j * p;
      const Vector r_ext = rj + a_j * (Hp + 2.0 * eps * p);
      for (std::size_t i = 0; i < j; ++i) {
        const Vector diff = y_ext - ys[i];
        const double dn2 = diff.squaredNorm();
        if (dn2 > 0.0 && diff.dot(r_ext - rs[i]) <= eps * dn2) {
          res.extraction_index = i;
          return finish(DirectionType::NC, CgExit::SlowDecay, diff, j);
        }
      }
      throw ContractViolation("capped_cg: slow residual decay detected but no extraction index qualifies");
    }
  }
}

}  // namespace ncg

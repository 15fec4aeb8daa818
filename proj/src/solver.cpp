#include "ncg/solver.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace ncg {

const char* to_string(StepClass c) {
  switch (c) {
    case StepClass::K1: return "K1";
    case StepClass::K2: return "K2";
    case StepClass::K3: return "K3";
    case StepClass::K4: return "K4";
    case StepClass::K5: return "K5";
    case StepClass::Terminal: return "T";
  }
  return "?";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::FirstOrderAndCertified: return "FirstOrderAndCertified";
    case Termination::CertifiedAtCurrentPoint: return "CertifiedAtCurrentPoint";
    case Termination::MaxIters: return "MaxIters";
    case Termination::ContractViolation: return "ContractViolation";
  }
  return "?";
}

std::size_t RunReport::iterations() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.step_class != StepClass::Terminal ? 1 : 0;
  return n;
}

double SolverConfig::resolved_eps_H() const { return eps_H ? *eps_H : std::sqrt(L_H * eps_g); }

void SolverConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SolverConfig: ") + what);
  };
  require(eps_g > 0.0 && eps_g < 1.0, "eps_g must lie in (0,1)");
  const double eh = resolved_eps_H();
  require(eh > 0.0 && eh < 1.0, "eps_H must lie in (0,1); set it explicitly when L_H = 0 or L_H * eps_g >= 1");
  require(theta > 0.0 && theta < 1.0, "theta must lie in (0,1)");
  require(eta > 0.0, "eta must be positive");
  require(U_H > 0.0 && std::isfinite(U_H), "U_H must be positive");
  require(zeta > 0.0 && zeta < std::min(1.0, U_H), "zeta must lie in (0, min(1, U_H))");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  const double lo = (2.0 - std::sqrt(3.0)) * (2.0 - std::sqrt(3.0));
  require(theta_tilde > lo && theta_tilde < 1.0, "theta_tilde must lie in ((2-sqrt 3)^2, 1)");
  require(L_H >= 0.0, "L_H must be nonnegative");
  require(max_ls_trials > 0, "max_ls_trials must be positive");
}

Vector scale_nc_direction(const Vector& d_raw, const HessianOperator& H, const Vector& g) {
  const double dn = d_raw.norm();
  if (!(dn > 0.0)) throw std::invalid_argument("scale_nc_direction: zero direction");
  const double curv = std::abs(d_raw.dot(H.apply(d_raw))) / (dn * dn);
  return (-sign_nonneg(d_raw.dot(g)) * curv / dn) * d_raw;
}

Vector scale_meo_direction(const Vector& v, double vHv, const Vector& g) {
  if (std::abs(v.norm() - 1.0) > 1e-8) throw std::invalid_argument("scale_meo_direction: v must be a unit vector");
  return (-sign_nonneg(v.dot(g)) * std::abs(vHv)) * v;
}

Vector scale_meo_direction(const Vector& v, const HessianOperator& H, const Vector& g) {
  if (std::abs(v.norm() - 1.0) > 1e-8) throw std::invalid_argument("scale_meo_direction: v must be a unit vector");
  return scale_meo_direction(v, v.dot(H.apply(v)), g);
}

DecreaseConstants decrease_constants(double eta, double theta, double zeta, double theta_tilde, double L_H) {
  DecreaseConstants c;
  const double lh = L_H + eta;
  c.c_sol = eta / 6.0 * std::min(std::pow(1.0 + 2.0 * L_H, -1.5), std::pow(3.0 * theta * theta * (1.0 - zeta) / (4.0 * lh), 1.5));
  c.c_nc = eta / 6.0 * std::min(std::pow(3.0 * theta / (2.0 * lh), 3.0), 1.0);
  c.cbar_sol = eta / 6.0 * std::pow(3.0 * (1.0 - zeta) / (4.0 * L_H * lh), 1.5);
  c.cbar_nc = eta / 6.0 * std::pow(3.0 * theta_tilde / (4.0 * lh), 3.0);
  return c;
}

std::uint64_t iteration_bound(double f0_minus_flow, double L_H, const DecreaseConstants& c, double eps,
                              Variant variant) {
  if (!(L_H > 0.0) || !(eps > 0.0)) throw std::invalid_argument("iteration_bound: L_H and eps must be positive");
  const double l32 = std::pow(L_H, 1.5);
  const double gap = std::max(f0_minus_flow, 0.0);
  double bound;
  if (variant == Variant::LineSearch) {
    const double m = std::min({c.c_sol / (64.0 * l32), 8.0 * l32 * c.c_sol, l32 * c.c_nc / 8.0});
    bound = std::ceil(3.0 * gap / m * std::pow(eps, -1.5)) + 5.0;
  } else {
    const double m = std::min(c.cbar_sol, c.cbar_nc / 8.0) * l32;
    bound = 2.0 * std::ceil(gap / m * std::pow(eps, -1.5)) + 3.0;
  }
  constexpr double top = static_cast<double>(std::numeric_limits<std::uint64_t>::max());
  return bound >= top || !std::isfinite(bound) ? std::numeric_limits<std::uint64_t>::max()
                                               : static_cast<std::uint64_t>(bound);
}

long j_sol_bound(double theta, double zeta, double eps_H, double U_g, double L_H, double eta) {
  const double arg = 3.0 * (1.0 - zeta) * eps_H * eps_H / (4.4 * U_g * (L_H + eta));
  return static_cast<long>(std::ceil(0.5 * std::log(arg) / std::log(theta)));
}

long j_nc_bound(double theta, double L_H, double eta) {
  return static_cast<long>(std::ceil(std::log(3.0 / (2.0 * (L_H + eta))) / std::log(theta)));
}

double termination_gradient_bound(double L_H, double eps_g, double eps_H) {
  return L_H / 2.0 * (eps_g * eps_g) / (eps_H * eps_H) + 4.0 * eps_g;
}

namespace {

double spectral_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix assemble(const HessianOperator& H) {
  const auto n = static_cast<Eigen::Index>(H.dim());
  Matrix out(n, n);
  Vector e = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    out.col(j) = H.apply(e);
    e[j] = 0.0;
  }
  return out;
}

// Outcome of one attempt at iteration k.
struct Attempt {
  IterationRecord rec;
  std::optional<Termination> stop;
  Vector x_next;             // the step target, or the returned point on termination
  std::optional<double> f_ls_next;  // metered full f at x_next, reusable by the next line search
  Vector g;
};

class Driver {
 public:
  Driver(const ObjectiveOracle& oracle, const SamplingPolicy& policy, const SolverConfig& config, Variant variant,
         const std::function<void(const IterationRecord&)>& sink)
      : oracle_(oracle),
        policy_(policy),
        cfg_(config),
        variant_(variant),
        sink_(sink),
        sampler_(oracle, policy),
        rng_(config.seed),
        eps_g_(config.eps_g),
        eps_H_(config.resolved_eps_H()),
        dc_(decrease_constants(config.eta, config.theta, config.zeta, config.theta_tilde, config.L_H)),
        exact_(policy.mode == SamplingMode::Exact) {}

  RunReport run(const Vector& x0) {
    Vector x = x0;
    const double f0 = oracle_.audit_f(x0);
    std::optional<double> cached_f;
    try {
      for (std::size_t k = 0;; ++k) {
        if (k >= cfg_.max_outer_iters) {
          report_.termination = Termination::MaxIters;
          break;
        }
        Attempt a = attempt(k, x, cached_f, true);
        for (int redo = 0; !a.stop && needs_redo(a); ++redo) {
          if (redo >= 4) break;
          sampler_.set_grad_batch(4 * sampler_.grad_batch());
          ++report_.redos;
          a = attempt(k, x, cached_f, false);
        }
        if (a.stop) {
          report_.termination = *a.stop;
          a.rec.step_class = StepClass::Terminal;
          push(std::move(a.rec));
          x = a.x_next;
          break;
        }
        push(std::move(a.rec));
        x = std::move(a.x_next);
        cached_f = a.f_ls_next;
      }
    } catch (const ContractViolation& e) {
      report_.termination = Termination::ContractViolation;
      report_.violation = e.what();
    }
    finish(x, f0);
    return std::move(report_);
  }

 private:
  void audit_fail(const std::string& msg) {
    report_.audit_failures.push_back(msg);
    if (cfg_.audit && exact_) throw ContractViolation(msg);
  }

  // Completes the previous record once g_{k} is known: K2/K3 split and the
  // retrospective accuracy check.
  void settle_previous(double g_next_norm) {
    if (!pending_) return;
    IterationRecord& r = *pending_;
    if (r.step_class == StepClass::K2 || r.step_class == StepClass::K3) {
      r.step_class = g_next_norm < eps_g_ ? StepClass::K2 : StepClass::K3;
    }
    if (r.grad_error && r.hess_error && r.grad_est_norm) {
      ConditionContext ctx{eps_g_, eps_H_, cfg_.zeta, cfg_.eta, cfg_.L_H, r.d_norm, *r.grad_est_norm, g_next_norm};
      const auto which = variant_ == Variant::LineSearch ? AccuracyCondition::Cond2 : AccuracyCondition::Cond3;
      r.condition_ok = verify_condition(*r.grad_error, *r.hess_error, ctx, which);
    }
  }

  void flush_pending() {
    if (!pending_) return;
    if (sink_) sink_(*pending_);
    report_.records.push_back(std::move(*pending_));
    pending_.reset();
  }

  void push(IterationRecord rec) {
    flush_pending();
    pending_ = std::move(rec);
  }

  bool needs_redo(const Attempt& a) {
    if (!(cfg_.audit && cfg_.retrospective_redo) || policy_.mode != SamplingMode::SubBoth) return false;
    if (sampler_.grad_batch() >= oracle_.num_components() || !a.rec.grad_error) return false;
    // The next estimate is not yet available; the exact gradient norm stands in for it.
    const double g_next = oracle_.audit_grad(a.x_next).norm();
    ConditionContext ctx{eps_g_, eps_H_, cfg_.zeta, cfg_.eta, cfg_.L_H, a.rec.d_norm, a.g.norm(), g_next};
    const auto which = variant_ == Variant::LineSearch ? AccuracyCondition::Cond2 : AccuracyCondition::Cond3;
    return *a.rec.grad_error > gradient_error_bound(ctx, which);
  }

  Attempt attempt(std::size_t k, const Vector& x, std::optional<double> cached_f, bool first) {
    Attempt a;
    IterationRecord& rec = a.rec;
    rec.k = k;
    rec.ledger = oracle_.ledger().snapshot();
    rec.f_value = oracle_.audit_f(x);
    std::optional<Vector> true_g;
    if (cfg_.audit) {
      true_g = oracle_.audit_grad(x);
      rec.grad_true_norm = true_g->norm();
    }

    auto est = sampler_.draw(x, rng_);
    const Vector& g = est.g;
    const double gn = g.norm();
    rec.grad_est_norm = gn;
    a.g = g;
    if (first) {
      settle_previous(gn);
      if (prev_gnorm_) sampler_.observe_gradient_norms(gn, *prev_gnorm_);
      prev_gnorm_ = gn;
    }
    const HessianOperator H = sampler_.hessian(x, est);
    if (cfg_.audit) {
      rec.grad_error = (g - *true_g).norm();
      rec.hess_error = exact_ || est.hess_set.empty()
                           ? 0.0
                           : spectral_norm(assemble(oracle_.audit_hessian(x, est.hess_set)) - assemble(oracle_.audit_hessian(x)));
    }

    Vector d;
    DirectionType dt = DirectionType::SOL;
    StepClass cls = StepClass::K3;
    auto call_meo = [&]() {
      MEOResult m = meo_lanczos(H, cfg_.U_H, eps_H_, cfg_.delta, rng_);
      rec.meo_iters += m.iterations;
      return m;
    };

    if (gn >= eps_g_) {
      CappedCGParams cp;
      cp.epsilon = eps_H_;
      cp.zeta = cfg_.zeta;
      cp.M_init = cfg_.U_H;
      const CappedCGResult cg = capped_cg(H, g, cp);
      rec.cg_iters = cg.iterations;
      if (cg.d_type == DirectionType::NC) {
        d = scale_nc_direction(cg.d, H, g);
        dt = DirectionType::NC;
        cls = StepClass::K5;
      } else {
        d = cg.d;
        if (d.norm() <= eps_g_ / eps_H_) {
          cls = StepClass::K4;
          if (!cfg_.skip_small_step_block) {
            const MEOResult m = call_meo();
            if (m.outcome == MeoOutcome::Certificate) {
              rec.d_type = DirectionType::SOL;
              rec.d_norm = d.norm();
              rec.alpha = 1.0;
              a.stop = Termination::FirstOrderAndCertified;
              a.x_next = x + d;
              return a;
            }
            d = scale_meo_direction(m.v, m.lambda, g);
            dt = DirectionType::NC;
            cls = StepClass::K5;
            rec.from_meo = true;
          }
        }
      }
    } else {
      dt = DirectionType::NC;
      cls = StepClass::K1;
      const MEOResult m = call_meo();
      if (m.outcome == MeoOutcome::Certificate) {
        rec.d_type = DirectionType::NC;
        a.stop = Termination::CertifiedAtCurrentPoint;
        a.x_next = x;
        return a;
      }
      d = scale_meo_direction(m.v, m.lambda, g);
      rec.from_meo = true;
    }

    rec.d_type = dt;
    rec.step_class = cls;
    rec.d_norm = d.norm();
    const bool ls_full = policy_.ls_eval == LineSearchEval::Full || est.grad_set.empty();
    if (variant_ == Variant::LineSearch) {
      const ScalarFn f = [&](const Vector& z) { return sampler_.line_search_f(z, est); };
      const std::optional<double> fx = ls_full ? cached_f : std::nullopt;
      try {
        const LineSearchResult ls = dt == DirectionType::SOL
                                        ? line_search_sol(f, x, d, cfg_.eta, cfg_.theta, cfg_.max_ls_trials, fx)
                                        : line_search_nc(f, x, d, cfg_.eta, cfg_.theta, cfg_.max_ls_trials, fx);
        rec.alpha = ls.alpha;
        rec.ls_trials = ls.trials;
        if (ls_full) a.f_ls_next = ls.f_trial;
      } catch (const ContractViolation& e) {
        // Resampling cannot repair an exact-oracle failure; with sampled
        // estimates the step is rejected and larger batches are drawn.
        if (exact_) throw;
        sampler_.escalate();
        report_.audit_failures.push_back(fmt::format("iteration {}: {}; step rejected, batches now {}/{}", k,
                                                     e.what(), sampler_.grad_batch(), sampler_.hess_batch()));
        rec.alpha = 0.0;
        rec.ls_trials = cfg_.max_ls_trials;
      }
    } else if (cfg_.constant_steps) {
      rec.alpha = dt == DirectionType::SOL ? cfg_.constant_steps->sol : cfg_.constant_steps->nc;
    } else {
      if (!(cfg_.L_H > 0.0)) throw std::invalid_argument("fixed-step driver requires L_H > 0");
      rec.alpha = dt == DirectionType::SOL
                      ? fixed_step_sol(rec.d_norm, eps_H_, cfg_.zeta, cfg_.L_H, cfg_.eta)
                      : fixed_step_nc(rec.d_norm, cfg_.delta_H_step, cfg_.delta_g_step, cfg_.L_H, cfg_.eta, cfg_.theta_tilde);
    }
    a.x_next = x + rec.alpha * d;
    if (cfg_.audit) audit_step(rec, rec.f_value - oracle_.audit_f(a.x_next));
    return a;
  }

  void audit_step(const IterationRecord& rec, double decrease) {
    const double eh3 = eps_H_ * eps_H_ * eps_H_;
    const double slack = 1e-12 * std::max(1.0, std::abs(rec.f_value));
    const bool formula_steps = variant_ == Variant::LineSearch || !cfg_.constant_steps;
    auto check_floor = [&](double floor, const char* what) {
      if (decrease < floor - slack) {
        audit_fail(fmt::format("iteration {}: {} decrease {:.6g} below floor {:.6g}", rec.k, what, decrease, floor));
      }
    };
    if (formula_steps && !(decrease > -slack)) {
      audit_fail(fmt::format("iteration {}: objective increased by {:.6g}", rec.k, -decrease));
    }
    if (variant_ == Variant::LineSearch) {
      if (rec.d_type == DirectionType::NC) {
        check_floor(rec.from_meo ? dc_.c_nc / 8.0 * eh3 : dc_.c_nc * eh3, rec.from_meo ? "eigen-oracle step" : "negative-curvature step");
      }
      if (cfg_.U_g && cfg_.L_H > 0.0) {
        if (rec.d_type == DirectionType::SOL && rec.step_class != StepClass::K4) {
          const long j = static_cast<long>(rec.ls_trials) - 1;
          const long cap = j_sol_bound(cfg_.theta, cfg_.zeta, eps_H_, *cfg_.U_g, cfg_.L_H, cfg_.eta);
          if (j > std::max(cap, 0L) + 1) audit_fail(fmt::format("iteration {}: backtracking count {} exceeds {}", rec.k, j, cap + 1));
        } else if (rec.d_type == DirectionType::NC) {
          const long j = (static_cast<long>(rec.ls_trials) - 1) / 2;
          const long cap = j_nc_bound(cfg_.theta, cfg_.L_H, cfg_.eta);
          if (j > std::max(cap, 0L) + 1) audit_fail(fmt::format("iteration {}: backtracking count {} exceeds {}", rec.k, j, cap + 1));
        }
      }
    } else if (formula_steps) {
      if (rec.d_type == DirectionType::NC) {
        check_floor(rec.from_meo ? dc_.cbar_nc / 8.0 * eh3 : dc_.cbar_nc * eh3, rec.from_meo ? "eigen-oracle step" : "negative-curvature step");
      } else if (rec.d_norm >= eps_g_ / eps_H_) {
        check_floor(dc_.cbar_sol * eh3, "Newton step");
      }
    }
  }

  void finish(const Vector& x, double f0) {
    // A final step's successor gradient is never estimated, so K2/K3 stays provisional.
    flush_pending();
    IterationRecord last;
    last.k = report_.records.size();
    last.ledger = oracle_.ledger().snapshot();
    last.f_value = oracle_.audit_f(x);
    const double gtrue = oracle_.audit_grad(x).norm();
    if (cfg_.audit) last.grad_true_norm = gtrue;
    last.step_class = StepClass::Terminal;
    if (sink_) sink_(last);
    report_.records.push_back(last);
    report_.x_final = x;
    report_.f_final = last.f_value;
    report_.grad_true_norm_final = gtrue;

    if (!cfg_.audit) return;
    try {
      if (report_.termination == Termination::FirstOrderAndCertified ||
          report_.termination == Termination::CertifiedAtCurrentPoint) {
        const double bound = termination_gradient_bound(cfg_.L_H, eps_g_, eps_H_);
        if (gtrue > bound) audit_fail(fmt::format("termination gradient {:.6g} exceeds {:.6g}", gtrue, bound));
      }
      if (cfg_.f_low && cfg_.L_H > 0.0) {
        const std::uint64_t kbar = iteration_bound(f0 - *cfg_.f_low, cfg_.L_H, dc_, eps_g_, variant_);
        const std::size_t used = report_.records.size() - 1;
        if (used > kbar) audit_fail(fmt::format("{} iterations exceed the bound {}", used, kbar));
      }
    } catch (const ContractViolation& e) {
      report_.termination = Termination::ContractViolation;
      report_.violation = e.what();
    }
  }

  const ObjectiveOracle& oracle_;
  SamplingPolicy policy_;
  SolverConfig cfg_;
  Variant variant_;
  const std::function<void(const IterationRecord&)>& sink_;
  SampledOracle sampler_;
  Rng rng_;
  double eps_g_;
  double eps_H_;
  DecreaseConstants dc_;
  bool exact_;
  RunReport report_;
  std::optional<IterationRecord> pending_;
  std::optional<double> prev_gnorm_;
};

}  // namespace

RunReport run(const ObjectiveOracle& oracle, const Vector& x0, const SamplingPolicy& policy,
              const SolverConfig& config, Variant variant, const std::function<void(const IterationRecord&)>& sink) {
  config.validate();
  if (static_cast<Index>(x0.size()) != oracle.dim()) throw std::invalid_argument("run: x0 dimension mismatch");
  Driver driver(oracle, policy, config, variant, sink);
  return driver.run(x0);
}

}  // namespace ncg

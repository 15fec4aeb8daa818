#pragma once

#include "ncg/oracle.hpp"

namespace ncg {

/// Uniform sample of `batch` distinct indices from {0..n-1}, sorted ascending.
/// A batch larger than n is clamped to n (the whole set) and noted on stderr.
IndexSet sample_indices(Index n, Index batch, Rng& rng);

/// ceil(16 K_g^2 / delta_g^2 * ln(1/delta_bar))
Index grad_sample_size(double K_g, double delta_g, double delta_bar);
/// ceil(16 K_H^2 / delta_H^2 * ln(2d/delta_bar))
Index hess_sample_size(double K_H, double delta_H, Index d, double delta_bar);

struct AccuracyTargets {
  double delta_g = 0.0;
  double delta_H = 0.0;
};

/// Iteration-independent accuracy floors:
///   delta_g = (1-zeta)/8 * min(3 L_H eps / (65 (L_H+eta)), eps),
///   delta_H = (1-zeta)/4 * sqrt(L_H eps).
AccuracyTargets floor_targets(double eps, double L_H, double zeta, double eta);

/// Gradient batch rule with factor 1.2: shrink when ||g_now|| >= 1.2 ||g_prev||,
/// grow when ||g_now|| <= ||g_prev|| / 1.2, otherwise keep. Rounds up in both
/// directions and clamps to [min(min_batch, n), n].
Index adapt_grad_batch(Index prev_batch, double g_norm_now, double g_norm_prev, Index n,
                       Index min_batch = 32);

enum class AccuracyCondition { Cond2, Cond3 };

struct ConditionContext {
  double eps_g = 0.0;
  double eps_H = 0.0;
  double zeta = 0.5;
  double eta = 0.1;
  double L_H = 0.0;      ///< used by Cond3 only
  double norm_d = 0.0;
  double norm_g = 0.0;
  double norm_g_next = 0.0;
};

/// Bound on the gradient error allowed at this iteration.
double gradient_error_bound(const ConditionContext& ctx, AccuracyCondition which);
/// True iff delta_g <= gradient_error_bound and delta_H <= (1-zeta) eps_H / 4.
bool verify_condition(double delta_g_used, double delta_H_used, const ConditionContext& ctx,
                      AccuracyCondition which);

enum class SamplingMode { Exact, SubHessianOnly, SubBoth };
enum class LineSearchEval { Full, GradientSample };

struct SamplingPolicy {
  SamplingMode mode = SamplingMode::Exact;
  Index grad_batch = 0;       ///< initial/current gradient batch (SubBoth)
  Index hess_batch = 0;       ///< Hessian batch (SubHessianOnly, SubBoth)
  bool adaptive = false;      ///< apply adapt_grad_batch after each step
  Index min_grad_batch = 32;
  LineSearchEval ls_eval = LineSearchEval::Full;
};

/// Per-iteration estimates drawn under a SamplingPolicy. Owns the current
/// gradient batch, so a run should use one instance.
class SampledOracle {
 public:
  SampledOracle(const ObjectiveOracle& oracle, SamplingPolicy policy);

  struct Estimate {
    Vector g;
    IndexSet grad_set;  ///< empty means the full set
    IndexSet hess_set;  ///< empty means the full set
  };

  /// Draws fresh batches (gradient first, then Hessian) and evaluates g_k.
  Estimate draw(const Vector& x, Rng& rng);
  HessianOperator hessian(const Vector& x, const Estimate& est) const;
  /// Objective used by the line search: full f, or the gradient batch mean.
  double line_search_f(const Vector& x, const Estimate& est) const;
  /// Updates the gradient batch from consecutive estimated gradient norms.
  void observe_gradient_norms(double g_now, double g_prev);

  /// Doubles the sub-sampled batches, clamped to n; used after a rejected step.
  void escalate();
  Index hess_batch() const { return policy_.hess_batch; }

  /// Overrides the current gradient batch (clamped to [1, n]).
  void set_grad_batch(Index batch);
  Index grad_batch() const { return grad_batch_; }
  const SamplingPolicy& policy() const { return policy_; }
  const ObjectiveOracle& oracle() const { return oracle_; }

 private:
  const ObjectiveOracle& oracle_;
  SamplingPolicy policy_;
  Index grad_batch_;
  IndexSet all_;
};

}  // namespace ncg

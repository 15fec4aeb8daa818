#include "ncg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace ncg {

IndexSet sample_indices(Index n, Index batch, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_indices: empty population");
  if (batch == 0) throw std::invalid_argument("sample_indices: batch must be positive");
  if (batch > n) {
    std::cerr << "note: sample batch " << batch << " exceeds population " << n << "; using the full set\n";
    batch = n;
  }
  if (batch == n) return full_index_set(n);
  // Partial Fisher-Yates over a lazily materialized permutation.
  IndexSet perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index k = 0; k < batch; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(perm[k], perm[pick(rng)]);
  }
  perm.resize(batch);
  std::sort(perm.begin(), perm.end());
  return perm;
}

Index grad_sample_size(double K_g, double delta_g, double delta_bar) {
  if (!(K_g > 0.0 && delta_g > 0.0 && delta_bar > 0.0)) throw std::invalid_argument("grad_sample_size: inputs must be positive");
  return static_cast<Index>(std::ceil(16.0 * K_g * K_g / (delta_g * delta_g) * std::log(1.0 / delta_bar)));
}

Index hess_sample_size(double K_H, double delta_H, Index d, double delta_bar) {
  if (!(K_H > 0.0 && delta_H > 0.0 && delta_bar > 0.0) || d == 0) {
    throw std::invalid_argument("hess_sample_size: inputs must be positive");
  }
  return static_cast<Index>(
      std::ceil(16.0 * K_H * K_H / (delta_H * delta_H) * std::log(2.0 * static_cast<double>(d) / delta_bar)));
}

AccuracyTargets floor_targets(double eps, double L_H, double zeta, double eta) {
  AccuracyTargets t;
  t.delta_g = (1.0 - zeta) / 8.0 * std::min(3.0 * L_H * eps / (65.0 * (L_H + eta)), eps);
  t.delta_H = (1.0 - zeta) / 4.0 * std::sqrt(L_H * eps);
  return t;
}

Index adapt_grad_batch(Index prev_batch, double g_norm_now, double g_norm_prev, Index n, Index min_batch) {
  if (prev_batch == 0 || n == 0) throw std::invalid_argument("adapt_grad_batch: sizes must be positive");
  Index next = prev_batch;
  // Integer forms of ceil(prev / 1.2) and ceil(prev * 1.2) avoid rounding in 1.2.
  if (g_norm_now >= 1.2 * g_norm_prev) {
    next = (5 * prev_batch + 5) / 6;
  } else if (g_norm_now * 1.2 <= g_norm_prev) {
    next = (6 * prev_batch + 4) / 5;
  }
  const Index lo = std::min(min_batch, n);
  return std::clamp(next, lo, n);
}

double gradient_error_bound(const ConditionContext& ctx, AccuracyCondition which) {
  const double inner = std::max(ctx.eps_g, std::min({ctx.eps_H * ctx.norm_d, ctx.norm_g, ctx.norm_g_next}));
  double bound = inner;
  if (which == AccuracyCondition::Cond3) {
    bound = std::min(3.0 * ctx.eps_H * ctx.eps_H / (65.0 * (ctx.L_H + ctx.eta)), inner);
  }
  return (1.0 - ctx.zeta) / 8.0 * bound;
}

bool verify_condition(double delta_g_used, double delta_H_used, const ConditionContext& ctx,
                      AccuracyCondition which) {
  return delta_g_used <= gradient_error_bound(ctx, which) && delta_H_used <= (1.0 - ctx.zeta) / 4.0 * ctx.eps_H;
}

SampledOracle::SampledOracle(const ObjectiveOracle& oracle, SamplingPolicy policy)
    : oracle_(oracle), policy_(policy), all_(full_index_set(oracle.num_components())) {
  const Index n = oracle_.num_components();
  if (policy_.mode != SamplingMode::Exact && policy_.hess_batch == 0) {
    throw std::invalid_argument("SampledOracle: Hessian batch must be positive");
  }
  if (policy_.mode == SamplingMode::SubBoth && policy_.grad_batch == 0) {
    throw std::invalid_argument("SampledOracle: gradient batch must be positive");
  }
  policy_.hess_batch = std::min(policy_.hess_batch, n);
  grad_batch_ = std::min(policy_.grad_batch, n);
}

SampledOracle::Estimate SampledOracle::draw(const Vector& x, Rng& rng) {
  const Index n = oracle_.num_components();
  Estimate est;
  if (policy_.mode == SamplingMode::SubBoth && grad_batch_ < n) {
    est.grad_set = sample_indices(n, grad_batch_, rng);
  }
  if (policy_.mode != SamplingMode::Exact && policy_.hess_batch < n) {
    est.hess_set = sample_indices(n, policy_.hess_batch, rng);
  }
  est.g = oracle_.eval_grad(x, est.grad_set.empty() ? std::span<const Index>(all_) : std::span<const Index>(est.grad_set));
  return est;
}

HessianOperator SampledOracle::hessian(const Vector& x, const Estimate& est) const {
  return oracle_.hessian(x, est.hess_set.empty() ? all_ : est.hess_set);
}

double SampledOracle::line_search_f(const Vector& x, const Estimate& est) const {
  if (policy_.ls_eval == LineSearchEval::GradientSample && !est.grad_set.empty()) {
    return oracle_.eval_f(x, est.grad_set);
  }
  return oracle_.eval_f(x, all_);
}

void SampledOracle::observe_gradient_norms(double g_now, double g_prev) {
  if (policy_.mode != SamplingMode::SubBoth || !policy_.adaptive) return;
  grad_batch_ = adapt_grad_batch(grad_batch_, g_now, g_prev, oracle_.num_components(), policy_.min_grad_batch);
}

void SampledOracle::escalate() {
  const Index n = oracle_.num_components();
  if (policy_.mode == SamplingMode::SubBoth) grad_batch_ = std::min(2 * grad_batch_, n);
  if (policy_.mode != SamplingMode::Exact) policy_.hess_batch = std::min(2 * policy_.hess_batch, n);
}

void SampledOracle::set_grad_batch(Index batch) {
  grad_batch_ = std::clamp<Index>(batch, 1, oracle_.num_components());
}

}  // namespace ncg

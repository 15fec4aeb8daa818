#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <span>

#include "ncg/types.hpp"

namespace ncg {

/// Cumulative oracle-call counts at one instant.
struct LedgerSnapshot {
  std::uint64_t f_calls = 0;
  std::uint64_t grad_calls = 0;
  std::uint64_t hv_calls = 0;

  /// Propagations: one per component value, two per component gradient,
  /// four per component Hessian-vector product.
  std::uint64_t props() const { return f_calls + 2 * grad_calls + 4 * hv_calls; }
};

/// Counts component evaluations. Counters are atomic (relaxed increments), so
/// concurrent evaluations through one oracle are tallied correctly.
class OracleLedger {
 public:
  void add_f(std::uint64_t n) { f_.fetch_add(n, std::memory_order_relaxed); }
  void add_grad(std::uint64_t n) { grad_.fetch_add(n, std::memory_order_relaxed); }
  void add_hv(std::uint64_t n) { hv_.fetch_add(n, std::memory_order_relaxed); }

  std::uint64_t f_calls() const { return f_.load(std::memory_order_relaxed); }
  std::uint64_t grad_calls() const { return grad_.load(std::memory_order_relaxed); }
  std::uint64_t hv_calls() const { return hv_.load(std::memory_order_relaxed); }
  std::uint64_t props() const { return snapshot().props(); }

  LedgerSnapshot snapshot() const { return {f_calls(), grad_calls(), hv_calls()}; }
  void reset();

 private:
  std::atomic<std::uint64_t> f_{0};
  std::atomic<std::uint64_t> grad_{0};
  std::atomic<std::uint64_t> hv_{0};
};

/// Implicit symmetric linear map v -> Hv.
class HessianOperator {
 public:
  using ApplyFn = std::function<void(const Vector& v, Vector& out)>;

  HessianOperator(Index dim, ApplyFn apply);

  static HessianOperator from_dense(Matrix h);

  Index dim() const { return dim_; }
  void apply(const Vector& v, Vector& out) const;
  Vector apply(const Vector& v) const;
  Vector operator*(const Vector& v) const { return apply(v); }

  /// Number of products formed through this operator (and its copies).
  std::uint64_t applications() const { return *applications_; }

 private:
  Index dim_;
  ApplyFn apply_;
  std::shared_ptr<std::uint64_t> applications_;
};

/// A smooth finite-sum objective: components f_1..f_n on R^d.
///
/// The batched evaluators return plain SUMS over the index set; averaging and
/// call accounting live in ObjectiveOracle. Implementations must be pure
/// functions of their arguments and safe to call concurrently.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual Index num_components() const = 0;
  virtual Index dim() const = 0;

  virtual double value_sum(const Vector& x, std::span<const Index> idx) const = 0;
  virtual void gradient_sum(const Vector& x, std::span<const Index> idx, Vector& out) const = 0;
  virtual void hvp_sum(const Vector& x, const Vector& v, std::span<const Index> idx,
                       Vector& out) const = 0;

  /// Returns a closure computing sum_i Hess f_i(x) v over idx for repeated v.
  /// Problems whose Hessians factor through x-only quantities override this to
  /// precompute them once; the default re-evaluates hvp_sum.
  virtual HessianOperator::ApplyFn hvp_closure(const Vector& x, IndexSet idx) const;
};

enum class Averaging {
  Mean,  ///< f = (1/n) sum f_i  (default)
  Sum,   ///< f = sum f_i
};

/// Metered access to a FiniteSumProblem. Every evaluation over an index set S
/// charges |S| component calls to the ledger; estimates over a subset are
/// scaled so they are unbiased for the selected objective form.
class ObjectiveOracle {
 public:
  explicit ObjectiveOracle(std::shared_ptr<const FiniteSumProblem> problem,
                           Averaging mode = Averaging::Mean);

  Index num_components() const { return problem_->num_components(); }
  Index dim() const { return problem_->dim(); }
  Averaging mode() const { return mode_; }
  const FiniteSumProblem& problem() const { return *problem_; }

  double eval_f(const Vector& x, std::span<const Index> idx) const;
  Vector eval_grad(const Vector& x, std::span<const Index> idx) const;
  Vector eval_hvp(const Vector& x, const Vector& v, std::span<const Index> idx) const;

  /// Subsampled Hessian at x over idx as an operator; each application is
  /// charged |idx| Hessian-vector calls.
  HessianOperator hessian(const Vector& x, IndexSet idx) const;

  double eval_f_full(const Vector& x) const;
  Vector eval_grad_full(const Vector& x) const;

  /// Unmetered full-objective evaluations for reporting and audits.
  double audit_f(const Vector& x) const;
  Vector audit_grad(const Vector& x) const;
  HessianOperator audit_hessian(const Vector& x) const;
  HessianOperator audit_hessian(const Vector& x, IndexSet idx) const;

  OracleLedger& ledger() const { return *ledger_; }

 private:
  double scale(std::size_t batch) const;
  void check(const Vector& x, std::span<const Index> idx) const;

  std::shared_ptr<const FiniteSumProblem> problem_;
  Averaging mode_;
  IndexSet all_;
  std::unique_ptr<OracleLedger> ledger_;
};

}  // namespace ncg

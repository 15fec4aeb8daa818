#include "ncg/oracle.hpp"

#include <cmath>
#include <numeric>

namespace ncg {

IndexSet full_index_set(Index n) {
  IndexSet idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

void OracleLedger::reset() {
  f_.store(0, std::memory_order_relaxed);
  grad_.store(0, std::memory_order_relaxed);
  hv_.store(0, std::memory_order_relaxed);
}

HessianOperator::HessianOperator(Index dim, ApplyFn apply)
    : dim_(dim), apply_(std::move(apply)), applications_(std::make_shared<std::uint64_t>(0)) {}

HessianOperator HessianOperator::from_dense(Matrix h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("HessianOperator: matrix must be square");
  const Index d = static_cast<Index>(h.rows());
  return HessianOperator(d, [h = std::move(h)](const Vector& v, Vector& out) { out.noalias() = h * v; });
}

void HessianOperator::apply(const Vector& v, Vector& out) const {
  if (static_cast<Index>(v.size()) != dim_) throw std::invalid_argument("HessianOperator: dimension mismatch");
  out.resize(v.size());
  apply_(v, out);
  ++*applications_;
  if (!out.allFinite()) throw ContractViolation("HessianOperator: non-finite matrix-vector product");
}

Vector HessianOperator::apply(const Vector& v) const {
  Vector out(v.size());
  apply(v, out);
  return out;
}

HessianOperator::ApplyFn FiniteSumProblem::hvp_closure(const Vector& x, IndexSet idx) const {
  return [this, x, idx = std::move(idx)](const Vector& v, Vector& out) { hvp_sum(x, v, idx, out); };
}

ObjectiveOracle::ObjectiveOracle(std::shared_ptr<const FiniteSumProblem> problem, Averaging mode)
    : problem_(std::move(problem)), mode_(mode), ledger_(std::make_unique<OracleLedger>()) {
  if (!problem_) throw std::invalid_argument("ObjectiveOracle: null problem");
  all_ = full_index_set(problem_->num_components());
}

double ObjectiveOracle::scale(std::size_t batch) const {
  const double b = static_cast<double>(batch);
  return mode_ == Averaging::Mean ? 1.0 / b : static_cast<double>(num_components()) / b;
}

void ObjectiveOracle::check(const Vector& x, std::span<const Index> idx) const {
  if (idx.empty()) throw std::invalid_argument("ObjectiveOracle: empty index set");
  if (static_cast<Index>(x.size()) != dim()) throw std::invalid_argument("ObjectiveOracle: dimension mismatch");
  const Index n = num_components();
  for (Index i : idx) {
    if (i >= n) throw std::out_of_range("ObjectiveOracle: component index out of range");
  }
}

double ObjectiveOracle::eval_f(const Vector& x, std::span<const Index> idx) const {
  check(x, idx);
  const double s = problem_->value_sum(x, idx);
  ledger_->add_f(idx.size());
  return scale(idx.size()) * s;
}

Vector ObjectiveOracle::eval_grad(const Vector& x, std::span<const Index> idx) const {
  check(x, idx);
  Vector g(dim());
  problem_->gradient_sum(x, idx, g);
  ledger_->add_grad(idx.size());
  return scale(idx.size()) * g;
}

Vector ObjectiveOracle::eval_hvp(const Vector& x, const Vector& v, std::span<const Index> idx) const {
  check(x, idx);
  if (v.size() != x.size()) throw std::invalid_argument("ObjectiveOracle: dimension mismatch");
  Vector hv(dim());
  problem_->hvp_sum(x, v, idx, hv);
  ledger_->add_hv(idx.size());
  return scale(idx.size()) * hv;
}

HessianOperator ObjectiveOracle::hessian(const Vector& x, IndexSet idx) const {
  check(x, idx);
  const double s = scale(idx.size());
  const std::uint64_t batch = idx.size();
  auto raw = problem_->hvp_closure(x, std::move(idx));
  OracleLedger* ledger = ledger_.get();
  return HessianOperator(dim(), [raw = std::move(raw), s, batch, ledger](const Vector& v, Vector& out) {
    raw(v, out);
    out *= s;
    ledger->add_hv(batch);
  });
}

double ObjectiveOracle::eval_f_full(const Vector& x) const { return eval_f(x, all_); }
Vector ObjectiveOracle::eval_grad_full(const Vector& x) const { return eval_grad(x, all_); }

double ObjectiveOracle::audit_f(const Vector& x) const {
  return scale(all_.size()) * problem_->value_sum(x, all_);
}

Vector ObjectiveOracle::audit_grad(const Vector& x) const {
  Vector g(dim());
  problem_->gradient_sum(x, all_, g);
  return scale(all_.size()) * g;
}

HessianOperator ObjectiveOracle::audit_hessian(const Vector& x) const { return audit_hessian(x, all_); }

HessianOperator ObjectiveOracle::audit_hessian(const Vector& x, IndexSet idx) const {
  check(x, idx);
  const double s = scale(idx.size());
  auto raw = problem_->hvp_closure(x, std::move(idx));
  return HessianOperator(dim(), [raw = std::move(raw), s](const Vector& v, Vector& out) {
    raw(v, out);
    out *= s;
  });
}

}  // namespace ncg

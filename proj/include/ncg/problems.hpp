#pragma once

#include <memory>

#include "ncg/nls_kernels.hpp"
#include "ncg/oracle.hpp"

namespace ncg {

/// Smoothness and boundedness constants used by the drivers and the
/// sample-size rules. L_H: Hessian Lipschitz constant; K_g, K_H: per-component
/// gradient and Hessian norm bounds; U_g, U_H: bounds on the (estimated)
/// gradient and Hessian norms along the iterates.
struct ProblemConstants {
  double L_H = 0.0;
  double K_g = 0.0;
  double K_H = 0.0;
  double U_g = 0.0;
  double U_H = 0.0;
};

struct NlsData {
  RowMatrix a;  ///< n x d feature rows
  Vector b;     ///< labels (classification) or targets (Welsch)

  Index rows() const { return static_cast<Index>(a.rows()); }
  Index cols() const { return static_cast<Index>(a.cols()); }
};

enum class Backend { Serial, Parallel };

/// f_i(x) = (b_i - phi(<a_i, x>))^2 for the sigmoid and tanh links, and
/// f_i(x) = (1 - exp(-alpha r_i^2)) / alpha with r_i = b_i - <a_i, x> for Welsch.
class NLSProblem final : public FiniteSumProblem {
 public:
  NLSProblem(std::shared_ptr<const NlsData> data, LinkSpec link, Backend backend = Backend::Parallel);

  Index num_components() const override { return data_->rows(); }
  Index dim() const override { return data_->cols(); }

  double value_sum(const Vector& x, std::span<const Index> idx) const override;
  void gradient_sum(const Vector& x, std::span<const Index> idx, Vector& out) const override;
  void hvp_sum(const Vector& x, const Vector& v, std::span<const Index> idx, Vector& out) const override;
  HessianOperator::ApplyFn hvp_closure(const Vector& x, IndexSet idx) const override;

  const NlsData& data() const { return *data_; }
  const LinkSpec& link() const { return link_; }
  Backend backend() const { return backend_; }

 private:
  std::shared_ptr<const NlsData> data_;
  LinkSpec link_;
  Backend backend_;
};

/// Per-row maxima of the closed-form smoothness and boundedness bounds for the link.
ProblemConstants constants_for(const NLSProblem& problem);

/// Random NLS instance. Rows are isotropic directions with norms drawn
/// uniformly from (0, max_row_norm]; labels come from a planted parameter
/// (Bernoulli in {0,1} for sigmoid, {-1,1} for tanh, noisy linear for Welsch).
NlsData make_synthetic_nls(Index n, Index d, double max_row_norm, Link kind, std::uint64_t seed);

/// f(x) = 1/2 x^T A x + c^T x as a single-component problem.
class QuadraticProblem final : public FiniteSumProblem {
 public:
  QuadraticProblem(Matrix a, Vector c);

  Index num_components() const override { return 1; }
  Index dim() const override { return static_cast<Index>(a_.rows()); }

  double value_sum(const Vector& x, std::span<const Index> idx) const override;
  void gradient_sum(const Vector& x, std::span<const Index> idx, Vector& out) const override;
  void hvp_sum(const Vector& x, const Vector& v, std::span<const Index> idx, Vector& out) const override;

  const Matrix& matrix() const { return a_; }
  /// L_H = 0; U_H = ||A||; U_g bounded on the ball of the given radius.
  ProblemConstants constants(double radius) const;

 private:
  Matrix a_;
  Vector c_;
};

/// Strict saddle with globally Lipschitz Hessian. In rotated coordinates
/// y = Q^T x:
///   f(x) = s(y_1) + 1/2 sum_{i>=2} lambda_i y_i^2,
///   s(t) = -(mu + rho/2) t^2 / 2 + (rho/6) ((1 + t^2)^{3/2} - 1),
/// so the Hessian at the origin has eigenvalues -mu, lambda_2, ..., |s'''| <= rho
/// everywhere, and f is bounded below.
class SaddleProblem final : public FiniteSumProblem {
 public:
  SaddleProblem(double mu, double rho, Vector lambdas, Matrix q);

  /// Q is Haar-random for seed != 0, identity for seed == 0; lambda_i = 1.
  static std::shared_ptr<SaddleProblem> make(Index dim, double mu, double rho, std::uint64_t seed);

  Index num_components() const override { return 1; }
  Index dim() const override { return static_cast<Index>(q_.rows()); }

  double value_sum(const Vector& x, std::span<const Index> idx) const override;
  void gradient_sum(const Vector& x, std::span<const Index> idx, Vector& out) const override;
  void hvp_sum(const Vector& x, const Vector& v, std::span<const Index> idx, Vector& out) const override;

  double mu() const { return mu_; }
  double rho() const { return rho_; }
  /// Unit eigenvector of the Hessian at the origin for eigenvalue -mu.
  Vector negative_direction() const { return q_.col(0); }
  double f_low() const;
  /// L_H = rho; U_g, U_H bounded on the ball of the given radius.
  ProblemConstants constants(double radius) const;

 private:
  double s(double t) const;
  double ds(double t) const;
  double d2s(double t) const;

  double mu_;
  double rho_;
  Vector lambdas_;  ///< size dim; entry 0 unused
  Matrix q_;
};

}  // namespace ncg

#include "ncg/problems.hpp"

#include <cmath>
#include <random>

namespace ncg {

NLSProblem::NLSProblem(std::shared_ptr<const NlsData> data, LinkSpec link, Backend backend)
    : data_(std::move(data)), link_(link), backend_(backend) {
  if (!data_) throw std::invalid_argument("NLSProblem: null data");
  if (data_->a.rows() != data_->b.size()) throw std::invalid_argument("NLSProblem: row/label count mismatch");
  if (data_->rows() == 0 || data_->cols() == 0) throw std::invalid_argument("NLSProblem: empty data");
  if (link_.kind == Link::Welsch && !(link_.alpha > 0.0)) throw std::invalid_argument("NLSProblem: Welsch alpha must be positive");
}

double NLSProblem::value_sum(const Vector& x, std::span<const Index> idx) const {
  return backend_ == Backend::Parallel ? kernels::parallel::value_sum(data_->a, data_->b, link_, x, idx)
                                       : kernels::serial::value_sum(data_->a, data_->b, link_, x, idx);
}

void NLSProblem::gradient_sum(const Vector& x, std::span<const Index> idx, Vector& out) const {
  if (backend_ == Backend::Parallel) {
    kernels::parallel::gradient_sum(data_->a, data_->b, link_, x, idx, out);
  } else {
    kernels::serial::gradient_sum(data_->a, data_->b, link_, x, idx, out);
  }
}

void NLSProblem::hvp_sum(const Vector& x, const Vector& v, std::span<const Index> idx, Vector& out) const {
  Vector w;
  if (backend_ == Backend::Parallel) {
    kernels::parallel::curvature_weights(data_->a, data_->b, link_, x, idx, w);
    kernels::parallel::weighted_gram_apply(data_->a, idx, w, v, out);
  } else {
    kernels::serial::curvature_weights(data_->a, data_->b, link_, x, idx, w);
    kernels::serial::weighted_gram_apply(data_->a, idx, w, v, out);
  }
}

HessianOperator::ApplyFn NLSProblem::hvp_closure(const Vector& x, IndexSet idx) const {
  auto w = std::make_shared<Vector>();
  if (backend_ == Backend::Parallel) {
    kernels::parallel::curvature_weights(data_->a, data_->b, link_, x, idx, *w);
  } else {
    kernels::serial::curvature_weights(data_->a, data_->b, link_, x, idx, *w);
  }
  return [data = data_, idx = std::move(idx), w, backend = backend_](const Vector& v, Vector& out) {
    if (backend == Backend::Parallel) {
      kernels::parallel::weighted_gram_apply(data->a, idx, *w, v, out);
    } else {
      kernels::serial::weighted_gram_apply(data->a, idx, *w, v, out);
    }
  };
}

ProblemConstants constants_for(const NLSProblem& problem) {
  const NlsData& data = problem.data();
  ProblemConstants c;
  const LinkSpec& link = problem.link();
  if (link.kind == Link::Welsch) {
    double amax = 0.0;
    for (Eigen::Index i = 0; i < data.a.rows(); ++i) amax = std::max(amax, data.a.row(i).norm());
    c.L_H = 9.0 * std::pow(link.alpha, 1.5) * amax * amax * amax;
    c.K_g = std::sqrt(2.0 / link.alpha) * amax;
    c.K_H = 2.0 * amax * amax;
  } else {
    for (Eigen::Index i = 0; i < data.a.rows(); ++i) {
      const double an = data.a.row(i).norm();
      const double bi = std::abs(data.b[i]);
      c.L_H = std::max(c.L_H, 2.0 * (bi + 4.0) * an * an * an);
      c.K_H = std::max(c.K_H, (bi + 2.0) * an * an);
      c.K_g = std::max(c.K_g, link.kind == Link::Sigmoid ? (bi + 1.0) * an / 2.0 : 2.0 * (bi + 1.0) * an);
    }
  }
  c.U_H = c.K_H;
  c.U_g = c.K_g;
  return c;
}

NlsData make_synthetic_nls(Index n, Index d, double max_row_norm, Link kind, std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("make_synthetic_nls: empty shape");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  NlsData data;
  data.a.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.b.resize(static_cast<Eigen::Index>(n));
  Vector xstar(static_cast<Eigen::Index>(d));
  for (auto& v : xstar) v = normal(rng);
  xstar *= 3.0 / xstar.norm();
  for (Eigen::Index i = 0; i < data.a.rows(); ++i) {
    Vector row(static_cast<Eigen::Index>(d));
    for (auto& v : row) v = normal(rng);
    const double scale = max_row_norm * (1.0 - unif(rng));
    row *= scale / row.norm();
    data.a.row(i) = row.transpose();
    const double z = row.dot(xstar) / std::max(max_row_norm, 1e-300);
    switch (kind) {
      case Link::Sigmoid:
        data.b[i] = unif(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : 0.0;
        break;
      case Link::Tanh:
        data.b[i] = unif(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : -1.0;
        break;
      case Link::Welsch:
        data.b[i] = row.dot(xstar) + 0.1 * normal(rng) + (unif(rng) < 0.05 ? 5.0 * normal(rng) : 0.0);
        break;
    }
  }
  return data;
}

QuadraticProblem::QuadraticProblem(Matrix a, Vector c) : a_(std::move(a)), c_(std::move(c)) {
  if (a_.rows() != a_.cols() || a_.rows() != c_.size() || a_.rows() == 0) {
    throw std::invalid_argument("QuadraticProblem: shape mismatch");
  }
  a_ = 0.5 * (a_ + a_.transpose()).eval();
}

double QuadraticProblem::value_sum(const Vector& x, std::span<const Index> idx) const {
  return static_cast<double>(idx.size()) * (0.5 * x.dot(a_ * x) + c_.dot(x));
}

void QuadraticProblem::gradient_sum(const Vector& x, std::span<const Index> idx, Vector& out) const {
  out = static_cast<double>(idx.size()) * (a_ * x + c_);
}

void QuadraticProblem::hvp_sum(const Vector&, const Vector& v, std::span<const Index> idx, Vector& out) const {
  out = static_cast<double>(idx.size()) * (a_ * v);
}

ProblemConstants QuadraticProblem::constants(double radius) const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a_, Eigen::EigenvaluesOnly);
  const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
  ProblemConstants c;
  c.L_H = 0.0;
  c.K_H = c.U_H = norm;
  c.K_g = c.U_g = norm * radius + c_.norm();
  return c;
}

SaddleProblem::SaddleProblem(double mu, double rho, Vector lambdas, Matrix q)
    : mu_(mu), rho_(rho), lambdas_(std::move(lambdas)), q_(std::move(q)) {
  if (!(mu_ > 0.0) || !(rho_ > 0.0)) throw std::invalid_argument("SaddleProblem: mu and rho must be positive");
  if (q_.rows() != q_.cols() || q_.rows() != lambdas_.size() || q_.rows() < 2) {
    throw std::invalid_argument("SaddleProblem: shape mismatch");
  }
}

std::shared_ptr<SaddleProblem> SaddleProblem::make(Index dim, double mu, double rho, std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("SaddleProblem: dim must be at least 2");
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix q = Matrix::Identity(d, d);
  if (seed != 0) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    q = qr.householderQ() * Matrix::Identity(d, d);
    const Vector diag = qr.matrixQR().diagonal();
    for (Eigen::Index j = 0; j < d; ++j) {
      if (diag[j] < 0) q.col(j) *= -1.0;
    }
  }
  return std::make_shared<SaddleProblem>(mu, rho, Vector::Ones(d), std::move(q));
}

double SaddleProblem::s(double t) const {
  const double u = 1.0 + t * t;
  return -(mu_ + 0.5 * rho_) * t * t / 2.0 + (rho_ / 6.0) * (u * std::sqrt(u) - 1.0);
}

double SaddleProblem::ds(double t) const {
  return t * (-(mu_ + 0.5 * rho_) + 0.5 * rho_ * std::sqrt(1.0 + t * t));
}

double SaddleProblem::d2s(double t) const {
  const double u = 1.0 + t * t;
  return -(mu_ + 0.5 * rho_) + 0.5 * rho_ * (1.0 + 2.0 * t * t) / std::sqrt(u);
}

double SaddleProblem::value_sum(const Vector& x, std::span<const Index> idx) const {
  const Vector y = q_.transpose() * x;
  double v = s(y[0]);
  for (Eigen::Index i = 1; i < y.size(); ++i) v += 0.5 * lambdas_[i] * y[i] * y[i];
  return static_cast<double>(idx.size()) * v;
}

void SaddleProblem::gradient_sum(const Vector& x, std::span<const Index> idx, Vector& out) const {
  Vector y = q_.transpose() * x;
  const double g0 = ds(y[0]);
  y = lambdas_.cwiseProduct(y);
  y[0] = g0;
  out = static_cast<double>(idx.size()) * (q_ * y);
}

void SaddleProblem::hvp_sum(const Vector& x, const Vector& v, std::span<const Index> idx, Vector& out) const {
  const double t = q_.col(0).dot(x);
  Vector w = q_.transpose() * v;
  const double w0 = d2s(t) * w[0];
  w = lambdas_.cwiseProduct(w);
  w[0] = w0;
  out = static_cast<double>(idx.size()) * (q_ * w);
}

double SaddleProblem::f_low() const {
  const double r = (2.0 * mu_ + rho_) / rho_;
  return s(std::sqrt(r * r - 1.0));
}

ProblemConstants SaddleProblem::constants(double radius) const {
  double lam_max = 0.0;
  for (Eigen::Index i = 1; i < lambdas_.size(); ++i) lam_max = std::max(lam_max, std::abs(lambdas_[i]));
  ProblemConstants c;
  c.L_H = rho_;
  // s'' is even and increasing in |t|, with minimum -mu at 0.
  c.U_H = c.K_H = std::max({mu_, d2s(radius), lam_max});
  const double slope = std::max(mu_ + 0.5 * rho_, 0.5 * rho_ * std::sqrt(1.0 + radius * radius));
  c.U_g = c.K_g = radius * std::hypot(slope, lam_max);
  return c;
}

}  // namespace ncg

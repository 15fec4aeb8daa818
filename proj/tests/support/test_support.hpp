#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "ncg/problems.hpp"

namespace ncg::testing {

inline Matrix random_orthogonal(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

/// Q diag(spectrum) Q^T with Haar Q.
inline Matrix planted_symmetric(const Vector& spectrum, Rng& rng) {
  const Matrix q = random_orthogonal(spectrum.size(), rng);
  Matrix h = q * spectrum.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

inline Vector uniform_spectrum(Eigen::Index d, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector s(d);
  for (auto& v : s) v = u(rng);
  return s;
}

inline Vector gaussian_vector(Eigen::Index d, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(d);
  for (auto& e : v) e = normal(rng);
  return v;
}

inline double lambda_min(const Matrix& h) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

using Fn = std::function<double(const Vector&)>;
using GradFn = std::function<Vector(const Vector&)>;

inline Vector fd_gradient(const Fn& f, const Vector& x, double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

inline Vector fd_hvp(const GradFn& grad, const Vector& x, const Vector& v, double h = 1e-5) {
  return (grad(x + h * v) - grad(x - h * v)) / (2 * h);
}

inline Matrix fd_hessian(const GradFn& grad, const Vector& x, double h = 1e-5) {
  const Eigen::Index d = x.size();
  Matrix hm(d, d);
  for (Eigen::Index i = 0; i < d; ++i) hm.col(i) = fd_hvp(grad, x, Vector::Unit(d, i), h);
  return 0.5 * (hm + hm.transpose());
}

inline double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

/// Reference NLS objective written directly from the loss definitions (mean over rows).
struct ReferenceNls {
  const NlsData& data;
  LinkSpec link;

  static double phi(Link k, double z) { return k == Link::Sigmoid ? 1.0 / (1.0 + std::exp(-z)) : std::tanh(z); }
  static double dphi(Link k, double z) {
    if (k == Link::Sigmoid) {
      const double s = phi(k, z);
      return s * (1 - s);
    }
    const double t = std::tanh(z);
    return 1 - t * t;
  }
  static double d2phi(Link k, double z) {
    if (k == Link::Sigmoid) {
      const double s = phi(k, z);
      return s * (1 - s) * (1 - 2 * s);
    }
    const double t = std::tanh(z);
    return -2 * t * (1 - t * t);
  }

  double row_f(Eigen::Index i, const Vector& x) const {
    const double z = data.a.row(i).dot(x);
    const double b = data.b(i);
    if (link.kind == Link::Welsch) {
      const double r = b - z;
      return (1 - std::exp(-link.alpha * r * r)) / link.alpha;
    }
    const double r = b - phi(link.kind, z);
    return r * r;
  }
  Vector row_grad(Eigen::Index i, const Vector& x) const {
    const double z = data.a.row(i).dot(x);
    const double b = data.b(i);
    const Vector a = data.a.row(i).transpose();
    if (link.kind == Link::Welsch) {
      const double r = b - z;
      return -2 * r * std::exp(-link.alpha * r * r) * a;
    }
    return -2 * (b - phi(link.kind, z)) * dphi(link.kind, z) * a;
  }
  Matrix row_hess(Eigen::Index i, const Vector& x) const {
    const double z = data.a.row(i).dot(x);
    const double b = data.b(i);
    const Vector a = data.a.row(i).transpose();
    double c;
    if (link.kind == Link::Welsch) {
      const double r = b - z;
      const double e = std::exp(-link.alpha * r * r);
      c = 2 * e - 4 * link.alpha * r * r * e;
    } else {
      const double p = dphi(link.kind, z);
      c = 2 * p * p - 2 * (b - phi(link.kind, z)) * d2phi(link.kind, z);
    }
    return c * a * a.transpose();
  }

  double f(const Vector& x) const {
    double s = 0;
    for (Eigen::Index i = 0; i < data.a.rows(); ++i) s += row_f(i, x);
    return s / static_cast<double>(data.a.rows());
  }
  Vector grad(const Vector& x) const {
    Vector g = Vector::Zero(x.size());
    for (Eigen::Index i = 0; i < data.a.rows(); ++i) g += row_grad(i, x);
    return g / static_cast<double>(data.a.rows());
  }
  Matrix hess(const Vector& x) const {
    Matrix h = Matrix::Zero(x.size(), x.size());
    for (Eigen::Index i = 0; i < data.a.rows(); ++i) h += row_hess(i, x);
    return h / static_cast<double>(data.a.rows());
  }
};

/// Dense Hessian of an operator by applying it to the unit vectors.
inline Matrix assemble(const HessianOperator& h) {
  const auto d = static_cast<Eigen::Index>(h.dim());
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) m.col(i) = h.apply(Vector::Unit(d, i));
  return m;
}

}  // namespace ncg::testing

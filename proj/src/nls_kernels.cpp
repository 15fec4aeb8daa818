#include "ncg/nls_kernels.hpp"

#include <cmath>
#include <vector>

namespace ncg {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double row_dot(const RowMatrix& a, Index i, const Vector& x) { return a.row(static_cast<Eigen::Index>(i)).dot(x); }

}  // namespace

RowTerms row_terms(const LinkSpec& link, double z, double b) {
  switch (link.kind) {
    case Link::Sigmoid: {
      const double p = sigmoid(z);
      const double d1 = p * (1.0 - p);
      const double d2 = d1 * (1.0 - 2.0 * p);
      const double r = b - p;
      return {r * r, -2.0 * r * d1, 2.0 * (d1 * d1 - r * d2)};
    }
    case Link::Tanh: {
      const double p = std::tanh(z);
      const double d1 = 1.0 - p * p;
      const double d2 = -2.0 * p * d1;
      const double r = b - p;
      return {r * r, -2.0 * r * d1, 2.0 * (d1 * d1 - r * d2)};
    }
    case Link::Welsch: {
      const double al = link.alpha;
      const double r = b - z;
      const double e = std::exp(-al * r * r);
      return {-std::expm1(-al * r * r) / al, -2.0 * r * e, (2.0 - 4.0 * al * r * r) * e};
    }
  }
  return {0.0, 0.0, 0.0};
}

namespace kernels {

namespace serial {

double value_sum(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                 std::span<const Index> idx) {
  double s = 0.0;
  for (Index i : idx) s += row_terms(link, row_dot(a, i, x), b[static_cast<Eigen::Index>(i)]).value;
  return s;
}

void gradient_sum(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                  std::span<const Index> idx, Vector& out) {
  out.setZero(a.cols());
  for (Index i : idx) {
    const auto r = static_cast<Eigen::Index>(i);
    out.noalias() += row_terms(link, a.row(r).dot(x), b[r]).c1 * a.row(r).transpose();
  }
}

void curvature_weights(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                       std::span<const Index> idx, Vector& w) {
  w.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(idx[k]);
    w[static_cast<Eigen::Index>(k)] = row_terms(link, a.row(r).dot(x), b[r]).c2;
  }
}

void weighted_gram_apply(const RowMatrix& a, std::span<const Index> idx, const Vector& w,
                         const Vector& v, Vector& out) {
  out.setZero(a.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(idx[k]);
    out.noalias() += (w[static_cast<Eigen::Index>(k)] * a.row(r).dot(v)) * a.row(r).transpose();
  }
}

}  // namespace serial

namespace parallel {

namespace {

std::ptrdiff_t block_count(std::size_t n) { return static_cast<std::ptrdiff_t>((n + kBlock - 1) / kBlock); }

std::span<const Index> block(std::span<const Index> idx, std::ptrdiff_t blk) {
  const std::size_t lo = static_cast<std::size_t>(blk) * kBlock;
  const std::size_t hi = std::min(idx.size(), lo + kBlock);
  return idx.subspan(lo, hi - lo);
}

}  // namespace

double value_sum(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                 std::span<const Index> idx) {
  const std::ptrdiff_t nb = block_count(idx.size());
  std::vector<double> partial(static_cast<std::size_t>(nb), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < nb; ++blk) {
    partial[static_cast<std::size_t>(blk)] = serial::value_sum(a, b, link, x, block(idx, blk));
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

void gradient_sum(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                  std::span<const Index> idx, Vector& out) {
  const std::ptrdiff_t nb = block_count(idx.size());
  std::vector<Vector> partial(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < nb; ++blk) {
    serial::gradient_sum(a, b, link, x, block(idx, blk), partial[static_cast<std::size_t>(blk)]);
  }
  out.setZero(a.cols());
  for (const auto& p : partial) out += p;
}

void curvature_weights(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                       std::span<const Index> idx, Vector& w) {
  const auto n = static_cast<std::ptrdiff_t>(idx.size());
  w.resize(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto r = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(k)]);
    w[k] = row_terms(link, a.row(r).dot(x), b[r]).c2;
  }
}

void weighted_gram_apply(const RowMatrix& a, std::span<const Index> idx, const Vector& w,
                         const Vector& v, Vector& out) {
  const std::ptrdiff_t nb = block_count(idx.size());
  std::vector<Vector> partial(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < nb; ++blk) {
    const auto sub = block(idx, blk);
    const Vector wsub = w.segment(blk * static_cast<std::ptrdiff_t>(kBlock), static_cast<Eigen::Index>(sub.size()));
    serial::weighted_gram_apply(a, sub, wsub, v, partial[static_cast<std::size_t>(blk)]);
  }
  out.setZero(a.cols());
  for (const auto& p : partial) out += p;
}

}  // namespace parallel
}  // namespace kernels
}  // namespace ncg

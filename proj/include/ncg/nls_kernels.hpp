#pragma once

#include <span>

#include "ncg/types.hpp"

namespace ncg {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Link { Sigmoid, Tanh, Welsch };

struct LinkSpec {
  Link kind = Link::Sigmoid;
  double alpha = 1.0;  ///< Welsch scale; ignored by the other links.
};

/// Per-row loss data at z = <a, x>: the value, and scalars c1, c2 with
/// grad f_i = c1 * a and Hess f_i = c2 * a a^T.
struct RowTerms {
  double value;
  double c1;
  double c2;
};

RowTerms row_terms(const LinkSpec& link, double z, double b);

/// Batched row kernels. `serial` is the plain reference loop; `parallel`
/// splits the index set into fixed-size blocks processed under OpenMP and
/// reduces the per-block partials in block order, so its output does not
/// depend on the thread count.
namespace kernels {

inline constexpr std::size_t kBlock = 512;

namespace serial {
double value_sum(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                 std::span<const Index> idx);
void gradient_sum(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                  std::span<const Index> idx, Vector& out);
void curvature_weights(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                       std::span<const Index> idx, Vector& w);
/// out = sum_k w[k] (a_{idx[k]} . v) a_{idx[k]}
void weighted_gram_apply(const RowMatrix& a, std::span<const Index> idx, const Vector& w,
                         const Vector& v, Vector& out);
}  // namespace serial

namespace parallel {
double value_sum(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                 std::span<const Index> idx);
void gradient_sum(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                  std::span<const Index> idx, Vector& out);
void curvature_weights(const RowMatrix& a, const Vector& b, const LinkSpec& link, const Vector& x,
                       std::span<const Index> idx, Vector& w);
void weighted_gram_apply(const RowMatrix& a, std::span<const Index> idx, const Vector& w,
                         const Vector& v, Vector& out);
}  // namespace parallel

}  // namespace kernels
}  // namespace ncg

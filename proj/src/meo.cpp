#include "ncg/meo.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace ncg {

std::size_t meo_iteration_cap(Index d, double M, double epsilon, double delta) {
  if (!(M > 0.0) || !std::isfinite(M)) throw std::invalid_argument("meo: M must be positive and finite");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("meo: epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("meo: delta must lie in (0,1)");
  if (d == 0) throw std::invalid_argument("meo: empty dimension");
  const double dd = static_cast<double>(d);
  const double bound = 1.0 + std::ceil(std::log(2.75 * dd / (delta * delta)) / 2.0 * std::sqrt(M / epsilon));
  return bound >= dd ? d : static_cast<std::size_t>(bound);
}

MEOResult meo_lanczos(const HessianOperator& H, double M, double epsilon, double delta, Rng& rng,
                      const MeoOptions& options) {
  const Index d = H.dim();
  const std::size_t cap = meo_iteration_cap(d, M, epsilon, delta);
  const auto n = static_cast<Eigen::Index>(d);
  const auto kmax = static_cast<Eigen::Index>(cap);

  Matrix Q(n, kmax);
  Matrix HQ(n, kmax);
  Vector alpha(kmax);
  Vector beta(kmax);  // beta[k] couples q_k and q_{k+1}

  std::normal_distribution<double> normal(0.0, 1.0);
  Vector q(n);
  do {
    for (auto& v : q) v = normal(rng);
  } while (q.norm() == 0.0);
  q.normalize();

  MEOResult res;
  res.cap = cap;
  Vector s;
  double ritz = 0.0;
  Eigen::Index k = 0;
  bool invariant = false;
  while (k < kmax) {
    Q.col(k) = q;
    Vector w(n);
    H.apply(q, w);
    HQ.col(k) = w;
    alpha[k] = q.dot(w);
    ++k;

    Eigen::SelfAdjointEigenSolver<Matrix> tri;
    tri.computeFromTridiagonal(alpha.head(k), beta.head(k - 1), Eigen::ComputeEigenvectors);
    ritz = tri.eigenvalues()[0];
    s = tri.eigenvectors().col(0);

    // Three-term step followed by two passes of full reorthogonalization.
    w -= alpha[k - 1] * q;
    if (k > 1) w -= beta[k - 2] * Q.col(k - 2);
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k) * (Q.leftCols(k).transpose() * w);
    const double b = w.norm();
    const double ritz_residual = b * std::abs(s[k - 1]);
    if (options.trace) options.trace({static_cast<std::size_t>(k), ritz, ritz_residual});

    invariant = !(b > 1e-12 * M);
    if (ritz <= -epsilon / 2.0 && ritz_residual <= 1e-10 * M) break;
    if (invariant || k == kmax) break;
    beta[k - 1] = b;
    q = w / b;
  }
  res.iterations = static_cast<std::size_t>(k);
  res.exhausted_space = invariant || static_cast<Index>(k) == d;

  Vector v = Q.leftCols(k) * s;
  Vector Hv = HQ.leftCols(k) * s;
  const double vn = v.norm();
  v /= vn;
  Hv /= vn;
  const double lambda = v.dot(Hv);
  if (lambda <= -epsilon / 2.0) {
    res.outcome = MeoOutcome::NegativeCurvature;
    res.lambda = lambda;
    res.v = std::move(v);
  } else {
    res.outcome = MeoOutcome::Certificate;
    res.lambda = lambda;
  }
  return res;
}

}  // namespace ncg

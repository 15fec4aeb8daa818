#pragma once

#include <functional>

#include "ncg/oracle.hpp"

namespace ncg {

enum class MeoOutcome { NegativeCurvature, Certificate };

struct MEOResult {
  MeoOutcome outcome = MeoOutcome::Certificate;
  double lambda = 0.0;  ///< v^T H v on NegativeCurvature
  Vector v;             ///< unit vector on NegativeCurvature, empty otherwise
  std::size_t iterations = 0;
  std::size_t cap = 0;
  bool exhausted_space = false;  ///< Krylov space became invariant or reached full dimension
};

struct MeoTraceEvent {
  std::size_t k;
  double ritz_value;
  double ritz_residual;
};

struct MeoOptions {
  std::function<void(const MeoTraceEvent&)> trace;
};

/// Iteration cap min(d, 1 + ceil(ln(2.75 d / delta^2) / 2 * sqrt(M / eps))).
std::size_t meo_iteration_cap(Index d, double M, double epsilon, double delta);

/// Randomized Lanczos estimate of the smallest eigenvalue of H, with full
/// reorthogonalization and a start vector uniform on the unit sphere.
///
/// Returns NegativeCurvature (unit v, lambda = v^T H v <= -eps/2) or a
/// Certificate once the cap is spent. The loop stops early when the smallest
/// Ritz pair has converged to a residual of 1e-10 * M with value <= -eps/2;
/// otherwise it runs to the cap and reports the final Ritz vector if it
/// qualifies. Throws std::invalid_argument for M <= 0, eps <= 0 or
/// delta outside (0,1).
MEOResult meo_lanczos(const HessianOperator& H, double M, double epsilon, double delta, Rng& rng,
                      const MeoOptions& options = {});

}  // namespace ncg

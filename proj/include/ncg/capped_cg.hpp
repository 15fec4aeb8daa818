#pragma once

#include <functional>
#include <optional>

#include "ncg/oracle.hpp"

namespace ncg {

enum class DirectionType { SOL, NC };

const char* to_string(DirectionType t);

/// Which test produced a Capped CG return.
enum class CgExit {
  InitialCurvature,  ///< p_0 fails the curvature test before the loop
  IterateCurvature,  ///< y_j fails the curvature test
  Converged,         ///< residual reduced below zeta_hat * ||r_0||
  DirectionCurvature,///< p_j fails the curvature test
  SlowDecay,         ///< residual decayed too slowly; extracted y_{j+1} - y_i
};

/// Quantities derived from the curvature bound M.
struct CgParameters {
  double M = 0.0;
  double kappa = 0.0;
  double zeta_hat = 0.0;
  double tau = 0.0;
  double T = 0.0;
};

/// Alternative T(kappa, tau) for cross-checking against other formulations.
using TFormula = std::function<double(double kappa, double tau)>;

CgParameters cg_parameters(double M, double epsilon, double zeta, const TFormula& t_formula = {});

struct CgTraceEvent {
  std::size_t j;
  double residual_norm;
  double M;
};

struct CappedCGParams {
  double epsilon = 0.0;
  double zeta = 0.5;
  std::optional<double> M_init;
  std::optional<std::size_t> max_iters_override;
  TFormula t_formula;
  std::function<void(const CgTraceEvent&)> trace;
};

struct CappedCGResult {
  DirectionType d_type = DirectionType::SOL;
  CgExit exit = CgExit::Converged;
  Vector d;
  std::size_t iterations = 0;
  std::size_t matvecs = 0;
  double M_final = 0.0;
  double kappa = 0.0;
  double T = 0.0;
  double tau = 0.0;
  double zeta_hat = 0.0;
  double residual_norm = 0.0;  ///< recurrence residual ||r_j|| on SOL returns
  std::size_t extraction_index = 0;  ///< i of y_{j+1} - y_i on SlowDecay returns
};

/// Conjugate gradient on (H + 2 eps I) d = -g that returns either an
/// approximate solution (SOL) or a direction d with d^T H d <= -eps ||d||^2 (NC).
///
/// Uses one product with H per iteration: all iterates and residuals are kept,
/// so H y_j, H r_j and the extraction curvatures follow from recurrences.
/// Throws std::invalid_argument for g = 0 or bad parameters, and
/// ContractViolation for non-finite products or when no branch fires within
/// the iteration cap.
CappedCGResult capped_cg(const HessianOperator& H, const Vector& g, const CappedCGParams& params);

/// Smallest integer J >= 0 with sqrt(T) (1 - tau)^{J/2} <= zeta_hat.
std::size_t j_cap(double M, double epsilon, double zeta);

}  // namespace ncg

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ncg/capped_cg.hpp"
#include "ncg/line_search.hpp"
#include "ncg/meo.hpp"
#include "ncg/sampling.hpp"

namespace ncg {

enum class Variant { LineSearch, FixedStep };

/// Iteration taxonomy, by the direction actually stepped along:
///   K1 ||g_k|| < eps_g; K2/K3 SOL with ||d_k|| > eps_g/eps_H and
///   ||g_{k+1}|| below/above eps_g; K4 SOL with ||d_k|| <= eps_g/eps_H;
///   K5 NC with ||g_k|| >= eps_g. Terminal marks the returned point.
enum class StepClass { K1, K2, K3, K4, K5, Terminal };

enum class Termination { FirstOrderAndCertified, CertifiedAtCurrentPoint, MaxIters, ContractViolation };

const char* to_string(StepClass c);
const char* to_string(Termination t);

/// Constant step sizes replacing the Lipschitz-based fixed-step formulas.
struct ConstantSteps {
  double sol = 0.2;
  double nc = 0.04;
};

struct SolverConfig {
  double eps_g = 1e-3;
  std::optional<double> eps_H;  ///< default sqrt(L_H * eps_g)
  double theta = 0.5;
  double eta = 0.1;
  double zeta = 0.5;
  double delta = 0.05;
  double theta_tilde = 0.9;
  double U_H = 0.0;
  double L_H = 0.0;
  std::optional<double> U_g;    ///< enables the backtracking-count audit
  std::optional<double> f_low;  ///< enables the iteration-bound audit
  double delta_g_step = 0.0;    ///< gradient accuracy assumed by the fixed NC step
  double delta_H_step = 0.0;    ///< Hessian accuracy assumed by the fixed NC step
  std::optional<ConstantSteps> constant_steps;
  std::size_t max_ls_trials = 60;
  std::size_t max_outer_iters = 10000;
  bool skip_small_step_block = false;
  std::uint64_t seed = 0;
  bool audit = false;
  /// Audit only: redo an iteration with a 4x gradient batch when the
  /// retrospective gradient-accuracy check fails (up to 4 times).
  bool retrospective_redo = false;

  double resolved_eps_H() const;
  void validate() const;
};

struct IterationRecord {
  std::size_t k = 0;
  double f_value = 0.0;
  std::optional<double> grad_est_norm;
  std::optional<double> grad_true_norm;
  std::optional<DirectionType> d_type;
  StepClass step_class = StepClass::Terminal;
  bool from_meo = false;
  double alpha = 0.0;
  double d_norm = 0.0;
  std::size_t ls_trials = 0;
  std::size_t cg_iters = 0;
  std::size_t meo_iters = 0;
  LedgerSnapshot ledger;             ///< cumulative cost to reach this point
  std::optional<double> grad_error;  ///< audit: ||g_k - grad f(x_k)||
  std::optional<double> hess_error;  ///< audit: ||H_k - Hess f(x_k)||
  std::optional<bool> condition_ok;  ///< audit: accuracy condition, checked in retrospect
};

struct RunReport {
  std::vector<IterationRecord> records;
  Termination termination = Termination::MaxIters;
  Vector x_final;
  double f_final = 0.0;
  double grad_true_norm_final = 0.0;
  std::string violation;
  /// Failed guarantee checks, plus line searches rejected under sampled oracles.
  std::vector<std::string> audit_failures;
  std::size_t redos = 0;

  /// Number of steps taken.
  std::size_t iterations() const;
};

/// d_k = -sgn(d^T g) (|d^T H d| / ||d||^2) d / ||d||
Vector scale_nc_direction(const Vector& d_raw, const HessianOperator& H, const Vector& g);
/// d_k = -sgn(v^T g) |v^T H v| v for unit v.
Vector scale_meo_direction(const Vector& v, const HessianOperator& H, const Vector& g);
Vector scale_meo_direction(const Vector& v, double vHv, const Vector& g);

struct DecreaseConstants {
  double c_sol = 0.0;
  double c_nc = 0.0;
  double cbar_sol = 0.0;
  double cbar_nc = 0.0;
};

DecreaseConstants decrease_constants(double eta, double theta, double zeta, double theta_tilde, double L_H);

/// Worst-case outer iteration count: the line-search bound for LineSearch and
/// the fixed-step bound for FixedStep. Saturates at UINT64_MAX.
std::uint64_t iteration_bound(double f0_minus_flow, double L_H, const DecreaseConstants& c, double eps,
                              Variant variant);

/// Backtracking exponent caps for SOL and NC directions.
long j_sol_bound(double theta, double zeta, double eps_H, double U_g, double L_H, double eta);
long j_nc_bound(double theta, double L_H, double eta);

/// Gradient bound at the point returned after a certified small Newton step.
double termination_gradient_bound(double L_H, double eps_g, double eps_H);

/// Runs the line-search or fixed-step Newton-CG driver from x0.
RunReport run(const ObjectiveOracle& oracle, const Vector& x0, const SamplingPolicy& policy,
              const SolverConfig& config, Variant variant,
              const std::function<void(const IterationRecord&)>& sink = {});

}  // namespace ncg

#pragma once

#include <functional>
#include <optional>

#include "ncg/types.hpp"

namespace ncg {

using ScalarFn = std::function<double(const Vector&)>;

struct LineSearchResult {
  double alpha = 0.0;
  std::size_t trials = 0;  ///< evaluations beyond f(x)
  double f_trial = 0.0;    ///< f(x + alpha d) at the accepted step
};

/// alpha = theta^j for the smallest j >= 0 with
/// f(x + alpha d) < f(x) - (eta/6) |alpha|^3 ||d||^3.
/// f(x) is evaluated unless supplied. Throws ContractViolation after max_trials.
LineSearchResult line_search_sol(const ScalarFn& f, const Vector& x, const Vector& d, double eta, double theta,
                                 std::size_t max_trials = 60, std::optional<double> fx = {});

/// Same test over the sequence 1, -1, theta, -theta, theta^2, ...
LineSearchResult line_search_nc(const ScalarFn& f, const Vector& x, const Vector& d, double eta, double theta,
                                std::size_t max_trials = 60, std::optional<double> fx = {});

/// sqrt(3 (1-zeta) / (4 (L_H + eta))) * sqrt(eps_H / ||d||)
double fixed_step_sol(double norm_d, double eps_H, double zeta, double L_H, double eta);

/// theta_tilde * beta_1, the larger root of the sufficient-decrease quadratic.
/// Throws ContractViolation if its discriminant is not positive.
double fixed_step_nc(double norm_d, double delta_H, double delta_g, double L_H, double eta, double theta_tilde);

}  // namespace ncg

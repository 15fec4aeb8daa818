#include "ncg/line_search.hpp"

#include <cmath>
#include <string>

namespace ncg {

namespace {

template <typename StepAt>
LineSearchResult search(const ScalarFn& f, const Vector& x, const Vector& d, double eta, double theta,
                        std::size_t max_trials, std::optional<double> fx, StepAt step_at) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("line search: theta must lie in (0,1)");
  if (!(eta > 0.0)) throw std::invalid_argument("line search: eta must be positive");
  const double dn = d.norm();
  if (!(dn > 0.0)) throw std::invalid_argument("line search: zero direction");
  const double f0 = fx ? *fx : f(x);
  const double dn3 = dn * dn * dn;
  for (std::size_t t = 0; t < max_trials; ++t) {
    const double alpha = step_at(t);
    const double a = std::abs(alpha);
    const double ft = f(x + alpha * d);
    if (ft < f0 - eta / 6.0 * a * a * a * dn3) return {alpha, t + 1, ft};
  }
  throw ContractViolation("line search: no acceptable step within " + std::to_string(max_trials) + " trials");
}

}  // namespace

LineSearchResult line_search_sol(const ScalarFn& f, const Vector& x, const Vector& d, double eta, double theta,
                                 std::size_t max_trials, std::optional<double> fx) {
  return search(f, x, d, eta, theta, max_trials, fx,
                [theta](std::size_t t) { return std::pow(theta, static_cast<double>(t)); });
}

LineSearchResult line_search_nc(const ScalarFn& f, const Vector& x, const Vector& d, double eta, double theta,
                                std::size_t max_trials, std::optional<double> fx) {
  return search(f, x, d, eta, theta, max_trials, fx, [theta](std::size_t t) {
    const double mag = std::pow(theta, static_cast<double>(t / 2));
    return t % 2 == 0 ? mag : -mag;
  });
}

double fixed_step_sol(double norm_d, double eps_H, double zeta, double L_H, double eta) {
  return std::sqrt(3.0 * (1.0 - zeta) / (4.0 * (L_H + eta))) * std::sqrt(eps_H / norm_d);
}

double fixed_step_nc(double norm_d, double delta_H, double delta_g, double L_H, double eta, double theta_tilde) {
  const double half = (norm_d - delta_H) / 2.0;
  const double disc = half * half - 4.0 * (L_H + eta) * delta_g / 6.0;
  if (!(disc > 0.0) || !(half > 0.0)) {
    throw ContractViolation("fixed_step_nc: nonpositive discriminant; the gradient/Hessian accuracy bounds are violated");
  }
  const double beta1 = (half + std::sqrt(disc)) / ((L_H + eta) * norm_d / 3.0);
  return theta_tilde * beta1;
}

}  // namespace ncg

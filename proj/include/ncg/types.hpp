#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ncg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::size_t;
using IndexSet = std::vector<Index>;

/// The single generator type threaded through sampling and the eigenvalue oracle.
using Rng = std::mt19937_64;

/// Raised when a guarantee that should hold by construction is observed to fail,
/// e.g. a line search that never accepts or an inconsistent Hessian operator.
class ContractViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sgn with sgn(0) := +1.
inline double sign_nonneg(double v) { return v < 0.0 ? -1.0 : 1.0; }

IndexSet full_index_set(Index n);

}  // namespace ncg

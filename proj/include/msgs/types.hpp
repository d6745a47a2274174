#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>

namespace msgs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using SpMatrix = Eigen::SparseMatrix<double>;

/// Malformed caller input: bad shapes, out-of-range parameters, unparseable
/// files, infeasible requests. The CLI maps this to exit code 2.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure at runtime: solver non-convergence, NaN loss,
/// exhausted retries. The CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace msgs

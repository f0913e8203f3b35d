#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace medmagma {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Kronecker-sum (or factor) not positive definite at the required tolerance.
struct DefinitenessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalRankError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input data violates a pipeline precondition (e.g. all-zero row/column).
struct PreprocessingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterative solver exhausted its budget; carries the last iterate for diagnosis.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, Eigen::MatrixXd last_rows,
                   Eigen::MatrixXd last_cols, double grad_norm, int iterations)
      : std::runtime_error(what),
        last_rows(std::move(last_rows)),
        last_cols(std::move(last_cols)),
        grad_norm(grad_norm),
        iterations(iterations) {}

  Eigen::MatrixXd last_rows;
  Eigen::MatrixXd last_cols;
  double grad_norm = 0.0;
  int iterations = 0;
};

}  // namespace medmagma

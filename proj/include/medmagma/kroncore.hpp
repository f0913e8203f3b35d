#pragma once

#include <cstdint>

#include "medmagma/types.hpp"

namespace medmagma {

// Pair (Psi_rows, Psi_cols) whose Kronecker sum
//   Omega = Psi_cols (+) Psi_rows = Psi_cols (x) I + I (x) Psi_rows
// is the precision matrix over (row, column) index pairs, with vec stacking
// columns. Inputs are symmetrized on ingestion to absorb floating-point
// drift; positive definiteness of the Kronecker sum is checked where it is
// actually needed (see EigenFactor).
class FactorPrecision {
 public:
  FactorPrecision(Matrix psi_rows, Matrix psi_cols);

  const Matrix& rows() const { return psi_rows_; }
  const Matrix& cols() const { return psi_cols_; }
  Index d_rows() const { return psi_rows_.rows(); }
  Index d_cols() const { return psi_cols_.rows(); }

  static FactorPrecision identity(Index d_rows, Index d_cols);

 private:
  Matrix psi_rows_;
  Matrix psi_cols_;
};

// Cached eigendecompositions of both factors. Every EM iteration reuses the
// same decomposition for the log-determinant, the partial traces of the
// inverse, and sampling, so it is computed once per factor update.
class EigenFactor {
 public:
  explicit EigenFactor(const FactorPrecision& fp);

  const Matrix& vectors_rows() const { return vectors_rows_; }
  const Matrix& vectors_cols() const { return vectors_cols_; }
  const Vector& values_rows() const { return values_rows_; }
  const Vector& values_cols() const { return values_cols_; }
  Index d_rows() const { return values_rows_.size(); }
  Index d_cols() const { return values_cols_.size(); }

  double min_pair_sum() const;
  double max_pair_sum() const;

  // Pair sums lambda_i^rows + lambda_j^cols must exceed this fraction of the
  // largest pair sum for Omega to count as positive definite.
  static constexpr double kPairSumFloor = 1e-10;

  bool is_positive_definite() const;
  // Throws DefinitenessError when a pair sum is at or below the floor.
  void require_positive_definite() const;

 private:
  Matrix vectors_rows_, vectors_cols_;
  Vector values_rows_, values_cols_;
};

// (Psi_cols (+) Psi_rows) vec[M], matricized: Psi_rows * M + M * Psi_cols.
Matrix kron_sum_apply(const FactorPrecision& fp, const Matrix& m);

// Entry Omega_{(ij),(kl)} = delta_jl psi^rows_ik + delta_ik psi^cols_jl.
double kron_sum_entry(const FactorPrecision& fp, Index i, Index k, Index j,
                      Index l);

// log det Omega = sum_ij log(lambda_i^rows + lambda_j^cols).
double kron_sum_logdet(const EigenFactor& ef);

// Matrix of traces tr[Omega^{-1} (basis element along `axis`)]; for rows this
// is V_r diag_i( sum_j 1/(lambda_i^r + lambda_j^c) ) V_r^T, and analogously
// for cols. Symmetric positive definite.
Matrix partial_trace_inverse(const EigenFactor& ef, Axis axis);

// Draw Z with vec[Z] ~ N(0, Omega^{-1}); deterministic given the seed.
Matrix sample_latent(const EigenFactor& ef, std::uint64_t seed);

}  // namespace medmagma

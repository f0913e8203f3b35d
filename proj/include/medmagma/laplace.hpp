#pragma once

#include "medmagma/gmgm.hpp"
#include "medmagma/kroncore.hpp"
#include "medmagma/latentpoint.hpp"
#include "medmagma/types.hpp"

namespace medmagma {

// The fiber is linear in log space, spanned by mean-zero per-axis shift
// directions; stacking the column-sum and row-sum functionals gives the
// projector P = [I (x) 1^T ; 1^T (x) I] onto an overcomplete basis of that
// space, and dropping the last row makes it a basis. This caches
// N = P Omega P^T (with the last row/column dropped; column-sum coordinates
// first) and its inverse, computed by block inversion so only d_rows- and
// d_cols-sized matrices are ever factored.
class TangentProjector {
 public:
  explicit TangentProjector(const FactorPrecision& fp);

  Index d_rows() const { return d_rows_; }
  Index d_cols() const { return d_cols_; }
  const Matrix& projected_precision() const { return projected_; }
  const Matrix& inverse() const { return inverse_; }

 private:
  Index d_rows_ = 0, d_cols_ = 0;
  Matrix projected_;  // (d_rows + d_cols - 1)^2
  Matrix inverse_;
};

// Hessian of one Gram entry as a structured operator: for the rows Gram,
// entry (a,b) has Hessian I_{d_cols} (x) (J^{ab} + J^{ba}), which acts on a
// matricized vector by swapping rows a and b into each other (columns for
// the cols Gram). Never materializes the d_rows*d_cols square matrix.
struct HessianEntryOp {
  Axis axis;
  Index a, b;
  Index d_rows, d_cols;

  Matrix apply(const Matrix& m) const;
};

HessianEntryOp hessian_entry_form(Axis axis, Index a, Index b, Index d_rows,
                                  Index d_cols);

// Curvature half-trace of the Laplace approximation: entry (a,b) equals
// (1/2) tr[(P Omega P^T)^{-1} P H_ab P^T]. The projected Hessian blocks are
// sparse, so each entry costs O(1) after O((d_rows+d_cols)^2) shared sums.
Matrix correction_matrix(const TangentProjector& tp, Axis axis);

// S_rows = Z* Z*^T + correction_rows, S_cols = Z*^T Z* + correction_cols
// (corrections omitted in zeroth-order mode), then the PSD safeguard: an
// eigenvalue floor at kStatsFloor * lambda_max that is a no-op whenever the
// raw matrices are already PSD.
inline constexpr double kStatsFloor = 1e-8;

SufficientStats pseudo_stats(const FiberPoint& fpoint,
                             const FactorPrecision& fp,
                             bool correction_enabled = true);

}  // namespace medmagma

#pragma once

#include <vector>

#include "medmagma/types.hpp"

namespace medmagma {

// Observed matrix X, possibly with exact zeros. Entries with magnitude below
// 1e-300 are snapped to exact zero on ingestion (denormal logs poison the
// means). Nonzero counts are cached for the masked operations.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix entries);

  const Matrix& entries() const { return entries_; }
  Index d_rows() const { return entries_.rows(); }
  Index d_cols() const { return entries_.cols(); }

  Index nnz_total() const { return nnz_total_; }
  const std::vector<Index>& nnz_row() const { return nnz_row_; }
  const std::vector<Index>& nnz_col() const { return nnz_col_; }

  bool has_zero_row() const;
  bool has_zero_col() const;
  bool is_dense() const { return nnz_total_ == entries_.size(); }

  static constexpr double kZeroSnap = 1e-300;

 private:
  Matrix entries_;
  Index nnz_total_ = 0;
  std::vector<Index> nnz_row_, nnz_col_;
};

// Subtracts masked row, column, and grand means from the entries selected by
// `mask` (true = participates). On a full mask this is one pass of classical
// double centering, (I - 11^T/d_r) L (I - 11^T/d_c), which already leaves all
// row and column means at zero. On a partial mask the row and column
// centerings no longer commute, so the pass is repeated until the masked
// means vanish; the result is the orthogonal projection of L (restricted to
// the mask) onto the subspace orthogonal to all masked row/column indicator
// vectors. Entries outside the mask are returned as zero.
//
// Throws PreprocessingError if the mask has an empty row or column.
Matrix log_double_center(const Matrix& l,
                         const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);

// Convenience overload: full mask.
Matrix log_double_center(const Matrix& l);

// The fiber map: divides out the best rank-one row/column magnitude profile,
//   Y_ij = sgn(x_ij) * exp(centered log |x_ij|),
// preserving signs and the exact zero pattern. Any per-row/per-column
// positive rescaling of X maps to the same Y. Products are taken in log
// space as sums, since the literal geometric means overflow beyond d ~ 50.
//
// Throws PreprocessingError if X has an all-zero row or column.
DataMatrix denoise(const DataMatrix& x);

// Largest absolute masked row/column mean of log|Y| over the nonzero mask;
// zero (to rounding) for any output of denoise. Reported by the CLI as the
// centering residual.
double centering_residual(const DataMatrix& y);

}  // namespace medmagma

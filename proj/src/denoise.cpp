#include "medmagma/denoise.hpp"

#include <cmath>
#include <string>

#include "medmagma/errors.hpp"

namespace medmagma {

namespace {

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// One masked centering pass: subtract grand, then row, then column masked
// means. A full-mask pass is exactly the classical double centering.
void check_mask(const BoolArray& mask) {
  for (Index i = 0; i < mask.rows(); ++i) {
    if (!mask.row(i).any()) {
      throw PreprocessingError("log_double_center: row " + std::to_string(i) +
                               " has no entries in the mask");
    }
  }
  for (Index j = 0; j < mask.cols(); ++j) {
    if (!mask.col(j).any()) {
      throw PreprocessingError("log_double_center: column " +
                               std::to_string(j) +
                               " has no entries in the mask");
    }
  }
}

double masked_mean_residual(const Matrix& m, const BoolArray& mask) {
  double worst = 0.0;
  for (Index i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    Index count = 0;
    for (Index j = 0; j < m.cols(); ++j) {
      if (mask(i, j)) {
        sum += m(i, j);
        ++count;
      }
    }
    if (count > 0) worst = std::max(worst, std::abs(sum / static_cast<double>(count)));
  }
  for (Index j = 0; j < m.cols(); ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < m.rows(); ++i) {
      if (mask(i, j)) {
        sum += m(i, j);
        ++count;
      }
    }
    if (count > 0) worst = std::max(worst, std::abs(sum / static_cast<double>(count)));
  }
  return worst;
}

}  // namespace

DataMatrix::DataMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.cols() == 0) {
    throw DimensionError("DataMatrix: matrix must be non-empty");
  }
  nnz_row_.assign(entries_.rows(), 0);
  nnz_col_.assign(entries_.cols(), 0);
  for (Index j = 0; j < entries_.cols(); ++j) {
    for (Index i = 0; i < entries_.rows(); ++i) {
      if (std::abs(entries_(i, j)) < kZeroSnap) {
        entries_(i, j) = 0.0;
      } else {
        ++nnz_total_;
        ++nnz_row_[i];
        ++nnz_col_[j];
      }
    }
  }
}

bool DataMatrix::has_zero_row() const {
  for (Index c : nnz_row_)
    if (c == 0) return true;
  return false;
}

bool DataMatrix::has_zero_col() const {
  for (Index c : nnz_col_)
    if (c == 0) return true;
  return false;
}

Matrix log_double_center(const Matrix& l, const BoolArray& mask) {
  if (mask.rows() != l.rows() || mask.cols() != l.cols()) {
    throw DimensionError("log_double_center: mask shape mismatch");
  }
  check_mask(mask);

  const Index dr = l.rows();
  const Index dc = l.cols();
  Vector row_count(dr), col_count(dc);
  for (Index i = 0; i < dr; ++i)
    row_count(i) = static_cast<double>(mask.row(i).count());
  for (Index j = 0; j < dc; ++j)
    col_count(j) = static_cast<double>(mask.col(j).count());
  const double total = static_cast<double>(mask.count());
  const bool full = static_cast<Index>(total) == l.size();

  Matrix out = mask.select(l, Matrix::Zero(dr, dc));
  constexpr int kMaxPasses = 10000;
  constexpr double kResidualTol = 1e-13;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    double grand = out.sum() / total;
    for (Index j = 0; j < dc; ++j)
      for (Index i = 0; i < dr; ++i)
        if (mask(i, j)) out(i, j) -= grand;
    Vector row_mean = out.rowwise().sum().cwiseQuotient(row_count);
    for (Index j = 0; j < dc; ++j)
      for (Index i = 0; i < dr; ++i)
        if (mask(i, j)) out(i, j) -= row_mean(i);
    Vector col_mean = out.colwise().sum().transpose().cwiseQuotient(col_count);
    for (Index j = 0; j < dc; ++j)
      for (Index i = 0; i < dr; ++i)
        if (mask(i, j)) out(i, j) -= col_mean(j);
    if (full) break;  // one pass lands exactly on the centered image
    if (masked_mean_residual(out, mask) < kResidualTol * (1.0 + max_abs(out))) {
      break;
    }
  }
  return out;
}

Matrix log_double_center(const Matrix& l) {
  return log_double_center(l, BoolArray::Constant(l.rows(), l.cols(), true));
}

DataMatrix denoise(const DataMatrix& x) {
  if (x.has_zero_row() || x.has_zero_col()) {
    throw PreprocessingError(
        "denoise: input has an all-zero row or column; filter such rows and "
        "columns before fitting");
  }
  const Matrix& e = x.entries();
  BoolArray mask = e.array() != 0.0;
  Matrix logs = mask.select(e.cwiseAbs().array().log().matrix(),
                            Matrix::Zero(e.rows(), e.cols()));
  Matrix centered = log_double_center(logs, mask);
  Matrix out(e.rows(), e.cols());
  for (Index j = 0; j < e.cols(); ++j) {
    for (Index i = 0; i < e.rows(); ++i) {
      out(i, j) = mask(i, j)
                      ? std::copysign(std::exp(centered(i, j)), e(i, j))
                      : 0.0;
    }
  }
  return DataMatrix(std::move(out));
}

double centering_residual(const DataMatrix& y) {
  const Matrix& e = y.entries();
  BoolArray mask = e.array() != 0.0;
  Matrix logs = mask.select(e.cwiseAbs().array().log().matrix(),
                            Matrix::Zero(e.rows(), e.cols()));
  return masked_mean_residual(logs, mask);
}

}  // namespace medmagma

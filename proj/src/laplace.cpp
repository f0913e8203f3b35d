#include "medmagma/laplace.hpp"

#include <string>

#include "medmagma/errors.hpp"

namespace medmagma {

TangentProjector::TangentProjector(const FactorPrecision& fp)
    : d_rows_(fp.d_rows()), d_cols_(fp.d_cols()) {
  const Index dr = d_rows_;
  const Index dc = d_cols_;
  const Index n = dc + dr - 1;
  const double psi_rows_sum = fp.rows().sum();
  const double psi_cols_sum = fp.cols().sum();
  const Vector psi_cols_rowsum = fp.cols() * Vector::Ones(dc);
  const Vector psi_rows_rowsum = fp.rows() * Vector::Ones(dr);

  Matrix block_cc = static_cast<double>(dr) * fp.cols() +
                    psi_rows_sum * Matrix::Identity(dc, dc);
  Matrix block_cr_full =
      psi_cols_rowsum * Eigen::RowVectorXd::Ones(dr) +
      Vector::Ones(dc) * psi_rows_rowsum.transpose();
  Matrix block_rr_full = static_cast<double>(dc) * fp.rows() +
                         psi_cols_sum * Matrix::Identity(dr, dr);

  projected_ = Matrix(n, n);
  projected_.topLeftCorner(dc, dc) = block_cc;
  projected_.topRightCorner(dc, dr - 1) = block_cr_full.leftCols(dr - 1);
  projected_.bottomLeftCorner(dr - 1, dc) =
      block_cr_full.leftCols(dr - 1).transpose();
  projected_.bottomRightCorner(dr - 1, dr - 1) =
      block_rr_full.topLeftCorner(dr - 1, dr - 1);

  // Block inversion through the Schur complement of the cols block.
  Eigen::LLT<Matrix> llt_cc(block_cc);
  if (llt_cc.info() != Eigen::Success) {
    throw NumericalRankError(
        "TangentProjector: projected precision cols block is numerically "
        "singular");
  }
  inverse_ = Matrix(n, n);
  if (dr == 1) {
    inverse_ = llt_cc.solve(Matrix::Identity(dc, dc));
    return;
  }
  Matrix b = projected_.topRightCorner(dc, dr - 1);
  Matrix cc_inv_b = llt_cc.solve(b);
  Matrix schur = projected_.bottomRightCorner(dr - 1, dr - 1) -
                 b.transpose() * cc_inv_b;
  Eigen::LLT<Matrix> llt_schur(symmetrized(schur));
  if (llt_schur.info() != Eigen::Success) {
    throw NumericalRankError(
        "TangentProjector: projected precision is numerically singular");
  }
  Matrix schur_inv = llt_schur.solve(Matrix::Identity(dr - 1, dr - 1));
  inverse_.bottomRightCorner(dr - 1, dr - 1) = schur_inv;
  inverse_.topRightCorner(dc, dr - 1) = -cc_inv_b * schur_inv;
  inverse_.bottomLeftCorner(dr - 1, dc) =
      inverse_.topRightCorner(dc, dr - 1).transpose();
  inverse_.topLeftCorner(dc, dc) =
      llt_cc.solve(Matrix::Identity(dc, dc)) +
      cc_inv_b * schur_inv * cc_inv_b.transpose();
}

HessianEntryOp hessian_entry_form(Axis axis, Index a, Index b, Index d_rows,
                                  Index d_cols) {
  const Index dim = axis == Axis::Rows ? d_rows : d_cols;
  if (a < 0 || a >= dim || b < 0 || b >= dim || d_rows < 1 || d_cols < 1) {
    throw IndexError("hessian_entry_form: entry index out of range");
  }
  return HessianEntryOp{axis, a, b, d_rows, d_cols};
}

Matrix HessianEntryOp::apply(const Matrix& m) const {
  if (m.rows() != d_rows || m.cols() != d_cols) {
    throw DimensionError("HessianEntryOp: operand shape mismatch");
  }
  Matrix out = Matrix::Zero(d_rows, d_cols);
  if (axis == Axis::Rows) {
    out.row(a) += m.row(b);
    out.row(b) += m.row(a);
  } else {
    out.col(a) += m.col(b);
    out.col(b) += m.col(a);
  }
  return out;
}

Matrix correction_matrix(const TangentProjector& tp, Axis axis) {
  const Index dr = tp.d_rows();
  const Index dc = tp.d_cols();
  const Matrix& w = tp.inverse();
  const auto w_cc = w.topLeftCorner(dc, dc);
  const auto w_cr = w.topRightCorner(dc, dr - 1);
  const auto w_rr = w.bottomRightCorner(dr - 1, dr - 1);
  const double tr_cc = w_cc.trace();
  const double tr_rr = dr > 1 ? w_rr.trace() : 0.0;

  if (axis == Axis::Rows) {
    // entry (a,b): tr(W_cc) + s_a + s_b + d_cols * W_rr[a,b], where s_t sums
    // the cross-block column for the (possibly dropped) row coordinate t
    Vector s = Vector::Zero(dr);
    if (dr > 1) s.head(dr - 1) = w_cr.colwise().sum().transpose();
    Matrix out(dr, dr);
    for (Index a = 0; a < dr; ++a) {
      for (Index b = 0; b < dr; ++b) {
        double wrr = (a < dr - 1 && b < dr - 1) ? w_rr(a, b) : 0.0;
        out(a, b) = tr_cc + s(a) + s(b) + static_cast<double>(dc) * wrr;
      }
    }
    return out;
  }
  Vector t = dr > 1 ? Vector(w_cr.rowwise().sum()) : Vector(Vector::Zero(dc));
  Matrix out(dc, dc);
  for (Index a = 0; a < dc; ++a) {
    for (Index b = 0; b < dc; ++b) {
      out(a, b) = static_cast<double>(dr) * w_cc(a, b) + t(a) + t(b) + tr_rr;
    }
  }
  return out;
}

SufficientStats pseudo_stats(const FiberPoint& fpoint,
                             const FactorPrecision& fp,
                             bool correction_enabled) {
  const Matrix& z = fpoint.z_star;
  if (z.rows() != fp.d_rows() || z.cols() != fp.d_cols()) {
    throw DimensionError("pseudo_stats: fiber point/factor dimension mismatch");
  }
  Matrix s_rows = z * z.transpose();
  Matrix s_cols = z.transpose() * z;
  if (correction_enabled) {
    TangentProjector tp(fp);
    s_rows += correction_matrix(tp, Axis::Rows);
    s_cols += correction_matrix(tp, Axis::Cols);
  }
  return SufficientStats(psd_floored(symmetrized(s_rows), kStatsFloor),
                         psd_floored(symmetrized(s_cols), kStatsFloor));
}

}  // namespace medmagma

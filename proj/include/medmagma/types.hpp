#pragma once

#include <Eigen/Dense>

namespace medmagma {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Axis { Rows, Cols };

// Max-abs-entry norm, the scale reference used by solver tolerances.
inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Entrywise scaling by per-row and per-column factors: out_ij = r_i * c_j * m_ij.
inline Matrix scale_rows_cols(const Matrix& m, const Vector& row_factors,
                              const Vector& col_factors) {
  return row_factors.asDiagonal() * m * col_factors.asDiagonal();
}

}  // namespace medmagma

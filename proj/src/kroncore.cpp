#include "medmagma/kroncore.hpp"

#include <cmath>
#include <string>

#include "medmagma/errors.hpp"
#include "medmagma/random.hpp"

namespace medmagma {

FactorPrecision::FactorPrecision(Matrix psi_rows, Matrix psi_cols) {
  if (psi_rows.rows() != psi_rows.cols() || psi_cols.rows() != psi_cols.cols()) {
    throw DimensionError("FactorPrecision: factors must be square");
  }
  if (psi_rows.rows() == 0 || psi_cols.rows() == 0) {
    throw DimensionError("FactorPrecision: factors must be non-empty");
  }
  psi_rows_ = symmetrized(psi_rows);
  psi_cols_ = symmetrized(psi_cols);
}

FactorPrecision FactorPrecision::identity(Index d_rows, Index d_cols) {
  return FactorPrecision(Matrix::Identity(d_rows, d_rows),
                         Matrix::Identity(d_cols, d_cols));
}

EigenFactor::EigenFactor(const FactorPrecision& fp) {
  Eigen::SelfAdjointEigenSolver<Matrix> es_rows(fp.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es_cols(fp.cols());
  vectors_rows_ = es_rows.eigenvectors();
  values_rows_ = es_rows.eigenvalues();
  vectors_cols_ = es_cols.eigenvectors();
  values_cols_ = es_cols.eigenvalues();
}

double EigenFactor::min_pair_sum() const {
  return values_rows_.minCoeff() + values_cols_.minCoeff();
}

double EigenFactor::max_pair_sum() const {
  return values_rows_.maxCoeff() + values_cols_.maxCoeff();
}

bool EigenFactor::is_positive_definite() const {
  return min_pair_sum() > kPairSumFloor * std::abs(max_pair_sum());
}

void EigenFactor::require_positive_definite() const {
  if (!is_positive_definite()) {
    throw DefinitenessError(
        "Kronecker sum not positive definite: min pair sum " +
        std::to_string(min_pair_sum()) + ", max pair sum " +
        std::to_string(max_pair_sum()));
  }
}

Matrix kron_sum_apply(const FactorPrecision& fp, const Matrix& m) {
  if (m.rows() != fp.d_rows() || m.cols() != fp.d_cols()) {
    throw DimensionError("kron_sum_apply: matrix is " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", factors expect " +
                         std::to_string(fp.d_rows()) + "x" +
                         std::to_string(fp.d_cols()));
  }
  return fp.rows() * m + m * fp.cols();
}

double kron_sum_entry(const FactorPrecision& fp, Index i, Index k, Index j,
                      Index l) {
  if (i < 0 || i >= fp.d_rows() || k < 0 || k >= fp.d_rows() || j < 0 ||
      j >= fp.d_cols() || l < 0 || l >= fp.d_cols()) {
    throw IndexError("kron_sum_entry: index out of range");
  }
  double value = 0.0;
  if (j == l) value += fp.rows()(i, k);
  if (i == k) value += fp.cols()(j, l);
  return value;
}

double kron_sum_logdet(const EigenFactor& ef) {
  ef.require_positive_definite();
  double acc = 0.0;
  for (Index i = 0; i < ef.d_rows(); ++i) {
    for (Index j = 0; j < ef.d_cols(); ++j) {
      acc += std::log(ef.values_rows()(i) + ef.values_cols()(j));
    }
  }
  return acc;
}

Matrix partial_trace_inverse(const EigenFactor& ef, Axis axis) {
  ef.require_positive_definite();
  const Vector& own = axis == Axis::Rows ? ef.values_rows() : ef.values_cols();
  const Vector& other = axis == Axis::Rows ? ef.values_cols() : ef.values_rows();
  const Matrix& vecs = axis == Axis::Rows ? ef.vectors_rows() : ef.vectors_cols();
  Vector diag(own.size());
  for (Index i = 0; i < own.size(); ++i) {
    double acc = 0.0;
    for (Index j = 0; j < other.size(); ++j) acc += 1.0 / (own(i) + other(j));
    diag(i) = acc;
  }
  return vecs * diag.asDiagonal() * vecs.transpose();
}

Matrix sample_latent(const EigenFactor& ef, std::uint64_t seed) {
  ef.require_positive_definite();
  auto eng = make_engine(seed);
  Matrix g(ef.d_rows(), ef.d_cols());
  for (Index i = 0; i < g.rows(); ++i) {
    for (Index j = 0; j < g.cols(); ++j) {
      g(i, j) = standard_normal(eng) /
                std::sqrt(ef.values_rows()(i) + ef.values_cols()(j));
    }
  }
  return ef.vectors_rows() * g * ef.vectors_cols().transpose();
}

}  // namespace medmagma

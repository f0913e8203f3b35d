#include <doctest.h>

#include <cmath>

#include "medmagma/errors.hpp"
#include "medmagma/kroncore.hpp"
#include "medmagma/random.hpp"
#include "oracles.hpp"

using namespace medmagma;

namespace {

Vector vectorize(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

}  // namespace

TEST_SUITE_BEGIN("kroncore");

TEST_CASE("factor precision symmetrizes on ingestion") {
  Matrix skew(2, 2);
  skew << 1.0, 0.5, 0.3, 2.0;
  FactorPrecision fp(skew, Matrix::Identity(2, 2));
  CHECK(fp.rows()(0, 1) == doctest::Approx(0.4));
  CHECK(fp.rows()(1, 0) == doctest::Approx(0.4));
  CHECK_THROWS_AS(FactorPrecision(Matrix::Zero(2, 3), Matrix::Identity(2, 2)),
                  DimensionError);
}

TEST_CASE("kron_sum_apply identity case doubles the input") {
  FactorPrecision fp = FactorPrecision::identity(2, 2);
  Matrix m = oracle::random_matrix(2, 2, 11);
  CHECK(max_abs(kron_sum_apply(fp, m) - 2.0 * m) == 0.0);
}

TEST_CASE("kron_sum_apply diagonal action") {
  Matrix diag_12 = Matrix::Zero(2, 2);
  diag_12(0, 0) = 1.0;
  diag_12(1, 1) = 2.0;
  FactorPrecision fp(diag_12, Matrix::Zero(2, 2));
  Matrix expected(2, 2);
  expected << 1, 1, 2, 2;
  CHECK(max_abs(kron_sum_apply(fp, Matrix::Ones(2, 2)) - expected) == 0.0);
}

TEST_CASE("kron_sum_apply matches the dense assembly") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 4, 21);
  FactorPrecision fp(psi_r, psi_c);
  Matrix m = oracle::random_matrix(3, 4, 22);
  Matrix big = oracle::dense_kron_sum(psi_r, psi_c);
  Vector via_dense = big * vectorize(m);
  CHECK(max_abs(kron_sum_apply(fp, m) -
                Eigen::Map<const Matrix>(via_dense.data(), 3, 4)) < 1e-12);
  CHECK_THROWS_AS(kron_sum_apply(fp, Matrix::Zero(4, 3)), DimensionError);
}

TEST_CASE("kron_sum_apply equals dense multiplication across small sizes") {
  for (Index dr = 2; dr <= 6; ++dr) {
    for (Index dc = 2; dc <= 6; ++dc) {
      auto [psi_r, psi_c] = oracle::random_pd_pair(dr, dc, 100 + dr * 10 + dc);
      FactorPrecision fp(psi_r, psi_c);
      Matrix m = oracle::random_matrix(dr, dc, 200 + dr * 10 + dc);
      Vector dense =
          oracle::dense_kron_sum(psi_r, psi_c) * vectorize(m);
      CHECK(max_abs(kron_sum_apply(fp, m) -
                    Eigen::Map<const Matrix>(dense.data(), dr, dc)) < 1e-10);
    }
  }
}

TEST_CASE("kron_sum_entry") {
  FactorPrecision id = FactorPrecision::identity(2, 2);
  CHECK(kron_sum_entry(id, 0, 0, 0, 0) == 2.0);
  CHECK(kron_sum_entry(id, 0, 1, 0, 1) == 0.0);
  CHECK_THROWS_AS(kron_sum_entry(id, 0, 2, 0, 0), IndexError);

  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 3, 31);
  FactorPrecision fp(psi_r, psi_c);
  Matrix big = oracle::dense_kron_sum(fp.rows(), fp.cols());
  for (Index i = 0; i < 3; ++i)
    for (Index k = 0; k < 3; ++k)
      for (Index j = 0; j < 3; ++j)
        for (Index l = 0; l < 3; ++l)
          CHECK(kron_sum_entry(fp, i, k, j, l) ==
                doctest::Approx(big(i + j * 3, k + l * 3)).epsilon(1e-12));
}

TEST_CASE("kron_sum_logdet closed forms") {
  EigenFactor id(FactorPrecision::identity(2, 2));
  CHECK(kron_sum_logdet(id) == doctest::Approx(4.0 * std::log(2.0)));

  Matrix diag_13 = Matrix::Zero(2, 2);
  diag_13(0, 0) = 1.0;
  diag_13(1, 1) = 3.0;
  EigenFactor zero_cols(FactorPrecision(diag_13, Matrix::Zero(2, 2)));
  CHECK(kron_sum_logdet(zero_cols) == doctest::Approx(2.0 * std::log(3.0)));
}

TEST_CASE("kron_sum_logdet matches the dense determinant") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(4, 5, 41);
  EigenFactor ef(FactorPrecision(psi_r, psi_c));
  Matrix big = oracle::dense_kron_sum(psi_r, psi_c);
  double dense = std::log(big.determinant());
  CHECK(kron_sum_logdet(ef) == doctest::Approx(dense).epsilon(1e-9));
}

TEST_CASE("kron_sum_logdet rejects indefinite pair sums") {
  Matrix neg = -Matrix::Identity(2, 2);
  EigenFactor ef(FactorPrecision(neg, Matrix::Zero(2, 2)));
  CHECK_THROWS_AS(kron_sum_logdet(ef), DefinitenessError);
}

TEST_CASE("kron_sum_logdet is invariant under the diagonal shift") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 4, 51);
  double base = kron_sum_logdet(EigenFactor(FactorPrecision(psi_r, psi_c)));
  for (double c : {-0.2, 0.1, 0.7}) {
    Matrix r = psi_r + c * Matrix::Identity(3, 3);
    Matrix l = psi_c - c * Matrix::Identity(4, 4);
    CHECK(kron_sum_logdet(EigenFactor(FactorPrecision(r, l))) ==
          doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("partial_trace_inverse diagonal cases") {
  EigenFactor id(FactorPrecision::identity(2, 2));
  CHECK(max_abs(partial_trace_inverse(id, Axis::Rows) -
                Matrix::Identity(2, 2)) < 1e-14);

  Matrix diag_13 = Matrix::Zero(2, 2);
  diag_13(0, 0) = 1.0;
  diag_13(1, 1) = 3.0;
  EigenFactor ef(FactorPrecision(Matrix::Identity(2, 2), diag_13));
  CHECK(max_abs(partial_trace_inverse(ef, Axis::Rows) -
                0.75 * Matrix::Identity(2, 2)) < 1e-14);
}

TEST_CASE("partial_trace_inverse matches dense inverse traces") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 4, 61);
  EigenFactor ef(FactorPrecision(psi_r, psi_c));
  Matrix inv = oracle::dense_kron_sum(psi_r, psi_c).inverse();
  CHECK(max_abs(partial_trace_inverse(ef, Axis::Rows) -
                oracle::dense_partial_trace(inv, 3, 4, Axis::Rows)) < 1e-8);
  CHECK(max_abs(partial_trace_inverse(ef, Axis::Cols) -
                oracle::dense_partial_trace(inv, 3, 4, Axis::Cols)) < 1e-8);
}

TEST_CASE("partial traces of both axes share their trace") {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    auto [psi_r, psi_c] = oracle::random_pd_pair(4, 6, seed);
    EigenFactor ef(FactorPrecision(psi_r, psi_c));
    double rows_tr = partial_trace_inverse(ef, Axis::Rows).trace();
    double cols_tr = partial_trace_inverse(ef, Axis::Cols).trace();
    double pair_sum = 0.0;
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 6; ++j)
        pair_sum += 1.0 / (ef.values_rows()(i) + ef.values_cols()(j));
    CHECK(rows_tr == doctest::Approx(pair_sum).epsilon(1e-12));
    CHECK(cols_tr == doctest::Approx(pair_sum).epsilon(1e-12));
  }
}

TEST_CASE("sample_latent is deterministic in the seed") {
  EigenFactor ef(FactorPrecision::identity(3, 4));
  CHECK(max_abs(sample_latent(ef, 77) - sample_latent(ef, 77)) == 0.0);
  CHECK(max_abs(sample_latent(ef, 77) - sample_latent(ef, 78)) > 0.0);
}

TEST_CASE("sample_latent empirical covariance approaches the inverse") {
  EigenFactor ef(FactorPrecision::identity(2, 2));
  const int draws = 20000;
  Matrix cov = Matrix::Zero(4, 4);
  for (int t = 0; t < draws; ++t) {
    Vector z = vectorize(sample_latent(ef, 1000 + t));
    cov += z * z.transpose();
  }
  cov /= draws;
  CHECK(max_abs(cov - 0.5 * Matrix::Identity(4, 4)) < 0.05);
}

TEST_CASE("sample_latent marginal variances track the pair sums") {
  Matrix diag_19 = Matrix::Zero(2, 2);
  diag_19(0, 0) = 1.0;
  diag_19(1, 1) = 9.0;
  EigenFactor ef(FactorPrecision(diag_19, Matrix::Identity(2, 2)));
  const int draws = 60000;
  Matrix second_moment = Matrix::Zero(2, 2);
  for (int t = 0; t < draws; ++t) {
    Matrix z = sample_latent(ef, 555 + t);
    second_moment += z.cwiseProduct(z);
  }
  second_moment /= draws;
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) {
      double expected = 1.0 / (diag_19(i, i) + 1.0);
      CHECK(second_moment(i, j) ==
            doctest::Approx(expected).epsilon(0.05));
    }
  }
}

TEST_SUITE_END();

#include <doctest.h>

#include <cmath>

#include "medmagma/errors.hpp"
#include "medmagma/gmgm.hpp"
#include "medmagma/random.hpp"
#include "oracles.hpp"

using namespace medmagma;

namespace {

Vector vectorize(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

// Central finite differences of nll under symmetric perturbations; the
// directional derivative along J^{ik} + J^{ki} equals 2 G_ik off the
// diagonal and G_ii on it.
double fd_worst_relative_error(const FactorPrecision& fp,
                               const SufficientStats& stats, double h) {
  NllGradient g = grad_nll(fp, stats);
  double worst = 0.0;
  auto probe = [&](Axis axis, Index i, Index k) {
    Matrix bump = Matrix::Zero(axis == Axis::Rows ? fp.d_rows() : fp.d_cols(),
                               axis == Axis::Rows ? fp.d_rows() : fp.d_cols());
    bump(i, k) = h;
    bump(k, i) = h;
    if (i == k) bump(i, i) = h;
    Matrix rows_p = fp.rows(), cols_p = fp.cols();
    Matrix rows_m = fp.rows(), cols_m = fp.cols();
    (axis == Axis::Rows ? rows_p : cols_p) += bump;
    (axis == Axis::Rows ? rows_m : cols_m) -= bump;
    double fd = (nll(FactorPrecision(rows_p, cols_p), stats) -
                 nll(FactorPrecision(rows_m, cols_m), stats)) /
                (2.0 * h);
    const Matrix& grad = axis == Axis::Rows ? g.rows : g.cols;
    double analytic = i == k ? grad(i, i) : 2.0 * grad(i, k);
    double scale = std::max({std::abs(fd), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(fd - analytic) / scale);
  };
  for (Index i = 0; i < fp.d_rows(); ++i)
    for (Index k = i; k < fp.d_rows(); ++k) probe(Axis::Rows, i, k);
  for (Index j = 0; j < fp.d_cols(); ++j)
    for (Index l = j; l < fp.d_cols(); ++l) probe(Axis::Cols, j, l);
  return worst;
}

SufficientStats exact_stats_for(const Matrix& psi_r, const Matrix& psi_c) {
  Matrix inv = oracle::dense_kron_sum(psi_r, psi_c).inverse();
  return SufficientStats(
      oracle::dense_partial_trace(inv, psi_r.rows(), psi_c.rows(), Axis::Rows),
      oracle::dense_partial_trace(inv, psi_r.rows(), psi_c.rows(), Axis::Cols));
}

}  // namespace

TEST_SUITE_BEGIN("gmgm");

TEST_CASE("sufficient stats validate trace consistency") {
  CHECK_THROWS(SufficientStats(Matrix::Identity(2, 2),
                               5.0 * Matrix::Identity(3, 3)));
  Matrix z = oracle::random_matrix(3, 4, 5);
  SufficientStats ok(z * z.transpose(), z.transpose() * z);
  CHECK(ok.trace_gap() < 1e-12);
}

TEST_CASE("psd_floored is an exact no-op on PD input") {
  Matrix pd = oracle::random_pd_pair(4, 2, 6).first;
  Matrix floored = psd_floored(pd, 1e-8);
  CHECK(max_abs(floored - pd) == 0.0);

  Matrix indef = pd;
  indef(0, 0) = -10.0;
  Matrix fixed = psd_floored(symmetrized(indef), 1e-8);
  Eigen::SelfAdjointEigenSolver<Matrix> es(fixed);
  CHECK(es.eigenvalues().minCoeff() >= 0.0);
}

TEST_CASE("nll closed form at the identity") {
  FactorPrecision id = FactorPrecision::identity(2, 2);
  SufficientStats stats(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  CHECK(nll(id, stats) == doctest::Approx(2.0 - 2.0 * std::log(2.0)));
}

TEST_CASE("nll is invariant under the trace shift with matched stats") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 3, 12);
  Matrix z = oracle::random_matrix(3, 3, 13);
  SufficientStats stats(z * z.transpose(), z.transpose() * z);
  double base = nll(FactorPrecision(psi_r, psi_c), stats);
  double c = 0.1;
  double shifted = nll(FactorPrecision(psi_r + c * Matrix::Identity(3, 3),
                                       psi_c - c * Matrix::Identity(3, 3)),
                       stats);
  CHECK(shifted == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("nll equals the dense negative log density up to its constant") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(4, 5, 14);
  Matrix z = oracle::random_matrix(4, 5, 15);
  SufficientStats stats(z * z.transpose(), z.transpose() * z);
  Matrix big = oracle::dense_kron_sum(psi_r, psi_c);
  Vector v = vectorize(z);
  double dense = 0.5 * v.dot(big * v) - 0.5 * std::log(big.determinant());
  CHECK(nll(FactorPrecision(psi_r, psi_c), stats) ==
        doctest::Approx(dense).epsilon(1e-9));
}

TEST_CASE("gradient vanishes at the identity stationary point") {
  FactorPrecision id = FactorPrecision::identity(2, 2);
  SufficientStats stats(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  CHECK(grad_nll(id, stats).inf_norm() < 1e-14);
}

TEST_CASE("gradient matches central finite differences at random points") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    auto [psi_r, psi_c] = oracle::random_pd_pair(3, 4, 40 + seed);
    Matrix z = oracle::random_matrix(3, 4, 50 + seed);
    SufficientStats stats(z * z.transpose(), z.transpose() * z);
    CHECK(fd_worst_relative_error(FactorPrecision(psi_r, psi_c), stats, 1e-5) <
          1e-5);
  }
}

TEST_CASE("gradient shrinks near the generating precision") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 4, 60);
  EigenFactor truth(FactorPrecision(psi_r, psi_c));
  Matrix s_rows = Matrix::Zero(3, 3);
  Matrix s_cols = Matrix::Zero(4, 4);
  const int draws = 4000;
  for (int t = 0; t < draws; ++t) {
    Matrix z = sample_latent(truth, derive_seed(61, t));
    s_rows += z * z.transpose();
    s_cols += z.transpose() * z;
  }
  SufficientStats stats(s_rows / draws, s_cols / draws);
  double at_truth = grad_nll(FactorPrecision(psi_r, psi_c), stats).inf_norm();
  double at_identity =
      grad_nll(FactorPrecision::identity(3, 4), stats).inf_norm();
  CHECK(at_truth < at_identity);
}

TEST_CASE("gradient off-diagonals are invariant under the trace shift") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 4, 70);
  Matrix z = oracle::random_matrix(3, 4, 71);
  SufficientStats stats(z * z.transpose(), z.transpose() * z);
  NllGradient base = grad_nll(FactorPrecision(psi_r, psi_c), stats);
  double c = 0.25;
  NllGradient shifted =
      grad_nll(FactorPrecision(psi_r + c * Matrix::Identity(3, 3),
                               psi_c - c * Matrix::Identity(4, 4)),
               stats);
  Matrix diff_r = (base.rows - shifted.rows).cwiseAbs();
  Matrix diff_c = (base.cols - shifted.cols).cwiseAbs();
  diff_r.diagonal().setZero();
  diff_c.diagonal().setZero();
  CHECK(max_abs(diff_r) < 1e-8);
  CHECK(max_abs(diff_c) < 1e-8);
}

TEST_CASE("gmgm_fit fixed point at identity stats") {
  SufficientStats stats(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  GmgmResult fit = gmgm_fit(stats);
  Matrix big = oracle::dense_kron_sum(fit.factors.rows(), fit.factors.cols());
  CHECK(max_abs(big - 2.0 * Matrix::Identity(4, 4)) < 1e-5);
  CHECK(fit.factors.rows().trace() / 2.0 ==
        doctest::Approx(fit.factors.cols().trace() / 2.0).epsilon(1e-12));
}

TEST_CASE("gmgm_fit recovers a planted precision from exact statistics") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 4, 80);
  SufficientStats stats = exact_stats_for(psi_r, psi_c);
  GmgmConfig cfg;
  cfg.tol = 1e-10;
  cfg.max_iters = 20000;
  GmgmResult fit = gmgm_fit(stats, cfg);
  Matrix truth = oracle::dense_kron_sum(psi_r, psi_c);
  Matrix got = oracle::dense_kron_sum(fit.factors.rows(), fit.factors.cols());
  CHECK((got - truth).norm() / truth.norm() < 1e-6);
}

TEST_CASE("gmgm_fit handles a rank-deficient single-sample Gram") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 4, 90);
  Matrix z = sample_latent(EigenFactor(FactorPrecision(psi_r, psi_c)), 91);
  SufficientStats stats(z * z.transpose(), z.transpose() * z);
  GmgmResult fit = gmgm_fit(stats);  // defaults; the floor keeps it solvable
  CHECK(fit.grad_inf_norm <=
        GmgmConfig{}.tol *
            std::max(max_abs(stats.rows()), max_abs(stats.cols())));
}

TEST_CASE("gmgm_fit reports non-convergence with the last iterate") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 3, 95);
  SufficientStats stats = exact_stats_for(psi_r, psi_c);
  GmgmConfig cfg;
  cfg.max_iters = 1;
  cfg.tol = 1e-14;
  try {
    gmgm_fit(stats, cfg);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations == 1);
    CHECK(e.grad_norm > 0.0);
    CHECK(e.last_rows.rows() == 3);
    CHECK(e.last_cols.rows() == 3);
  }
}

TEST_CASE("fitted off-diagonals ignore trace-preserving diagonal changes") {
  auto [psi_r, psi_c] = oracle::random_pd_pair(3, 4, 99);
  SufficientStats stats = exact_stats_for(psi_r, psi_c);
  GmgmConfig cfg;
  cfg.tol = 1e-10;
  cfg.max_iters = 20000;
  GmgmResult fit = gmgm_fit(stats, cfg);

  // the same Omega presented through a shifted factor pair
  double c = 0.15;
  SufficientStats shifted_stats =
      exact_stats_for(psi_r + c * Matrix::Identity(3, 3),
                      psi_c - c * Matrix::Identity(4, 4));
  GmgmResult refit = gmgm_fit(shifted_stats, cfg);
  Matrix diff_r = (fit.factors.rows() - refit.factors.rows()).cwiseAbs();
  Matrix diff_c = (fit.factors.cols() - refit.factors.cols()).cwiseAbs();
  diff_r.diagonal().setZero();
  diff_c.diagonal().setZero();
  CHECK(max_abs(diff_r) < 1e-8);
  CHECK(max_abs(diff_c) < 1e-8);
}

TEST_SUITE_END();

#include "medmagma/gmgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include "medmagma/errors.hpp"

namespace medmagma {

SufficientStats::SufficientStats(Matrix s_rows, Matrix s_cols) {
  if (s_rows.rows() != s_rows.cols() || s_cols.rows() != s_cols.cols()) {
    throw DimensionError("SufficientStats: matrices must be square");
  }
  s_rows_ = symmetrized(s_rows);
  s_cols_ = symmetrized(s_cols);
  if (trace_gap() > 1e-4) {
    throw DimensionError(
        "SufficientStats: traces disagree (relative gap " +
        std::to_string(trace_gap()) +
        "); row and column Grams must come from the same latent matrix");
  }
}

double SufficientStats::trace_gap() const {
  double tr = s_rows_.trace();
  double tc = s_cols_.trace();
  double scale = std::max({std::abs(tr), std::abs(tc), 1e-300});
  return std::abs(tr - tc) / scale;
}

Matrix psd_floored(const Matrix& sym, double rel_floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  double floor = rel_floor * std::max(es.eigenvalues().maxCoeff(), 0.0);
  if (es.eigenvalues().minCoeff() >= floor) return sym;
  Vector clipped = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

double nll(const EigenFactor& ef, const FactorPrecision& fp,
           const SufficientStats& stats) {
  double trace_term = (fp.rows().cwiseProduct(stats.rows())).sum() +
                      (fp.cols().cwiseProduct(stats.cols())).sum();
  return 0.5 * trace_term - 0.5 * kron_sum_logdet(ef);
}

double nll(const FactorPrecision& fp, const SufficientStats& stats) {
  return nll(EigenFactor(fp), fp, stats);
}

NllGradient grad_nll(const FactorPrecision& fp, const SufficientStats& stats) {
  if (fp.d_rows() != stats.d_rows() || fp.d_cols() != stats.d_cols()) {
    throw DimensionError("grad_nll: factor/stats dimension mismatch");
  }
  EigenFactor ef(fp);
  return {0.5 * (stats.rows() - partial_trace_inverse(ef, Axis::Rows)),
          0.5 * (stats.cols() - partial_trace_inverse(ef, Axis::Cols))};
}

FactorPrecision trace_normalized(const FactorPrecision& fp) {
  double dr = static_cast<double>(fp.d_rows());
  double dc = static_cast<double>(fp.d_cols());
  double shift = 0.5 * (fp.cols().trace() / dc - fp.rows().trace() / dr);
  return FactorPrecision(
      fp.rows() + shift * Matrix::Identity(fp.d_rows(), fp.d_rows()),
      fp.cols() - shift * Matrix::Identity(fp.d_cols(), fp.d_cols()));
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

// Solver state at one iterate, everything derived from a single pair of
// eigendecompositions.
struct IterateState {
  Eigen::SelfAdjointEigenSolver<Matrix> es_rows;
  Eigen::SelfAdjointEigenSolver<Matrix> es_cols;
  bool feasible = false;
  double objective = 0.0;

  IterateState(const Matrix& a, const Matrix& b, const SufficientStats& stats)
      : es_rows(a), es_cols(b) {
    const Vector& lr = es_rows.eigenvalues();
    const Vector& lc = es_cols.eigenvalues();
    double min_pair = lr.minCoeff() + lc.minCoeff();
    double max_pair = lr.maxCoeff() + lc.maxCoeff();
    feasible = min_pair > EigenFactor::kPairSumFloor * std::abs(max_pair);
    if (!feasible) return;
    double logdet = 0.0;
    for (Index i = 0; i < lr.size(); ++i) {
      for (Index j = 0; j < lc.size(); ++j) logdet += std::log(lr(i) + lc(j));
    }
    objective = 0.5 * (a.cwiseProduct(stats.rows()).sum() +
                       b.cwiseProduct(stats.cols()).sum()) -
                0.5 * logdet;
  }
};

}  // namespace

// Newton's method with a backtracking (and expanding) line search. In the
// joint eigenbasis of the current factors the Hessian of the negative log
// likelihood decouples: each off-diagonal factor entry solves a scalar
// problem, and the two eigenvalue diagonals couple through one
// (d_rows + d_cols) system. A Newton step therefore costs the same O(d^3) as
// a gradient step but is unaffected by the extreme conditioning that floored
// rank-deficient statistics induce (stationary factor eigenvalues of order
// 1/floor), where first-order methods stall far from the gradient tolerance.
// Steps that violate the pair-sum floor or the Armijo decrease are rejected,
// so iterates stay feasible and the objective never increases.
GmgmResult gmgm_fit(const SufficientStats& raw_stats, const GmgmConfig& cfg) {
  SufficientStats stats(psd_floored(raw_stats.rows(), cfg.psd_floor),
                        psd_floored(raw_stats.cols(), cfg.psd_floor));
  const Index dr = stats.d_rows();
  const Index dc = stats.d_cols();
  const double scale =
      std::max({max_abs(stats.rows()), max_abs(stats.cols()), 1e-300});

  Matrix a = Matrix::Identity(dr, dr);
  Matrix b = Matrix::Identity(dc, dc);
  IterateState state(a, b, stats);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Matrix& vr = state.es_rows.eigenvectors();
    const Matrix& vc = state.es_cols.eigenvectors();
    const Vector& lr = state.es_rows.eigenvalues();
    const Vector& lc = state.es_cols.eigenvalues();

    // reciprocal pair sums, the workhorse of gradient and Hessian
    Matrix recip(dr, dc);
    for (Index i = 0; i < dr; ++i) {
      for (Index j = 0; j < dc; ++j) recip(i, j) = 1.0 / (lr(i) + lc(j));
    }

    Matrix ptrace_rows = vr * Vector(recip.rowwise().sum()).asDiagonal() *
                         vr.transpose();
    Matrix ptrace_cols = vc * Vector(recip.colwise().sum()).asDiagonal() *
                         vc.transpose();
    Matrix grad_a = 0.5 * (stats.rows() - ptrace_rows);
    Matrix grad_b = 0.5 * (stats.cols() - ptrace_cols);
    double gnorm = std::max(max_abs(grad_a), max_abs(grad_b));
    if (gnorm < cfg.tol * scale) {
      return {trace_normalized(FactorPrecision(a, b)), iter, gnorm,
              state.objective};
    }

    // gradient rotated into the eigenbasis
    Matrix ga = vr.transpose() * grad_a * vr;
    Matrix gb = vc.transpose() * grad_b * vc;

    // Hessian coefficients: c^rows_ik = sum_j r_ij r_kj (and transposed
    // roles for cols); the diagonal blocks couple through m_ij = r_ij^2.
    Matrix c_rows = recip * recip.transpose();
    Matrix c_cols = recip.transpose() * recip;
    Matrix m = recip.cwiseProduct(recip);

    Matrix da = Matrix::Zero(dr, dr);
    Matrix db = Matrix::Zero(dc, dc);
    for (Index i = 0; i < dr; ++i) {
      for (Index k = i + 1; k < dr; ++k) {
        double u = -2.0 * ga(i, k) / c_rows(i, k);
        da(i, k) = u;
        da(k, i) = u;
      }
    }
    for (Index j = 0; j < dc; ++j) {
      for (Index l = j + 1; l < dc; ++l) {
        double u = -2.0 * gb(j, l) / c_cols(j, l);
        db(j, l) = u;
        db(l, j) = u;
      }
    }
    {
      Matrix h = Matrix::Zero(dr + dc, dr + dc);
      h.topLeftCorner(dr, dr).diagonal() = c_rows.diagonal();
      h.bottomRightCorner(dc, dc).diagonal() = c_cols.diagonal();
      h.topRightCorner(dr, dc) = m;
      h.bottomLeftCorner(dc, dr) = m.transpose();
      h *= 0.5;
      // the (I, -I) trace shift is a null direction of the model; a small
      // ridge keeps the solve well-posed and the step's component along it
      // is immaterial
      h.diagonal().array() += 1e-12 * h.diagonal().maxCoeff() + 1e-300;
      Vector rhs(dr + dc);
      rhs.head(dr) = -ga.diagonal();
      rhs.tail(dc) = -gb.diagonal();
      Vector z = h.ldlt().solve(rhs);
      da.diagonal() = z.head(dr);
      db.diagonal() = z.tail(dc);
    }

    Matrix dir_a = vr * da * vr.transpose();
    Matrix dir_b = vc * db * vc.transpose();
    double slope = grad_a.cwiseProduct(dir_a).sum() +
                   grad_b.cwiseProduct(dir_b).sum();
    if (!(slope < 0.0) || !std::isfinite(slope)) {
      dir_a = -grad_a / scale;
      dir_b = -grad_b / scale;
      slope = grad_a.cwiseProduct(dir_a).sum() +
              grad_b.cwiseProduct(dir_b).sum();
    }

    auto evaluate = [&](double t) {
      return IterateState(a + t * dir_a, b + t * dir_b, stats);
    };
    auto acceptable = [&](const IterateState& cand, double t) {
      return cand.feasible &&
             cand.objective <= state.objective + 1e-4 * t * slope;
    };

    bool accepted = false;
    double t = 1.0;
    for (int bt = 0; bt < 60; ++bt) {
      IterateState cand = evaluate(t);
      if (acceptable(cand, t)) {
        // expand while it keeps paying off (far-out stationary points)
        while (t < 1e12) {
          IterateState wider = evaluate(2.0 * t);
          if (!acceptable(wider, 2.0 * t) ||
              wider.objective > cand.objective) {
            break;
          }
          t *= 2.0;
          cand = std::move(wider);
        }
        a += t * dir_a;
        b += t * dir_b;
        state = std::move(cand);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (gnorm < cfg.tol * scale) {
        return {trace_normalized(FactorPrecision(a, b)), iter, gnorm,
                state.objective};
      }
      throw ConvergenceError(
          "gmgm_fit: line search stalled with gradient inf-norm " +
              fmt(gnorm) + " vs tol " + fmt(cfg.tol * scale),
          a, b, gnorm, iter);
    }
  }
  NllGradient grad = grad_nll(FactorPrecision(a, b), stats);
  double gnorm = grad.inf_norm();
  if (gnorm < cfg.tol * scale) {
    return {trace_normalized(FactorPrecision(a, b)), cfg.max_iters, gnorm,
            state.objective};
  }
  throw ConvergenceError(
      "gmgm_fit: no convergence after " + std::to_string(cfg.max_iters) +
          " iterations; gradient inf-norm " + fmt(gnorm) + " vs tol " +
          fmt(cfg.tol * scale),
      a, b, gnorm, cfg.max_iters);
}

}  // namespace medmagma

#pragma once

#include "medmagma/kroncore.hpp"
#include "medmagma/types.hpp"

namespace medmagma {

// Expected Gram matrices of the latent variable. Symmetrized on ingestion;
// in the uncorrected case both traces equal ||Z||_F^2 and the Laplace
// correction preserves the equality, so a gross mismatch means the caller
// paired stats from different sources.
class SufficientStats {
 public:
  SufficientStats(Matrix s_rows, Matrix s_cols);

  const Matrix& rows() const { return s_rows_; }
  const Matrix& cols() const { return s_cols_; }
  Index d_rows() const { return s_rows_.rows(); }
  Index d_cols() const { return s_cols_.rows(); }

  double trace_gap() const;  // relative |tr rows - tr cols|

 private:
  Matrix s_rows_, s_cols_;
};

// Eigenvalue floor at rel_floor * lambda_max; exact no-op when the input
// already satisfies it.
Matrix psd_floored(const Matrix& sym, double rel_floor);

// (1/2)[tr(Psi_rows S_rows) + tr(Psi_cols S_cols)] - (1/2) log det Omega,
// constants dropped.
double nll(const FactorPrecision& fp, const SufficientStats& stats);
double nll(const EigenFactor& ef, const FactorPrecision& fp,
           const SufficientStats& stats);

struct NllGradient {
  Matrix rows;
  Matrix cols;
  double inf_norm() const { return std::max(max_abs(rows), max_abs(cols)); }
};

// (1/2)(S_axis - partial_trace_inverse(axis)) per axis; zero at the MLE.
NllGradient grad_nll(const FactorPrecision& fp, const SufficientStats& stats);

struct GmgmConfig {
  double tol = 1e-6;     // gradient inf-norm relative to ||stats||_inf
  int max_iters = 2000;
  double psd_floor = 1e-8;  // applied to the input stats
};

struct GmgmResult {
  FactorPrecision factors;
  int iterations = 0;
  double grad_inf_norm = 0.0;
  double objective = 0.0;
};

// Unregularized Kronecker-sum Gaussian MLE from sufficient statistics.
// Gradient descent in factor space with Barzilai-Borwein step sizes and a
// backtracking line search; steps that break the pair-sum positivity floor
// or increase the objective are rejected, so the objective is non-increasing
// across accepted steps. The returned pair is shifted by c* so that
// tr(Psi_rows)/d_rows = tr(Psi_cols)/d_cols, fixing the unidentifiable
// (Psi_rows + cI, Psi_cols - cI) direction.
//
// Throws ConvergenceError (with the last iterate) after max_iters.
GmgmResult gmgm_fit(const SufficientStats& stats, const GmgmConfig& cfg = {});

// Applies the trace-balancing convention to an arbitrary pair.
FactorPrecision trace_normalized(const FactorPrecision& fp);

}  // namespace medmagma

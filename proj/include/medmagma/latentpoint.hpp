#pragma once

#include <optional>
#include <vector>

#include "medmagma/denoise.hpp"
#include "medmagma/kroncore.hpp"
#include "medmagma/types.hpp"

namespace medmagma {

// Strictly positive per-row/per-column scale vectors. The flip-flop solver
// returns factors with unit product per axis (the geometric-mean constraint
// that removes the scale non-identifiability); raw noise draws from the
// synthetic generator are stored unnormalized, since the model absorbs the
// global scale anyway.
struct NoiseFactors {
  Vector r_rows;
  Vector r_cols;

  NoiseFactors(Vector rows, Vector cols);

  // max |prod r - 1| over the two axes, computed in log space
  double unit_product_gap() const;
  static NoiseFactors ones(Index d_rows, Index d_cols);
};

// Minimizer of z^T Omega z over the fiber through Y, as row/column factors:
// z* = scale(Y, factors).
struct FiberPoint {
  Matrix z_star;
  NoiseFactors factors;
  double objective = 0.0;
  // objective after every accepted QP half-step, for monotonicity checks
  std::vector<double> objective_trace;
};

// Quadratic form matrix for one axis of the flip-flop: for the rows axis,
// the unique symmetric Omega~ with
//   r^T Omega~ r = vec[scale(Y, (r, fixed))]^T Omega vec[scale(Y, (r, fixed))],
// in closed form Psi_rows o (Y D^2 Y^T) + Diag(diag(Y D Psi_cols D Y^T)),
// D = diag(fixed). Transposed roles for the cols axis.
Matrix aggregate_quadratic(const Matrix& y, const FactorPrecision& fp,
                           const Vector& fixed, Axis axis);

struct QpConfig {
  double tol = 1e-10;  // projected-gradient inf-norm, relative
  int max_iters = 200;
};

// min r^T Omega~ r over r > 0 with prod_i r_i = 1. Parametrized as
// r = exp(u) on the hyperplane sum(u) = 0, solved by projected Newton with
// backtracking (steepest-descent fallback when the Newton model is not a
// descent direction). Coordinates whose Omega~ row is identically zero do
// not affect the objective and are pinned at 1.
Vector solve_product_constrained_qp(const Matrix& omega_tilde,
                                    const QpConfig& cfg = {},
                                    const Vector* warm_start = nullptr);

struct FlipFlopConfig {
  double tol = 1e-8;  // relative objective decrease
  int max_sweeps = 100;
  QpConfig qp;
};

// Flip-flop over the two constrained QPs, starting from the rows axis at the
// all-ones factors (or the provided warm start). Each half-step is
// warm-started from the current feasible point, so the objective sequence is
// non-increasing.
FiberPoint find_z_star(const DataMatrix& y, const FactorPrecision& fp,
                       const FlipFlopConfig& cfg = {},
                       const NoiseFactors* warm_start = nullptr);

}  // namespace medmagma

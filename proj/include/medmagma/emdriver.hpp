#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "medmagma/denoise.hpp"
#include "medmagma/gmgm.hpp"
#include "medmagma/latentpoint.hpp"
#include "medmagma/types.hpp"

namespace medmagma {

struct FitConfig {
  double em_tol = 1e-4;  // max relative factor change, after trace balancing
  int em_max_iters = 50;
  FlipFlopConfig flip_flop;
  GmgmConfig gmgm;
  bool correction_enabled = true;
  std::uint64_t seed = 0;  // recorded for manifests; the fit itself is deterministic
  bool trace_factors = false;

  void validate() const;
};

struct IterationRecord {
  double factor_change = 0.0;   // convergence metric at this iteration
  double zstar_objective = 0.0; // z*^T Omega z* at the E-step solution
  double gmgm_grad_norm = 0.0;  // gradient inf-norm at the M-step solution
  double wall_seconds = 0.0;
  std::optional<FactorPrecision> factors;  // only when cfg.trace_factors
};

struct FitReport {
  FactorPrecision fitted;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> records;
};

// Denoise once, then iterate: find z* on the fiber of f(X), build the
// Laplace pseudo-statistics, refit the Kronecker-sum MLE. The loop operates
// only on f(X), so any per-row/per-column rescaling of X leaves the whole
// factor sequence unchanged. Convergence is declared on the max relative
// entry change of the trace-balanced factors (the E-step is approximate, so
// no monotone-likelihood guarantee is claimed and none is checked). Each
// iteration's z* search warm-starts from the previous noise factors.
FitReport med_magma_fit(const DataMatrix& x, const FitConfig& cfg = {});

}  // namespace medmagma

#include "medmagma/emdriver.hpp"

#include <chrono>
#include <stdexcept>
#include <string>

#include "medmagma/errors.hpp"
#include "medmagma/laplace.hpp"

namespace medmagma {

void FitConfig::validate() const {
  if (em_tol <= 0 || flip_flop.tol <= 0 || flip_flop.qp.tol <= 0 ||
      gmgm.tol <= 0) {
    throw std::invalid_argument("FitConfig: tolerances must be positive");
  }
  if (em_max_iters < 1 || flip_flop.max_sweeps < 1 || gmgm.max_iters < 1) {
    throw std::invalid_argument("FitConfig: iteration budgets must be >= 1");
  }
}

namespace {

double relative_change(const Matrix& now, const Matrix& before) {
  return max_abs(now - before) / std::max(max_abs(now), 1e-300);
}

}  // namespace

FitReport med_magma_fit(const DataMatrix& x, const FitConfig& cfg) {
  cfg.validate();
  DataMatrix y = denoise(x);

  FactorPrecision psi =
      FactorPrecision::identity(y.d_rows(), y.d_cols());
  NoiseFactors factors = NoiseFactors::ones(y.d_rows(), y.d_cols());

  FitReport report{psi, 0, false, {}};
  for (int iter = 0; iter < cfg.em_max_iters; ++iter) {
    auto t0 = std::chrono::steady_clock::now();
    try {
      FiberPoint fpoint = find_z_star(y, psi, cfg.flip_flop, &factors);
      factors = fpoint.factors;
      SufficientStats stats =
          pseudo_stats(fpoint, psi, cfg.correction_enabled);
      GmgmResult fit = gmgm_fit(stats, cfg.gmgm);

      double change = std::max(
          relative_change(fit.factors.rows(), psi.rows()),
          relative_change(fit.factors.cols(), psi.cols()));
      psi = fit.factors;

      IterationRecord rec;
      rec.factor_change = change;
      rec.zstar_objective = fpoint.objective;
      rec.gmgm_grad_norm = fit.grad_inf_norm;
      rec.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      if (cfg.trace_factors) rec.factors = psi;
      report.records.push_back(std::move(rec));
      report.iterations = iter + 1;

      if (change < cfg.em_tol) {
        report.converged = true;
        break;
      }
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("EM iteration " + std::to_string(iter + 1) +
                                 ": " + e.what(),
                             e.last_rows, e.last_cols, e.grad_norm,
                             e.iterations);
    }
  }
  report.fitted = psi;
  return report;
}

}  // namespace medmagma

#include "medmagma/latentpoint.hpp"

#include <cmath>
#include <string>

#include "medmagma/errors.hpp"

namespace medmagma {

NoiseFactors::NoiseFactors(Vector rows, Vector cols)
    : r_rows(std::move(rows)), r_cols(std::move(cols)) {
  if (r_rows.size() == 0 || r_cols.size() == 0) {
    throw DimensionError("NoiseFactors: factor vectors must be non-empty");
  }
  if ((r_rows.array() <= 0.0).any() || (r_cols.array() <= 0.0).any()) {
    throw std::invalid_argument("NoiseFactors: factors must be strictly positive");
  }
}

double NoiseFactors::unit_product_gap() const {
  double lr = r_rows.array().log().sum();
  double lc = r_cols.array().log().sum();
  return std::max(std::abs(std::expm1(lr)), std::abs(std::expm1(lc)));
}

NoiseFactors NoiseFactors::ones(Index d_rows, Index d_cols) {
  return NoiseFactors(Vector::Ones(d_rows), Vector::Ones(d_cols));
}

Matrix aggregate_quadratic(const Matrix& y, const FactorPrecision& fp,
                           const Vector& fixed, Axis axis) {
  if (y.rows() != fp.d_rows() || y.cols() != fp.d_cols()) {
    throw DimensionError("aggregate_quadratic: Y/factor dimension mismatch");
  }
  const Index fixed_dim = axis == Axis::Rows ? fp.d_cols() : fp.d_rows();
  if (fixed.size() != fixed_dim) {
    throw DimensionError("aggregate_quadratic: fixed vector has length " +
                         std::to_string(fixed.size()) + ", expected " +
                         std::to_string(fixed_dim));
  }
  if ((fixed.array() <= 0.0).any()) {
    throw std::invalid_argument(
        "aggregate_quadratic: fixed factors must be strictly positive");
  }
  if (axis == Axis::Rows) {
    Matrix yd = y * fixed.asDiagonal();
    Matrix gram = yd * yd.transpose();
    Matrix cross = yd * fp.cols() * yd.transpose();
    return fp.rows().cwiseProduct(gram) +
           Matrix(cross.diagonal().asDiagonal());
  }
  Matrix yd = fixed.asDiagonal() * y;
  Matrix gram = yd.transpose() * yd;
  Matrix cross = yd.transpose() * fp.rows() * yd;
  return fp.cols().cwiseProduct(gram) + Matrix(cross.diagonal().asDiagonal());
}

namespace {

double qp_objective(const Matrix& omega_tilde, const Vector& r) {
  return r.dot(omega_tilde * r);
}

}  // namespace

Vector solve_product_constrained_qp(const Matrix& omega_tilde,
                                    const QpConfig& cfg,
                                    const Vector* warm_start) {
  if (omega_tilde.rows() != omega_tilde.cols()) {
    throw DimensionError("solve_product_constrained_qp: matrix must be square");
  }
  const Index d = omega_tilde.rows();

  // Flat coordinates (identically-zero rows of Omega~, e.g. from zero rows
  // of Y) are pinned at the neutral value 1.
  std::vector<Index> active;
  active.reserve(d);
  for (Index i = 0; i < d; ++i) {
    if (omega_tilde(i, i) > 0.0) active.push_back(i);
  }
  const Index na = static_cast<Index>(active.size());
  Vector u = Vector::Zero(d);
  if (warm_start != nullptr) {
    if (warm_start->size() != d) {
      throw DimensionError("solve_product_constrained_qp: warm start length");
    }
    if ((warm_start->array() <= 0.0).any()) {
      throw std::invalid_argument(
          "solve_product_constrained_qp: warm start must be positive");
    }
    double mean = 0.0;
    for (Index k = 0; k < na; ++k) mean += std::log((*warm_start)(active[k]));
    mean /= std::max<Index>(na, 1);
    for (Index k = 0; k < na; ++k) {
      u(active[k]) = std::log((*warm_start)(active[k])) - mean;
    }
  }
  if (na <= 1) {
    // The unit-product constraint forces a single active coordinate to 1.
    return Vector::Ones(d);
  }

  Vector r = u.array().exp();
  double obj = qp_objective(omega_tilde, r);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    Vector grad_full = 2.0 * r.cwiseProduct(omega_tilde * r);
    Vector g(na);
    for (Index k = 0; k < na; ++k) g(k) = grad_full(active[k]);
    double gmean = g.mean();
    Vector pg = g.array() - gmean;
    double gscale = std::max(g.cwiseAbs().maxCoeff(), 1e-300);
    if (pg.cwiseAbs().maxCoeff() <= cfg.tol * gscale) {
      return r;
    }

    // Newton step on the sum-zero hyperplane via the KKT system.
    Matrix h(na, na);
    for (Index k = 0; k < na; ++k) {
      for (Index l = 0; l < na; ++l) {
        h(k, l) = 2.0 * r(active[k]) * omega_tilde(active[k], active[l]) *
                  r(active[l]);
      }
      h(k, k) += grad_full(active[k]);
    }
    Matrix kkt = Matrix::Zero(na + 1, na + 1);
    kkt.topLeftCorner(na, na) = h;
    kkt.topRightCorner(na, 1).setOnes();
    kkt.bottomLeftCorner(1, na).setOnes();
    Vector rhs = Vector::Zero(na + 1);
    rhs.head(na) = -g;
    Vector sol = kkt.fullPivLu().solve(rhs);
    Vector p = sol.head(na);
    p.array() -= p.mean();  // re-project against round-off drift

    double slope = p.dot(pg);
    if (!(slope < 0.0) || !p.allFinite()) {
      p = -pg;
      slope = -pg.squaredNorm();
    }
    double pmax = p.cwiseAbs().maxCoeff();
    if (pmax > 30.0) {
      // keep exp(u) in a sane range per step
      double shrink = 30.0 / pmax;
      p *= shrink;
      slope *= shrink;
    }

    double t = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Vector cand_u = u;
      for (Index k = 0; k < na; ++k) cand_u(active[k]) += t * p(k);
      Vector cand_r = cand_u.array().exp();
      double cand_obj = qp_objective(omega_tilde, cand_r);
      if (cand_obj <= obj + 1e-4 * t * slope) {
        u = std::move(cand_u);
        r = std::move(cand_r);
        obj = cand_obj;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // Stalled at floating-point resolution; the iterate is feasible and at
      // least as good as the warm start.
      return r;
    }
  }
  Vector grad_full = 2.0 * r.cwiseProduct(omega_tilde * r);
  Vector g(na);
  for (Index k = 0; k < na; ++k) g(k) = grad_full(active[k]);
  Vector pg = g.array() - g.mean();
  if (pg.cwiseAbs().maxCoeff() <=
      cfg.tol * std::max(g.cwiseAbs().maxCoeff(), 1e-300)) {
    return r;
  }
  throw ConvergenceError(
      "solve_product_constrained_qp: no convergence after " +
          std::to_string(cfg.max_iters) + " iterations",
      r, Matrix(), pg.cwiseAbs().maxCoeff(), cfg.max_iters);
}

FiberPoint find_z_star(const DataMatrix& y, const FactorPrecision& fp,
                       const FlipFlopConfig& cfg,
                       const NoiseFactors* warm_start) {
  const Matrix& ym = y.entries();
  if (ym.rows() != fp.d_rows() || ym.cols() != fp.d_cols()) {
    throw DimensionError("find_z_star: Y/factor dimension mismatch");
  }
  Vector r_rows = Vector::Ones(fp.d_rows());
  Vector r_cols = Vector::Ones(fp.d_cols());
  if (warm_start != nullptr) {
    r_rows = warm_start->r_rows;
    r_cols = warm_start->r_cols;
  }

  std::vector<double> trace;
  double obj = qp_objective(aggregate_quadratic(ym, fp, r_cols, Axis::Rows),
                            r_rows);
  trace.push_back(obj);
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    Matrix agg_rows = aggregate_quadratic(ym, fp, r_cols, Axis::Rows);
    r_rows = solve_product_constrained_qp(agg_rows, cfg.qp, &r_rows);
    trace.push_back(qp_objective(agg_rows, r_rows));

    Matrix agg_cols = aggregate_quadratic(ym, fp, r_rows, Axis::Cols);
    r_cols = solve_product_constrained_qp(agg_cols, cfg.qp, &r_cols);
    double new_obj = qp_objective(agg_cols, r_cols);
    trace.push_back(new_obj);

    if (obj - new_obj <= cfg.tol * std::max(std::abs(obj), 1e-300)) {
      obj = new_obj;
      break;
    }
    obj = new_obj;
  }

  NoiseFactors factors(r_rows, r_cols);
  return FiberPoint{scale_rows_cols(ym, r_rows, r_cols), factors, obj,
                    std::move(trace)};
}

}  // namespace medmagma

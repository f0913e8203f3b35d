#include "oracles.hpp"

#include <cmath>
#include <functional>

#include "medmagma/random.hpp"

namespace medmagma::oracle {

Matrix dense_kron_sum(const Matrix& psi_rows, const Matrix& psi_cols) {
  const Index dr = psi_rows.rows();
  const Index dc = psi_cols.rows();
  Matrix big = Matrix::Zero(dr * dc, dr * dc);
  for (Index i = 0; i < dr; ++i) {
    for (Index j = 0; j < dc; ++j) {
      for (Index k = 0; k < dr; ++k) {
        for (Index l = 0; l < dc; ++l) {
          double v = 0.0;
          if (j == l) v += psi_rows(i, k);
          if (i == k) v += psi_cols(j, l);
          big(i + j * dr, k + l * dr) = v;
        }
      }
    }
  }
  return big;
}

Matrix dense_partial_trace(const Matrix& big, Index d_rows, Index d_cols,
                           Axis axis) {
  if (axis == Axis::Rows) {
    Matrix out = Matrix::Zero(d_rows, d_rows);
    for (Index i = 0; i < d_rows; ++i) {
      for (Index k = 0; k < d_rows; ++k) {
        for (Index j = 0; j < d_cols; ++j) {
          out(i, k) += big(i + j * d_rows, k + j * d_rows);
        }
      }
    }
    return out;
  }
  Matrix out = Matrix::Zero(d_cols, d_cols);
  for (Index j = 0; j < d_cols; ++j) {
    for (Index l = 0; l < d_cols; ++l) {
      for (Index i = 0; i < d_rows; ++i) {
        out(j, l) += big(i + j * d_rows, i + l * d_rows);
      }
    }
  }
  return out;
}

Matrix dense_projector(Index d_rows, Index d_cols) {
  Matrix p = Matrix::Zero(d_cols + d_rows - 1, d_rows * d_cols);
  for (Index j = 0; j < d_cols; ++j) {
    for (Index i = 0; i < d_rows; ++i) p(j, i + j * d_rows) = 1.0;
  }
  for (Index i = 0; i + 1 < d_rows; ++i) {
    for (Index j = 0; j < d_cols; ++j) p(d_cols + i, i + j * d_rows) = 1.0;
  }
  return p;
}

Matrix dense_gram_hessian(Axis axis, Index a, Index b, Index d_rows,
                          Index d_cols) {
  const Index n = d_rows * d_cols;
  Matrix h = Matrix::Zero(n, n);
  for (Index i = 0; i < d_rows; ++i) {
    for (Index j = 0; j < d_cols; ++j) {
      for (Index k = 0; k < d_rows; ++k) {
        for (Index l = 0; l < d_cols; ++l) {
          double v = 0.0;
          if (axis == Axis::Rows && j == l) {
            if (i == a && k == b) v += 1.0;
            if (i == b && k == a) v += 1.0;
          }
          if (axis == Axis::Cols && i == k) {
            if (j == a && l == b) v += 1.0;
            if (j == b && l == a) v += 1.0;
          }
          h(i + j * d_rows, k + l * d_rows) = v;
        }
      }
    }
  }
  return h;
}

Matrix dense_correction(const Matrix& psi_rows, const Matrix& psi_cols,
                        Axis axis) {
  const Index dr = psi_rows.rows();
  const Index dc = psi_cols.rows();
  Matrix omega = dense_kron_sum(psi_rows, psi_cols);
  Matrix p = dense_projector(dr, dc);
  Matrix projected = p * omega * p.transpose();
  Matrix inv = projected.inverse();
  const Index d = axis == Axis::Rows ? dr : dc;
  Matrix out(d, d);
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) {
      Matrix h = dense_gram_hessian(axis, a, b, dr, dc);
      out(a, b) = 0.5 * (inv * p * h * p.transpose()).trace();
    }
  }
  return out;
}

double dense_fiber_quadratic(const Matrix& y, const Matrix& psi_rows,
                             const Matrix& psi_cols, const Vector& r_rows,
                             const Vector& r_cols) {
  const Index dr = y.rows();
  const Index dc = y.cols();
  Vector z(dr * dc);
  for (Index j = 0; j < dc; ++j) {
    for (Index i = 0; i < dr; ++i) {
      z(i + j * dr) = r_rows(i) * y(i, j) * r_cols(j);
    }
  }
  Matrix omega = dense_kron_sum(psi_rows, psi_cols);
  return z.dot(omega * z);
}

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  auto eng = make_engine(seed);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = standard_normal(eng);
  }
  return m;
}

Vector random_positive_vector(Index n, std::uint64_t seed) {
  auto eng = make_engine(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = std::exp(standard_normal(eng));
  return v;
}

std::pair<Matrix, Matrix> random_pd_pair(Index d_rows, Index d_cols,
                                         std::uint64_t seed) {
  Matrix g_r = random_matrix(d_rows, d_rows + 2, derive_seed(seed, 1));
  Matrix g_c = random_matrix(d_cols, d_cols + 2, derive_seed(seed, 2));
  Matrix psi_r = g_r * g_r.transpose() / static_cast<double>(d_rows + 2) +
                 0.3 * Matrix::Identity(d_rows, d_rows);
  Matrix psi_c = g_c * g_c.transpose() / static_cast<double>(d_cols + 2) +
                 0.3 * Matrix::Identity(d_cols, d_cols);
  return {psi_r, psi_c};
}

double masked_logmean_residual(const Matrix& m) {
  double worst = 0.0;
  for (Index i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    Index n = 0;
    for (Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) {
        sum += std::log(std::abs(m(i, j)));
        ++n;
      }
    }
    if (n > 0) worst = std::max(worst, std::abs(sum / n));
  }
  for (Index j = 0; j < m.cols(); ++j) {
    double sum = 0.0;
    Index n = 0;
    for (Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) != 0.0) {
        sum += std::log(std::abs(m(i, j)));
        ++n;
      }
    }
    if (n > 0) worst = std::max(worst, std::abs(sum / n));
  }
  return worst;
}

double modularity(const Matrix& adjacency, const std::vector<int>& partition,
                  double resolution) {
  const Index n = adjacency.rows();
  double two_m = adjacency.sum();
  if (two_m == 0.0) return 0.0;
  Vector k = adjacency.rowwise().sum();
  double q = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (partition[i] == partition[j]) {
        q += adjacency(i, j) - resolution * k(i) * k(j) / two_m;
      }
    }
  }
  return q / two_m;
}

namespace {

bool blocks_connected(const Matrix& adjacency, const std::vector<int>& part,
                      int num_blocks) {
  const Index n = adjacency.rows();
  for (int b = 0; b < num_blocks; ++b) {
    std::vector<Index> members;
    for (Index i = 0; i < n; ++i) {
      if (part[i] == b) members.push_back(i);
    }
    if (members.size() <= 1) continue;
    std::vector<bool> seen(members.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      std::size_t at = stack.back();
      stack.pop_back();
      for (std::size_t t = 0; t < members.size(); ++t) {
        if (!seen[t] && adjacency(members[at], members[t]) != 0.0) {
          seen[t] = true;
          ++reached;
          stack.push_back(t);
        }
      }
    }
    if (reached != members.size()) return false;
  }
  return true;
}

}  // namespace

double best_partition_modularity(const Matrix& adjacency, double resolution) {
  const Index n = adjacency.rows();
  std::vector<int> part(n, 0);
  double best = -1e30;
  // restricted-growth enumeration of all set partitions
  std::function<void(Index, int)> recurse = [&](Index at, int used) {
    if (at == n) {
      if (blocks_connected(adjacency, part, used)) {
        best = std::max(best, modularity(adjacency, part, resolution));
      }
      return;
    }
    for (int b = 0; b <= used && b < static_cast<int>(n); ++b) {
      part[at] = b;
      recurse(at + 1, std::max(used, b + 1));
    }
  };
  recurse(0, 0);
  return best;
}

}  // namespace medmagma::oracle

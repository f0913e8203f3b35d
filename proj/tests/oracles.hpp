#pragma once

// Independent brute-force reference implementations used to freeze expected
// values. Everything here works on explicitly assembled dense matrices over
// (row, column) pair indices (column-major: (i, j) -> i + j * d_rows) and
// deliberately shares no code with the library's structured paths.

#include <cstdint>
#include <vector>

#include "medmagma/types.hpp"

namespace medmagma::oracle {

// Psi_cols (x) I + I (x) Psi_rows, assembled entry by entry.
Matrix dense_kron_sum(const Matrix& psi_rows, const Matrix& psi_cols);

// Partial trace over the other axis of a dense (d_rows*d_cols)^2 matrix.
Matrix dense_partial_trace(const Matrix& big, Index d_rows, Index d_cols,
                           Axis axis);

// [I (x) 1^T ; 1^T (x) I] with the last row dropped: (d_cols + d_rows - 1)
// rows of indicators.
Matrix dense_projector(Index d_rows, Index d_cols);

// Dense Hessian of one Gram entry, (d_rows*d_cols)^2.
Matrix dense_gram_hessian(Axis axis, Index a, Index b, Index d_rows,
                          Index d_cols);

// (1/2) tr[(P Omega P^T)^{-1} P H_ab P^T] for every (a, b), via the dense
// matrices above.
Matrix dense_correction(const Matrix& psi_rows, const Matrix& psi_cols,
                        Axis axis);

// z^T Omega z at z = vec[diag(r_rows) Y diag(r_cols)] with dense Omega.
double dense_fiber_quadratic(const Matrix& y, const Matrix& psi_rows,
                             const Matrix& psi_cols, const Vector& r_rows,
                             const Vector& r_cols);

// Random symmetric matrix pair whose Kronecker sum is comfortably positive
// definite (each factor is a shifted random Gram), seeded.
std::pair<Matrix, Matrix> random_pd_pair(Index d_rows, Index d_cols,
                                         std::uint64_t seed);

// Random matrix with iid standard normal entries, seeded.
Matrix random_matrix(Index rows, Index cols, std::uint64_t seed);

// Strictly positive random vector (exp of a normal), seeded.
Vector random_positive_vector(Index n, std::uint64_t seed);

// Direct log-space masked means of |m| restricted to its nonzero entries;
// returns the worst absolute row/column mean.
double masked_logmean_residual(const Matrix& m);

// Resolution-parametrized modularity of a partition, from the textbook
// pairwise formula.
double modularity(const Matrix& adjacency, const std::vector<int>& partition,
                  double resolution);

// Exhaustive search over all set partitions of up to ~13 nodes whose blocks
// are connected; returns the best modularity found.
double best_partition_modularity(const Matrix& adjacency, double resolution);

}  // namespace medmagma::oracle

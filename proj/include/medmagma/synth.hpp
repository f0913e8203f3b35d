#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "medmagma/kroncore.hpp"
#include "medmagma/latentpoint.hpp"
#include "medmagma/types.hpp"

namespace medmagma {

struct SynthConfig {
  Index d_rows = 100;
  Index d_cols = 150;
  int ba_attachment = 2;   // edges per new node
  double alpha = 0.0;      // noise strength in [0, 1]
  int replicates = 20;
  std::uint64_t seed = 0;
  double pd_margin = 0.1;

  void validate() const;
};

struct TruthGraph {
  Matrix adjacency;
  Matrix psi;
};

struct SynthBundle {
  TruthGraph truth_rows;
  TruthGraph truth_cols;
  std::vector<int> labels_rows;
  std::vector<int> labels_cols;
  Matrix latent;
  Matrix observed;
  NoiseFactors noise;
};

// Preferential-attachment graph: an initial clique of `m` nodes, then each
// new node attaches to m distinct existing nodes with probability
// proportional to degree. Connected and simple; m(n-m) + C(m,2) edges.
Matrix barabasi_albert(Index n, int m, std::uint64_t seed);

// Psi = I + A / (lambda_max(A) + pd_margin): positive definite with the
// off-diagonal sparsity pattern of A preserved exactly.
Matrix graph_to_precision(const Matrix& adjacency, double pd_margin);

// Per-row/per-column factors drawn as chi-squared(df=1) raised to the power
// alpha, applied multiplicatively. The raw draws are returned without
// unit-product normalization; the model quotient absorbs the global scale.
// The chi-squared draws themselves do not depend on alpha, so runs that
// share a seed are paired across noise strengths.
std::pair<Matrix, NoiseFactors> corrupt(const Matrix& latent, double alpha,
                                        std::uint64_t seed);

// Ground-truth cluster labels: community detection on the truth graph at the
// given resolution.
std::vector<int> make_truth_labels(const Matrix& adjacency,
                                   double resolution, std::uint64_t seed);

// Full protocol: independent row/column truth graphs per replicate, latent
// sample from the Kronecker-sum precision, multiplicative corruption, and
// truth labels at resolution 1. All randomness is derived from cfg.seed.
std::vector<SynthBundle> generate_experiment(const SynthConfig& cfg);

// Stream tags for seed derivation (shared with the benchmark driver so that
// runs pair across alpha values).
namespace seedtag {
inline constexpr std::uint64_t kReplicate = 1;
inline constexpr std::uint64_t kGraphRows = 2;
inline constexpr std::uint64_t kGraphCols = 3;
inline constexpr std::uint64_t kLatent = 4;
inline constexpr std::uint64_t kNoiseRows = 5;
inline constexpr std::uint64_t kNoiseCols = 6;
inline constexpr std::uint64_t kLabels = 7;
}  // namespace seedtag

}  // namespace medmagma

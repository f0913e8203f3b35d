#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "medmagma/types.hpp"

namespace medmagma {

// Keep edge (i,j) iff j is among the k largest scores of row i or vice versa
// (union symmetrization). Ties broken toward the lower vertex index; zero
// scores never become edges. Scores must be symmetric and nonnegative with
// irrelevant diagonal.
Matrix threshold_topk(const Matrix& scores, int k);

struct PrCurve {
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  double aupr = 0.0;
};

// Ranks all off-diagonal vertex pairs by score descending and integrates
// precision over recall step-wise. Equal scores are consumed as one block,
// which makes the result invariant under strictly increasing transforms and
// gives AUPR = prevalence when every score ties.
PrCurve pr_curve_aupr(const Matrix& scores, const Matrix& truth_adjacency);

// Newman's categorical assortativity, (tr e - ||e^2||) / (1 - ||e^2||) on
// the label-pair mixing matrix. Throws on an edgeless graph; returns 1 for
// the degenerate single-label graph.
double assortativity(const Matrix& adjacency, const std::vector<int>& labels);

// Greedy modularity optimization (local moves + aggregation) with a
// resolution parameter; node sweep order is shuffled from the seed and every
// accepted move strictly increases the quality, so the result is
// deterministic given the seed.
std::vector<int> community_detect(const Matrix& adjacency, double resolution,
                                  std::uint64_t seed);

// Adjusted mutual information under the permutation model, normalized by the
// arithmetic mean of the partition entropies.
double ami(const std::vector<int>& partition_a,
           const std::vector<int>& partition_b);

struct SweepEntry {
  int k = 0;
  double resolution = 0.0;
  double ami = 0.0;
  std::vector<int> partition;
};

struct SweepResult {
  double best_ami = 0.0;
  int best_k = 0;
  double best_resolution = 0.0;
  std::vector<SweepEntry> table;
};

// Evaluates AMI against `labels` for every (k, resolution) pair; the first
// argmax in sweep order wins.
SweepResult best_ami_sweep(const Matrix& scores, const std::vector<int>& labels,
                           const std::vector<int>& k_range,
                           const std::vector<double>& resolution_range,
                           std::uint64_t seed);

// Thresholded-graph evaluation bundle as serialized by the CLI.
struct GraphEval {
  Matrix scores;
  Matrix adjacency;
  std::vector<int> labels;
  std::vector<SweepEntry> clusterings;
  std::vector<std::pair<std::string, double>> metrics;
};

// Symmetric absolute off-diagonal part of a precision factor, the edge score
// matrix used throughout the evaluation harness.
Matrix edge_scores(const Matrix& psi);

}  // namespace medmagma

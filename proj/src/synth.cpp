#include "medmagma/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "medmagma/errors.hpp"
#include "medmagma/graphmetrics.hpp"
#include "medmagma/random.hpp"

namespace medmagma {

void SynthConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("SynthConfig: alpha must lie in [0, 1]");
  }
  if (ba_attachment < 1) {
    throw std::invalid_argument("SynthConfig: attachment m must be >= 1");
  }
  if (d_rows < 2 || d_cols < 2) {
    throw std::invalid_argument("SynthConfig: dimensions must be >= 2");
  }
  if (d_rows <= ba_attachment || d_cols <= ba_attachment) {
    throw std::invalid_argument("SynthConfig: dimensions must exceed m");
  }
  if (replicates < 1) {
    throw std::invalid_argument("SynthConfig: replicates must be >= 1");
  }
  if (pd_margin <= 0.0) {
    throw std::invalid_argument("SynthConfig: pd_margin must be positive");
  }
}

namespace {

Index bounded_uniform(std::mt19937_64& eng, Index bound) {
  const std::uint64_t b = static_cast<std::uint64_t>(bound);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return static_cast<Index>(x % b);
}

}  // namespace

Matrix barabasi_albert(Index n, int m, std::uint64_t seed) {
  if (m < 1 || n <= m) {
    throw std::invalid_argument("barabasi_albert: need n > m >= 1");
  }
  auto eng = make_engine(seed);
  Matrix adj = Matrix::Zero(n, n);
  std::vector<Index> endpoints;  // each edge contributes both endpoints
  endpoints.reserve(2 * static_cast<std::size_t>(m) * n);

  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      adj(i, j) = adj(j, i) = 1.0;
      endpoints.push_back(i);
      endpoints.push_back(j);
    }
  }
  for (Index v = m; v < n; ++v) {
    std::vector<Index> targets;
    while (static_cast<int>(targets.size()) < m) {
      Index t = endpoints.empty()
                    ? bounded_uniform(eng, v)
                    : endpoints[bounded_uniform(
                          eng, static_cast<Index>(endpoints.size()))];
      if (adj(v, t) == 0.0 && t != v) {
        adj(v, t) = adj(t, v) = 1.0;
        targets.push_back(t);
      }
    }
    for (Index t : targets) {
      endpoints.push_back(v);
      endpoints.push_back(t);
    }
  }
  return adj;
}

Matrix graph_to_precision(const Matrix& adjacency, double pd_margin) {
  if (adjacency.rows() != adjacency.cols()) {
    throw DimensionError("graph_to_precision: adjacency must be square");
  }
  if (pd_margin <= 0.0) {
    throw std::invalid_argument("graph_to_precision: pd_margin must be positive");
  }
  if (adjacency.diagonal().cwiseAbs().sum() != 0.0) {
    throw std::invalid_argument("graph_to_precision: diagonal must be zero");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(adjacency,
                                           Eigen::EigenvaluesOnly);
  double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  return Matrix::Identity(adjacency.rows(), adjacency.cols()) +
         adjacency / (lmax + pd_margin);
}

std::pair<Matrix, NoiseFactors> corrupt(const Matrix& latent, double alpha,
                                        std::uint64_t seed) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("corrupt: alpha must lie in [0, 1]");
  }
  auto draw_factors = [alpha](Index d, std::uint64_t s) {
    auto eng = make_engine(s);
    Vector r(d);
    for (Index i = 0; i < d; ++i) {
      double x = 0.0;
      do {
        x = std::pow(chi_squared_df1(eng), alpha);
      } while (!(x > 1e-300) || !std::isfinite(x));
      r(i) = x;
    }
    return r;
  };
  NoiseFactors noise(
      draw_factors(latent.rows(), derive_seed(seed, seedtag::kNoiseRows)),
      draw_factors(latent.cols(), derive_seed(seed, seedtag::kNoiseCols)));
  return {scale_rows_cols(latent, noise.r_rows, noise.r_cols), noise};
}

std::vector<int> make_truth_labels(const Matrix& adjacency, double resolution,
                                   std::uint64_t seed) {
  return community_detect(adjacency, resolution, seed);
}

std::vector<SynthBundle> generate_experiment(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<SynthBundle> bundles;
  bundles.reserve(cfg.replicates);
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    const std::uint64_t rep_seed =
        derive_seed(cfg.seed, seedtag::kReplicate, static_cast<std::uint64_t>(rep));

    TruthGraph rows;
    rows.adjacency = barabasi_albert(cfg.d_rows, cfg.ba_attachment,
                                     derive_seed(rep_seed, seedtag::kGraphRows));
    rows.psi = graph_to_precision(rows.adjacency, cfg.pd_margin);
    TruthGraph cols;
    cols.adjacency = barabasi_albert(cfg.d_cols, cfg.ba_attachment,
                                     derive_seed(rep_seed, seedtag::kGraphCols));
    cols.psi = graph_to_precision(cols.adjacency, cfg.pd_margin);

    FactorPrecision truth(rows.psi, cols.psi);
    Matrix latent =
        sample_latent(EigenFactor(truth), derive_seed(rep_seed, seedtag::kLatent));
    auto [observed, noise] = corrupt(latent, cfg.alpha, rep_seed);
    std::vector<int> labels_rows = make_truth_labels(
        rows.adjacency, 1.0, derive_seed(rep_seed, seedtag::kLabels, 0));
    std::vector<int> labels_cols = make_truth_labels(
        cols.adjacency, 1.0, derive_seed(rep_seed, seedtag::kLabels, 1));

    bundles.push_back(SynthBundle{std::move(rows), std::move(cols),
                                  std::move(labels_rows), std::move(labels_cols),
                                  std::move(latent), std::move(observed),
                                  std::move(noise)});
  }
  return bundles;
}

}  // namespace medmagma

#include "medmagma/graphmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "medmagma/errors.hpp"
#include "medmagma/random.hpp"

namespace medmagma {

namespace {

void check_square_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(who) + ": matrix must be square");
  }
  if (max_abs(m - m.transpose()) > 1e-9 * (1.0 + max_abs(m))) {
    throw std::invalid_argument(std::string(who) + ": matrix must be symmetric");
  }
}

// Uniform integer in [0, bound) by rejection; std::uniform_int_distribution
// is implementation-defined, which would break cross-platform determinism.
Index bounded_uniform(std::mt19937_64& eng, Index bound) {
  const std::uint64_t b = static_cast<std::uint64_t>(bound);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return static_cast<Index>(x % b);
}

std::vector<int> compact_labels(const std::vector<int>& labels) {
  std::map<int, int> remap;
  for (int l : labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& kv : remap) kv.second = next++;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = remap[labels[i]];
  return out;
}

}  // namespace

Matrix edge_scores(const Matrix& psi) {
  check_square_symmetric(psi, "edge_scores");
  Matrix s = symmetrized(psi).cwiseAbs();
  s.diagonal().setZero();
  return s;
}

Matrix threshold_topk(const Matrix& scores, int k) {
  check_square_symmetric(scores, "threshold_topk");
  if (k < 1) throw std::invalid_argument("threshold_topk: k must be >= 1");
  const Index d = scores.rows();
  Matrix adj = Matrix::Zero(d, d);
  std::vector<Index> order(d);
  for (Index i = 0; i < d; ++i) {
    order.clear();
    for (Index j = 0; j < d; ++j) {
      if (j != i && scores(i, j) > 0.0) order.push_back(j);
    }
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      if (scores(i, a) != scores(i, b)) return scores(i, a) > scores(i, b);
      return a < b;
    });
    const Index take = std::min<Index>(k, static_cast<Index>(order.size()));
    for (Index t = 0; t < take; ++t) {
      adj(i, order[t]) = 1.0;
      adj(order[t], i) = 1.0;
    }
  }
  return adj;
}

PrCurve pr_curve_aupr(const Matrix& scores, const Matrix& truth_adjacency) {
  check_square_symmetric(scores, "pr_curve_aupr");
  check_square_symmetric(truth_adjacency, "pr_curve_aupr");
  if (scores.rows() != truth_adjacency.rows()) {
    throw DimensionError("pr_curve_aupr: scores/truth dimension mismatch");
  }
  const Index d = scores.rows();
  struct Pair {
    double score;
    bool positive;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(d) * (d - 1) / 2);
  Index positives = 0;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      bool pos = truth_adjacency(i, j) != 0.0;
      positives += pos;
      pairs.push_back({scores(i, j), pos});
    }
  }
  const Index negatives = static_cast<Index>(pairs.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw std::invalid_argument(
        "pr_curve_aupr: truth must contain at least one edge and one "
        "non-edge");
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& a, const Pair& b) { return a.score > b.score; });

  PrCurve out;
  double tp = 0, fp = 0, prev_recall = 0;
  std::size_t i = 0;
  while (i < pairs.size()) {
    std::size_t j = i;
    while (j < pairs.size() && pairs[j].score == pairs[i].score) {
      tp += pairs[j].positive;
      fp += !pairs[j].positive;
      ++j;
    }
    double recall = tp / static_cast<double>(positives);
    double precision = tp / (tp + fp);
    out.aupr += (recall - prev_recall) * precision;
    out.points.emplace_back(recall, precision);
    prev_recall = recall;
    i = j;
  }
  return out;
}

double assortativity(const Matrix& adjacency, const std::vector<int>& labels) {
  check_square_symmetric(adjacency, "assortativity");
  if (static_cast<Index>(labels.size()) != adjacency.rows()) {
    throw DimensionError("assortativity: label vector length mismatch");
  }
  std::vector<int> lab = compact_labels(labels);
  int num_labels = lab.empty() ? 0 : *std::max_element(lab.begin(), lab.end()) + 1;
  Matrix mixing = Matrix::Zero(num_labels, num_labels);
  double total = 0.0;
  for (Index i = 0; i < adjacency.rows(); ++i) {
    for (Index j = i + 1; j < adjacency.cols(); ++j) {
      double w = adjacency(i, j);
      if (w != 0.0) {
        mixing(lab[i], lab[j]) += w;
        mixing(lab[j], lab[i]) += w;
        total += 2.0 * w;
      }
    }
  }
  if (total == 0.0) {
    throw std::invalid_argument("assortativity: graph has no edges");
  }
  mixing /= total;
  double tr = mixing.trace();
  double sq = (mixing * mixing).sum();
  if (std::abs(1.0 - sq) < 1e-14) return 1.0;  // single-label graph
  return (tr - sq) / (1.0 - sq);
}

namespace {

// Weighted graph with self-loops for the aggregation levels. degree counts
// self-loops twice; m is the total undirected weight.
struct LouvainGraph {
  std::vector<std::vector<std::pair<Index, double>>> nbrs;
  Vector self_loop;
  Vector degree;
  double m = 0.0;

  Index size() const { return static_cast<Index>(nbrs.size()); }
};

LouvainGraph from_adjacency(const Matrix& adj) {
  LouvainGraph g;
  const Index n = adj.rows();
  g.nbrs.resize(n);
  g.self_loop = Vector::Zero(n);
  g.degree = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double w = adj(i, j);
      if (w != 0.0) {
        g.nbrs[i].emplace_back(j, w);
        g.nbrs[j].emplace_back(i, w);
        g.degree(i) += w;
        g.degree(j) += w;
        g.m += w;
      }
    }
  }
  return g;
}

// One level of greedy local moves; returns the node->community map and
// whether anything moved.
bool local_moves(const LouvainGraph& g, double resolution,
                 std::mt19937_64& eng, std::vector<Index>& community) {
  const Index n = g.size();
  community.resize(n);
  std::iota(community.begin(), community.end(), Index{0});
  if (g.m <= 0.0) return false;

  Vector tot = g.degree;  // community total degree
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    std::swap(order[i], order[bounded_uniform(eng, i + 1)]);
  }

  const double m = g.m;
  bool any_move = false;
  bool improved = true;
  std::vector<double> weight_to(n, 0.0);
  while (improved) {
    improved = false;
    for (Index idx = 0; idx < n; ++idx) {
      const Index node = order[idx];
      const Index old_c = community[node];
      std::vector<Index> touched;
      for (const auto& [nbr, w] : g.nbrs[node]) {
        Index c = community[nbr];
        if (weight_to[c] == 0.0) touched.push_back(c);
        weight_to[c] += w;
      }
      tot(old_c) -= g.degree(node);

      // staying put is the baseline
      double base_gain = weight_to[old_c] / m -
                         resolution * tot(old_c) * g.degree(node) / (2.0 * m * m);
      Index best_c = old_c;
      double best_gain = base_gain;
      for (Index c : touched) {
        if (c == old_c) continue;
        double gain = weight_to[c] / m -
                      resolution * tot(c) * g.degree(node) / (2.0 * m * m);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_c = c;
        } else if (std::abs(gain - best_gain) <= 1e-12 && c < best_c) {
          best_c = c;
        }
      }
      tot(best_c) += g.degree(node);
      community[node] = best_c;
      if (best_c != old_c) {
        improved = true;
        any_move = true;
      }
      for (const auto& [nbr, w] : g.nbrs[node]) weight_to[community[nbr]] = 0.0;
      weight_to[old_c] = 0.0;
      weight_to[best_c] = 0.0;
    }
  }
  return any_move;
}

LouvainGraph aggregate(const LouvainGraph& g, const std::vector<Index>& community,
                       Index num_comms) {
  LouvainGraph out;
  out.nbrs.resize(num_comms);
  out.self_loop = Vector::Zero(num_comms);
  out.degree = Vector::Zero(num_comms);
  out.m = g.m;
  std::map<std::pair<Index, Index>, double> edges;
  for (Index i = 0; i < g.size(); ++i) {
    out.self_loop(community[i]) += g.self_loop(i);
    for (const auto& [j, w] : g.nbrs[i]) {
      if (j < i) continue;
      Index a = community[i], b = community[j];
      if (a == b) {
        out.self_loop(a) += w;
      } else {
        edges[{std::min(a, b), std::max(a, b)}] += w;
      }
    }
  }
  for (Index c = 0; c < num_comms; ++c) out.degree(c) = 2.0 * out.self_loop(c);
  for (const auto& [key, w] : edges) {
    out.nbrs[key.first].emplace_back(key.second, w);
    out.nbrs[key.second].emplace_back(key.first, w);
    out.degree(key.first) += w;
    out.degree(key.second) += w;
  }
  return out;
}

}  // namespace

std::vector<int> community_detect(const Matrix& adjacency, double resolution,
                                  std::uint64_t seed) {
  check_square_symmetric(adjacency, "community_detect");
  if (resolution <= 0.0) {
    throw std::invalid_argument("community_detect: resolution must be positive");
  }
  const Index n = adjacency.rows();
  std::vector<Index> assign(n);
  std::iota(assign.begin(), assign.end(), Index{0});

  LouvainGraph g = from_adjacency(adjacency);
  auto eng = make_engine(seed);
  while (true) {
    std::vector<Index> community;
    bool moved = local_moves(g, resolution, eng, community);

    // renumber communities consecutively, ordered by first member
    std::vector<Index> renumber(community.size(),
                                static_cast<Index>(community.size()));
    Index next = 0;
    for (Index i = 0; i < static_cast<Index>(community.size()); ++i) {
      if (renumber[community[i]] == static_cast<Index>(community.size())) {
        renumber[community[i]] = next++;
      }
    }
    for (auto& c : community) c = renumber[c];
    for (auto& a : assign) a = community[a];
    if (!moved || next == static_cast<Index>(community.size())) break;
    g = aggregate(g, community, next);
  }
  std::vector<int> out(assign.size());
  for (std::size_t i = 0; i < assign.size(); ++i) {
    out[i] = static_cast<int>(assign[i]);
  }
  return compact_labels(out);
}

double ami(const std::vector<int>& partition_a,
           const std::vector<int>& partition_b) {
  if (partition_a.size() != partition_b.size()) {
    throw DimensionError("ami: partitions must cover the same element set");
  }
  if (partition_a.empty()) {
    throw std::invalid_argument("ami: empty partitions");
  }
  const double n = static_cast<double>(partition_a.size());
  std::vector<int> a = compact_labels(partition_a);
  std::vector<int> b = compact_labels(partition_b);
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  if (ka == 1 && kb == 1) return 1.0;

  std::vector<double> ca(ka, 0.0), cb(kb, 0.0);
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }

  double mi = 0.0;
  for (const auto& [key, nij] : joint) {
    mi += (nij / n) * std::log(n * nij / (ca[key.first] * cb[key.second]));
  }
  auto entropy = [&](const std::vector<double>& counts) {
    double h = 0.0;
    for (double c : counts)
      if (c > 0) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca);
  const double hb = entropy(cb);

  double emi = 0.0;
  const double lg_n = std::lgamma(n + 1.0);
  for (int i = 0; i < ka; ++i) {
    for (int j = 0; j < kb; ++j) {
      const double ai = ca[i], bj = cb[j];
      const double lo = std::max(1.0, ai + bj - n);
      const double hi = std::min(ai, bj);
      for (double x = lo; x <= hi; x += 1.0) {
        double log_term =
            std::lgamma(ai + 1.0) + std::lgamma(bj + 1.0) +
            std::lgamma(n - ai + 1.0) + std::lgamma(n - bj + 1.0) - lg_n -
            std::lgamma(x + 1.0) - std::lgamma(ai - x + 1.0) -
            std::lgamma(bj - x + 1.0) - std::lgamma(n - ai - bj + x + 1.0);
        emi += (x / n) * std::log(n * x / (ai * bj)) * std::exp(log_term);
      }
    }
  }

  double denom = 0.5 * (ha + hb) - emi;
  double numer = mi - emi;
  if (std::abs(denom) < 1e-15) return 0.0;
  return numer / denom;
}

SweepResult best_ami_sweep(const Matrix& scores, const std::vector<int>& labels,
                           const std::vector<int>& k_range,
                           const std::vector<double>& resolution_range,
                           std::uint64_t seed) {
  if (k_range.empty() || resolution_range.empty()) {
    throw std::invalid_argument("best_ami_sweep: ranges must be non-empty");
  }
  SweepResult out;
  out.best_ami = -std::numeric_limits<double>::infinity();
  for (int k : k_range) {
    Matrix adj = threshold_topk(scores, k);
    for (double res : resolution_range) {
      SweepEntry entry;
      entry.k = k;
      entry.resolution = res;
      entry.partition = community_detect(adj, res, seed);
      entry.ami = ami(entry.partition, labels);
      if (entry.ami > out.best_ami) {
        out.best_ami = entry.ami;
        out.best_k = k;
        out.best_resolution = res;
      }
      out.table.push_back(std::move(entry));
    }
  }
  return out;
}

}  // namespace medmagma

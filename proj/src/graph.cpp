#include "latnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "latnet/errors.hpp"

namespace latnet {

Graph Graph::from_edge_list(std::span<const std::pair<int, int>> edges, int n) {
  if (n < 0) throw input_error("graph: negative node count");
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      throw input_error("graph: edge endpoint out of range: (" + std::to_string(a) + ", " +
                        std::to_string(b) + ") with n = " + std::to_string(n));
    }
    if (a == b) throw input_error("graph: self loop at node " + std::to_string(a));
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  Graph g;
  g.n_ = n;
  g.offsets_.assign(n + 1, 0);
  std::int64_t total = 0;
  for (int i = 0; i < n; ++i) {
    auto& nb = adj[i];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    total += static_cast<std::int64_t>(nb.size());
    g.offsets_[i + 1] = total;
  }
  g.adj_.reserve(total);
  for (int i = 0; i < n; ++i) g.adj_.insert(g.adj_.end(), adj[i].begin(), adj[i].end());
  return g;
}

void Graph::validate() const {
  for (int i = 0; i < n_; ++i) {
    auto nb = neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const int j = nb[k];
      if (j < 0 || j >= n_) throw input_error("graph: neighbor index out of range");
      if (j == i) throw input_error("graph: self loop at node " + std::to_string(i));
      if (k > 0 && nb[k - 1] >= j) throw input_error("graph: neighbor list not strictly sorted");
      auto back = neighbors(j);
      if (!std::binary_search(back.begin(), back.end(), i)) {
        throw input_error("graph: asymmetric adjacency between " + std::to_string(i) + " and " +
                          std::to_string(j));
      }
    }
  }
}

int SbmConfig::node_count() const {
  int n = 0;
  for (int b : block_sizes) n += b;
  return n;
}

void SbmConfig::validate() const {
  const std::size_t k = block_sizes.size();
  if (k == 0) throw input_error("sbm: no blocks");
  for (int b : block_sizes) {
    if (b <= 0) throw input_error("sbm: block sizes must be positive");
  }
  if (connect_prob.rows() != k || connect_prob.cols() != k) {
    throw input_error("sbm: connectivity matrix must be K x K");
  }
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const double p = connect_prob(r, c);
      if (!(p >= 0.0 && p <= 1.0)) throw input_error("sbm: connectivity entries must lie in [0, 1]");
      if (connect_prob(r, c) != connect_prob(c, r)) {
        throw input_error("sbm: connectivity matrix must be symmetric");
      }
    }
  }
}

Graph sbm_generate(const SbmConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n = cfg.node_count();
  std::vector<int> block(n);
  {
    int at = 0;
    for (std::size_t b = 0; b < cfg.block_sizes.size(); ++b) {
      for (int k = 0; k < cfg.block_sizes[b]; ++k) block[at++] = static_cast<int>(b);
    }
  }
  // Pair order (i, j) with i < j is part of the reproducibility contract.
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.bernoulli(cfg.connect_prob(block[i], block[j]))) edges.emplace_back(i, j);
    }
  }
  return Graph::from_edge_list(edges, n);
}

std::vector<double> neighbor_sum(const Graph& g, std::span<const double> v) {
  std::vector<double> out(g.node_count(), 0.0);
  for (int i = 0; i < g.node_count(); ++i) {
    double acc = 0.0;
    for (int j : g.neighbors(i)) acc += v[j];
    out[i] = acc;
  }
  return out;
}

std::vector<double> neighbor_feature_sum(const Graph& g, const Matrix& X,
                                         std::span<const double> beta) {
  const std::size_t n = X.rows();
  std::vector<double> xb(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = X.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * beta[j];
    xb[i] = acc;
  }
  return neighbor_sum(g, xb);
}

}  // namespace latnet

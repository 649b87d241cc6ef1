#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "latnet/matrix.hpp"
#include "latnet/rng.hpp"

namespace latnet {

// Undirected simple graph over nodes 0..n-1. Neighbor lists are sorted,
// deduplicated and symmetric; self loops are rejected at construction.
// Immutable once built.
class Graph {
 public:
  Graph() : n_(0), offsets_{0} {}

  // Collapses duplicate edges. Throws input_error on out-of-range endpoints
  // or self loops.
  static Graph from_edge_list(std::span<const std::pair<int, int>> edges, int n);

  int node_count() const { return n_; }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(adj_.size()) / 2; }

  std::span<const int> neighbors(int i) const {
    return {adj_.data() + offsets_[i], adj_.data() + offsets_[i + 1]};
  }
  int degree(int i) const { return static_cast<int>(offsets_[i + 1] - offsets_[i]); }

  // Structural audit (symmetry, ordering, no self loops); throws on violation.
  void validate() const;

 private:
  int n_;
  std::vector<std::int64_t> offsets_;
  std::vector<int> adj_;
};

// Stochastic block model: node i belongs to the block covering index i in
// block order; each pair i < j is an edge independently with probability
// connect_prob(block_i, block_j).
struct SbmConfig {
  std::vector<int> block_sizes;
  Matrix connect_prob;  // K x K, symmetric, entries in [0, 1]

  int node_count() const;
  void validate() const;
};

Graph sbm_generate(const SbmConfig& cfg, Rng& rng);

// out_i = sum of v_j over neighbors j of i. Isolated nodes give 0.
std::vector<double> neighbor_sum(const Graph& g, std::span<const double> v);

// s_i = sum over neighbors j of X_j' beta (no intercept term).
std::vector<double> neighbor_feature_sum(const Graph& g, const Matrix& X,
                                         std::span<const double> beta);

}  // namespace latnet

#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bethe/types.hpp"

namespace bethe {

/// Immutable undirected simple graph with optional symmetric edge weights.
/// Stored as an undirected edge list (u < v, lexicographically sorted) plus
/// CSR adjacency; degree-0 vertices are retained.
class SparseGraph {
 public:
  SparseGraph() = default;

  // Builds from an undirected edge list. Rejects self-loops and duplicates.
  // `weights`, when present, must have one entry per edge.
  static SparseGraph from_edges(Index n, std::vector<std::pair<Index, Index>> edges,
                                std::optional<std::vector<double>> weights = std::nullopt);

  Index num_vertices() const { return n_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  bool weighted() const { return !weights_.empty(); }

  std::span<const Index> neighbors(Index v) const {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  Index degree(Index v) const { return offsets_[v + 1] - offsets_[v]; }
  const Vec& degrees() const { return degrees_; }

  const std::vector<std::pair<Index, Index>>& edges() const { return edges_; }
  const std::vector<double>& edge_weights() const { return weights_; }
  double edge_weight(Index e) const { return weights_.empty() ? 1.0 : weights_[e]; }

  // 0/1 (or weighted) symmetric adjacency matrix, compressed.
  SpMat adjacency_matrix(bool use_weights = false) const;

  bool operator==(const SparseGraph& other) const;

 private:
  Index n_ = 0;
  std::vector<std::pair<Index, Index>> edges_;  // u < v, sorted
  std::vector<double> weights_;                 // per edge, empty if unweighted
  std::vector<Index> offsets_;                  // CSR, size n+1
  std::vector<Index> targets_;                  // CSR neighbors, size 2m, sorted per row
  Vec degrees_;
};

/// Both orientations of every edge with a stable index: undirected edge k
/// (sorted by (min,max)) yields oriented slots 2k=(u,v) and 2k+1=(v,u).
struct OrientedEdgeSet {
  std::vector<std::pair<Index, Index>> edges;
  Index index_of(Index u, Index v) const;  // fails if (u,v) is not an edge

  Index size() const { return static_cast<Index>(edges.size()); }
};

double mean_degree(const SparseGraph& g);
OrientedEdgeSet oriented_edges(const SparseGraph& g);

enum class GraphFormat { EdgeList, MatrixMarket };

SparseGraph load_graph(const std::string& path, GraphFormat format);
void save_graph(const SparseGraph& g, const std::string& path, GraphFormat format);

// Newline-delimited integer labels.
void save_labels(const IVec& labels, const std::string& path);
IVec load_labels(const std::string& path);

}  // namespace bethe

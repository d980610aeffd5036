#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cvgae/numeric.hpp"

namespace cvgae {

class GraphFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using NodeId = std::uint32_t;
using EdgeList = std::vector<std::pair<NodeId, NodeId>>;

// Undirected, unweighted adjacency in CSR form. Both directions of every edge
// are stored, neighbor lists are sorted, self-loops and duplicates are absent.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(std::size_t n) : offsets_(n + 1, 0) {}

  // Accepts edges in any orientation. Duplicates and reversed duplicates are
  // merged; self-loops are dropped and counted in `dropped_self_loops`.
  static Adjacency from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges,
                              std::size_t* dropped_self_loops = nullptr);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  // Undirected edge count.
  std::size_t num_edges() const { return neighbors_.size() / 2; }
  std::size_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
  std::span<const NodeId> neighbors(NodeId u) const {
    return {neighbors_.data() + offsets_[u], degree(u)};
  }
  bool has_edge(NodeId u, NodeId v) const;

  // Each undirected edge once, as (u, v) with u < v, in lexicographic order.
  EdgeList edge_list() const;

  friend bool operator==(const Adjacency&, const Adjacency&) = default;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
};

struct Graph {
  Adjacency adjacency;
  Dense features;                       // n x J
  std::optional<std::vector<int>> labels;

  std::size_t num_nodes() const { return adjacency.num_nodes(); }
  std::size_t feature_dim() const { return features.cols(); }

  // Throws std::invalid_argument when a Graph invariant does not hold.
  void validate() const;
};

// Symmetric normalized propagation operator D^-1/2 (A + I) D^-1/2 where D
// counts the self-loop. Only normalize_adjacency constructs one.
class PropagationMatrix {
 public:
  const SparseMatrix& matrix() const { return matrix_; }
  std::size_t size() const { return matrix_.rows(); }

 private:
  friend PropagationMatrix normalize_adjacency(const Adjacency& adjacency);
  explicit PropagationMatrix(SparseMatrix m) : matrix_(std::move(m)) {}
  SparseMatrix matrix_;
};

PropagationMatrix normalize_adjacency(const Adjacency& adjacency);
inline PropagationMatrix normalize_adjacency(const Graph& g) {
  return normalize_adjacency(g.adjacency);
}

inline Dense spmm(const PropagationMatrix& s, const Dense& d) { return spmm(s.matrix(), d); }

struct LoadReport {
  std::size_t dropped_self_loops = 0;
  std::size_t duplicate_edges = 0;
};

// Edge list: "u<TAB>v" per line. Features: dense CSV, or sparse triplets with
// a leading "#sparse n J" header. Labels: "node,label" per line.
Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                 const std::optional<std::filesystem::path>& label_path,
                 LoadReport* report = nullptr);

void save_graph(const Graph& g, const std::filesystem::path& edge_path,
                const std::filesystem::path& feature_path,
                const std::optional<std::filesystem::path>& label_path);

struct SbmSpec {
  std::vector<std::size_t> sizes;  // one entry per block
  double p_in = 0.2;
  double p_out = 0.01;
  std::size_t feat_dim = 16;
  double feat_sep = 2.0;
  double noise_sd = 0.5;
  std::uint64_t seed = 0;
};

// Block c's feature mean is feat_sep along axis (c mod feat_dim).
Graph generate_sbm(const SbmSpec& spec);

struct PerturbSpec {
  double edge_add_frac = 0.0;
  double edge_drop_frac = 0.0;
  double feat_drop_frac = 0.0;
  double feat_noise_sd = 0.0;
  std::uint64_t seed = 0;
};

Graph perturb_graph(const Graph& g, const PerturbSpec& spec);

}  // namespace cvgae

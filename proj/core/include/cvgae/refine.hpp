#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cvgae/graph.hpp"
#include "cvgae/numeric.hpp"

namespace cvgae {

// For each cluster j, the reliable node predicted in j whose mean is closest
// to omega_j (lowest index on ties), or nullopt when j has no reliable member.
std::vector<std::optional<NodeId>> centroid_nodes(const Dense& mu, const Dense& omega,
                                                  std::span<const int> predicted,
                                                  std::span<const NodeId> theta);

struct RefineOptions {
  // Connect centroids to every predicted member instead of reliable members only.
  bool all_members = false;
};

// Positive graph: drops edges between reliable nodes with different predicted
// clusters, then links each centroid node to the members of its cluster.
Adjacency build_positive_graph(const Adjacency& a, std::span<const int> predicted,
                               std::span<const NodeId> theta,
                               std::span<const std::optional<NodeId>> centroids,
                               const RefineOptions& options = {});

// Generative target: the centroid-member additions only; never removes edges.
Adjacency build_generative_graph(const Adjacency& a, std::span<const int> predicted,
                                 std::span<const NodeId> theta,
                                 std::span<const std::optional<NodeId>> centroids,
                                 const RefineOptions& options = {});

struct LinkCounts {
  std::size_t true_links = 0;   // endpoints share a ground-truth label
  std::size_t false_links = 0;

  std::size_t total() const { return true_links + false_links; }
  friend bool operator==(const LinkCounts&, const LinkCounts&) = default;
};

struct LinkAudit {
  LinkCounts current;  // edges of the refined graph
  LinkCounts added;    // in refined, not in original
  LinkCounts deleted;  // in original, not in refined
};

LinkAudit audit_links(const Adjacency& original, const Adjacency& refined,
                      std::span<const int> labels);

struct RefinedGraphs {
  Adjacency a_pos;
  Adjacency a_gen;
  Adjacency a_neg;
  std::vector<std::optional<NodeId>> centroids;
  std::optional<LinkAudit> link_audit;
};

}  // namespace cvgae

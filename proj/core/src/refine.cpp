#include "cvgae/refine.hpp"

#include <algorithm>
#include <limits>

namespace cvgae {
namespace {

std::vector<char> membership(std::size_t n, std::span<const NodeId> theta) {
  std::vector<char> in(n, 0);
  for (NodeId i : theta) in.at(i) = 1;
  return in;
}

EdgeList centroid_links(const Adjacency& a, std::span<const int> predicted,
                        const std::vector<char>& reliable,
                        std::span<const std::optional<NodeId>> centroids, bool all_members) {
  EdgeList added;
  for (NodeId v = 0; v < a.num_nodes(); ++v) {
    if (!all_members && !reliable[v]) continue;
    const auto c = static_cast<std::size_t>(predicted[v]);
    if (c >= centroids.size() || !centroids[c]) continue;
    const NodeId hub = *centroids[c];
    if (hub != v) added.emplace_back(std::min(hub, v), std::max(hub, v));
  }
  return added;
}

void check_sizes(const Adjacency& a, std::span<const int> predicted) {
  if (predicted.size() != a.num_nodes()) {
    throw DimensionError("refinement: prediction vector does not match node count");
  }
}

}  // namespace

std::vector<std::optional<NodeId>> centroid_nodes(const Dense& mu, const Dense& omega,
                                                  std::span<const int> predicted,
                                                  std::span<const NodeId> theta) {
  std::vector<std::optional<NodeId>> out(omega.rows());
  std::vector<double> best(omega.rows(), std::numeric_limits<double>::infinity());
  std::vector<NodeId> sorted(theta.begin(), theta.end());
  std::sort(sorted.begin(), sorted.end());
  for (NodeId i : sorted) {
    const auto j = static_cast<std::size_t>(predicted[i]);
    const double dist = squared_distance(mu.row(i), omega.row(j));
    if (dist < best[j]) {
      best[j] = dist;
      out[j] = i;
    }
  }
  return out;
}

Adjacency build_positive_graph(const Adjacency& a, std::span<const int> predicted,
                               std::span<const NodeId> theta,
                               std::span<const std::optional<NodeId>> centroids,
                               const RefineOptions& options) {
  check_sizes(a, predicted);
  const auto reliable = membership(a.num_nodes(), theta);
  EdgeList edges;
  for (auto [u, v] : a.edge_list()) {
    if (reliable[u] && reliable[v] && predicted[u] != predicted[v]) continue;
    edges.emplace_back(u, v);
  }
  const auto added = centroid_links(a, predicted, reliable, centroids, options.all_members);
  edges.insert(edges.end(), added.begin(), added.end());
  return Adjacency::from_edges(a.num_nodes(), edges);
}

Adjacency build_generative_graph(const Adjacency& a, std::span<const int> predicted,
                                 std::span<const NodeId> theta,
                                 std::span<const std::optional<NodeId>> centroids,
                                 const RefineOptions& options) {
  check_sizes(a, predicted);
  const auto reliable = membership(a.num_nodes(), theta);
  EdgeList edges = a.edge_list();
  const auto added = centroid_links(a, predicted, reliable, centroids, options.all_members);
  edges.insert(edges.end(), added.begin(), added.end());
  return Adjacency::from_edges(a.num_nodes(), edges);
}

LinkAudit audit_links(const Adjacency& original, const Adjacency& refined,
                      std::span<const int> labels) {
  if (labels.size() != original.num_nodes() || refined.num_nodes() != original.num_nodes()) {
    throw DimensionError("audit_links: size mismatch");
  }
  LinkAudit audit;
  auto tally = [&](LinkCounts& c, NodeId u, NodeId v) {
    if (labels[u] == labels[v]) {
      ++c.true_links;
    } else {
      ++c.false_links;
    }
  };
  for (auto [u, v] : refined.edge_list()) {
    tally(audit.current, u, v);
    if (!original.has_edge(u, v)) tally(audit.added, u, v);
  }
  for (auto [u, v] : original.edge_list()) {
    if (!refined.has_edge(u, v)) tally(audit.deleted, u, v);
  }
  return audit;
}

}  // namespace cvgae

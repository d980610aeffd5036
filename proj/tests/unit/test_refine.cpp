#include <doctest.h>

#include "oracles.hpp"

using namespace cvgae;

namespace {

const std::vector<NodeId> kAll3{0, 1, 2};
const std::vector<int> kPred3{0, 0, 1};

Adjacency triangle() {
  const EdgeList e{{0, 1}, {1, 2}, {0, 2}};
  return Adjacency::from_edges(3, e);
}

}  // namespace

TEST_CASE("triangle example") {
  const std::vector<std::optional<NodeId>> centroids{0, 2};
  const Adjacency pos = build_positive_graph(triangle(), kPred3, kAll3, centroids);
  CHECK(pos.edge_list() == EdgeList{{0, 1}});
  const Adjacency gen = build_generative_graph(triangle(), kPred3, kAll3, centroids);
  CHECK(gen == triangle());

  const std::vector<int> labels{0, 0, 1};
  const LinkAudit audit = audit_links(triangle(), pos, labels);
  CHECK(audit.deleted == LinkCounts{0, 2});
  CHECK(audit.added == LinkCounts{0, 0});
  CHECK(audit.current == LinkCounts{1, 0});
}

TEST_CASE("reliable member far from its centroid gets linked") {
  const EdgeList e{{0, 1}, {1, 2}, {0, 2}};
  const auto a = Adjacency::from_edges(4, e);
  const std::vector<int> pred{0, 0, 1, 0};
  const std::vector<NodeId> theta{0, 1, 2, 3};
  const std::vector<std::optional<NodeId>> centroids{0, 2};
  const Adjacency pos = build_positive_graph(a, pred, theta, centroids);
  CHECK(pos.has_edge(0, 3));
  const Adjacency gen = build_generative_graph(a, pred, theta, centroids);
  const EdgeList expect{{0, 1}, {0, 2}, {0, 3}, {1, 2}};
  CHECK(gen.edge_list() == expect);
}

TEST_CASE("empty reliable set leaves the graph alone") {
  const Dense mu(3, 1, {0.0, 1.0, 2.0});
  const Dense omega(2, 1, {0.0, 2.0});
  const std::vector<NodeId> none;
  const auto centroids = centroid_nodes(mu, omega, kPred3, none);
  CHECK_FALSE(centroids[0].has_value());
  CHECK_FALSE(centroids[1].has_value());
  CHECK(build_positive_graph(triangle(), kPred3, none, centroids) == triangle());
  CHECK(build_generative_graph(triangle(), kPred3, none, centroids) == triangle());
}

TEST_CASE("centroid node selection") {
  const Dense omega(2, 1, {0.0, 5.0});
  SUBCASE("exact match wins") {
    const Dense mu(3, 1, {0.3, 0.0, 5.5});
    const auto c = centroid_nodes(mu, omega, kPred3, kAll3);
    CHECK(c[0] == NodeId{1});
    CHECK(c[1] == NodeId{2});
  }
  SUBCASE("ties go to the lower index") {
    const Dense mu(3, 1, {-1.0, 1.0, 5.0});
    const auto c = centroid_nodes(mu, omega, kPred3, std::vector<NodeId>{1, 0, 2});
    CHECK(c[0] == NodeId{0});
  }
  SUBCASE("only reliable nodes qualify") {
    const Dense mu(3, 1, {0.0, 3.0, 5.0});
    const auto c = centroid_nodes(mu, omega, kPred3, std::vector<NodeId>{1, 2});
    CHECK(c[0] == NodeId{1});
  }
}

TEST_CASE("audit counts") {
  const EdgeList e{{0, 1}, {1, 2}, {2, 3}};
  const auto a = Adjacency::from_edges(4, e);
  const std::vector<int> labels{0, 0, 1, 1};
  const EdgeList kept{{0, 1}, {2, 3}, {0, 3}};
  const LinkAudit audit = audit_links(a, Adjacency::from_edges(4, kept), labels);
  CHECK(audit.current == LinkCounts{2, 1});
  CHECK(audit.added == LinkCounts{0, 1});
  CHECK(audit.deleted == LinkCounts{0, 1});  // only the inter-label edge went
}

TEST_CASE("refinement invariants on random cluster states") {
  auto rng = rng_stream(31, Stream::kTestData);
  for (int t = 0; t < 2000; ++t) {
    const auto c = oracle::random_refine_case(rng);
    const std::string err = oracle::check_refine_case(c, t % 4 == 3);
    INFO("case " << t << ": " << err);
    CHECK(err.empty());
  }
}

TEST_CASE("prediction length is checked") {
  const std::vector<int> short_pred{0, 1};
  const std::vector<std::optional<NodeId>> centroids{0, 1};
  CHECK_THROWS_AS(build_positive_graph(triangle(), short_pred, {}, centroids), DimensionError);
}

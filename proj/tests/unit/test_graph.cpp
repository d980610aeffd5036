#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <set>

#include "cvgae/graph.hpp"
#include "helpers.hpp"

using namespace cvgae;
using testutil::TempDir;
using testutil::write_file;

namespace {

Adjacency path3() {
  const EdgeList e{{0, 1}, {1, 2}};
  return Adjacency::from_edges(3, e);
}

std::size_t components(const Adjacency& a, std::vector<int>& comp) {
  comp.assign(a.num_nodes(), -1);
  int next = 0;
  for (NodeId s = 0; s < a.num_nodes(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<NodeId> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : a.neighbors(u)) {
        if (comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return static_cast<std::size_t>(next);
}

}  // namespace

TEST_CASE("adjacency dedups, symmetrizes and drops self-loops") {
  const EdgeList e{{0, 1}, {1, 0}, {2, 2}, {1, 2}, {1, 2}};
  std::size_t loops = 0;
  const auto a = Adjacency::from_edges(3, e, &loops);
  CHECK(loops == 1);
  CHECK(a.num_edges() == 2);
  CHECK(a.has_edge(0, 1));
  CHECK(a.has_edge(1, 0));
  CHECK_FALSE(a.has_edge(2, 2));
  CHECK(a.degree(1) == 2);
  CHECK(a.edge_list() == EdgeList{{0, 1}, {1, 2}});
  const EdgeList bad{{0, 3}};
  CHECK_THROWS(Adjacency::from_edges(3, bad));
}

TEST_CASE("normalize_adjacency examples") {
  const EdgeList one{{0, 1}};
  const Dense two = normalize_adjacency(Adjacency::from_edges(2, one)).matrix().to_dense();
  for (double x : two.values()) CHECK(x == 0.5);

  const Dense single = normalize_adjacency(Adjacency(1)).matrix().to_dense();
  CHECK(single(0, 0) == 1.0);

  const Dense p = normalize_adjacency(path3()).matrix().to_dense();
  CHECK(p(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-15));
  CHECK(p(0, 1) == doctest::Approx(0.40825).epsilon(1e-5));
  CHECK(p(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(p(0, 2) == 0.0);
}

TEST_CASE("propagation matrix invariants on random graphs") {
  auto rng = rng_stream(21, Stream::kTestData);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.below(12);
    EdgeList e;
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = u + 1; v < n; ++v) {
        if (rng.bernoulli(0.3)) e.emplace_back(u, v);
      }
    }
    const auto a = Adjacency::from_edges(n, e);
    const Dense s = normalize_adjacency(a).matrix().to_dense();
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      bool equal_degrees = true;
      for (NodeId j : a.neighbors(static_cast<NodeId>(i))) {
        if (a.degree(j) != a.degree(static_cast<NodeId>(i))) equal_degrees = false;
      }
      CHECK(s(i, i) == 1.0 / static_cast<double>(a.degree(static_cast<NodeId>(i)) + 1));
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(s(i, j) == s(j, i));  // exact symmetry
        CHECK(s(i, j) >= 0.0);
        CHECK(s(i, j) <= 1.0);
        row += s(i, j);
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s(i, j);
      }
      // neighbors of equal degree make the row stochastic
      if (equal_degrees) CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    CHECK(eig.eigenvalues().minCoeff() > -1.0);
    CHECK(eig.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("load_graph minimal and dedup examples") {
  TempDir dir;
  write_file(dir / "e.txt", "0\t1\n");
  write_file(dir / "x.csv", "1.0,2.0\n3.0,4.0\n");
  const Graph g = load_graph(dir / "e.txt", dir / "x.csv", std::nullopt);
  CHECK(g.num_nodes() == 2);
  CHECK(g.adjacency.num_edges() == 1);
  CHECK(g.features(1, 0) == 3.0);
  CHECK_FALSE(g.labels.has_value());

  write_file(dir / "e2.txt", "# comment\n0\t1\n1\t0\n1 1\n\n");
  LoadReport report;
  const Graph h = load_graph(dir / "e2.txt", dir / "x.csv", std::nullopt, &report);
  CHECK(h.adjacency.num_edges() == 1);
  CHECK(report.dropped_self_loops == 1);
  CHECK(report.duplicate_edges == 1);
}

TEST_CASE("load_graph errors") {
  TempDir dir;
  write_file(dir / "e.txt", "0\t1\n");
  write_file(dir / "x3.csv", "1\n2\n3\n");
  try {
    load_graph(dir / "e.txt", dir / "x3.csv", std::nullopt);
    FAIL("expected mismatch");
  } catch (const GraphFormatError& e) {
    CHECK(std::string(e.what()).find("feature/node count mismatch") != std::string::npos);
  }

  write_file(dir / "x2.csv", "1\n2\n");
  write_file(dir / "bad.txt", "0\t1\n0\tx\n");
  try {
    load_graph(dir / "bad.txt", dir / "x2.csv", std::nullopt);
    FAIL("expected malformed line");
  } catch (const GraphFormatError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  write_file(dir / "far.txt", "0\t5\n");
  CHECK_THROWS_AS(load_graph(dir / "far.txt", dir / "x2.csv", std::nullopt), GraphFormatError);

  write_file(dir / "ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(load_graph(dir / "e.txt", dir / "ragged.csv", std::nullopt), GraphFormatError);

  write_file(dir / "lab.csv", "0,0\n1,7\n");
  CHECK_THROWS_AS(load_graph(dir / "e.txt", dir / "x2.csv", dir / "lab.csv"), GraphFormatError);
  write_file(dir / "partial.csv", "0,0\n");
  CHECK_THROWS_AS(load_graph(dir / "e.txt", dir / "x2.csv", dir / "partial.csv"), GraphFormatError);
  CHECK_THROWS_AS(load_graph(dir / "missing.txt", dir / "x2.csv", std::nullopt), GraphFormatError);
}

TEST_CASE("sparse features and labels") {
  TempDir dir;
  write_file(dir / "e.txt", "0\t1\n");
  write_file(dir / "x.txt", "#sparse 3 4\n0,1,1.5\n2,3,2\n");
  write_file(dir / "y.csv", "0,1\n1,1\n2,0\n");
  const Graph g = load_graph(dir / "e.txt", dir / "x.txt", dir / "y.csv");
  CHECK(g.num_nodes() == 3);  // node 2 is isolated
  CHECK(g.adjacency.degree(2) == 0);
  CHECK(g.features(0, 1) == 1.5);
  CHECK(g.features(2, 3) == 2.0);
  CHECK(g.features(1, 0) == 0.0);
  CHECK(*g.labels == std::vector<int>{1, 1, 0});

  write_file(dir / "oob.txt", "#sparse 3 4\n0,4,1\n");
  CHECK_THROWS_AS(load_graph(dir / "e.txt", dir / "oob.txt", std::nullopt), GraphFormatError);
}

TEST_CASE("save_graph round trips") {
  SbmSpec spec;
  spec.sizes = {5, 6};
  spec.seed = 4;
  const Graph g = generate_sbm(spec);
  TempDir dir;
  save_graph(g, dir / "e.txt", dir / "x.csv", dir / "y.csv");
  const Graph h = load_graph(dir / "e.txt", dir / "x.csv", dir / "y.csv");
  CHECK(h.adjacency == g.adjacency);
  CHECK(h.features == g.features);
  CHECK(h.labels == g.labels);

  const EdgeList one{{0, 1}};
  const Graph tail{Adjacency::from_edges(3, one), Dense(3, 2, {1, 0, 0, 2, 3, 0}), std::nullopt};
  save_graph(tail, dir / "e3.txt", dir / "x3.csv", std::nullopt);
  const Graph t = load_graph(dir / "e3.txt", dir / "x3.csv", std::nullopt);
  CHECK(t.num_nodes() == 3);
  CHECK(t.features == tail.features);
}

TEST_CASE("generate_sbm examples") {
  SbmSpec spec;
  spec.sizes = {4, 5};
  spec.p_in = 1.0;
  spec.p_out = 0.0;
  spec.noise_sd = 0.0;
  const Graph g = generate_sbm(spec);
  g.validate();
  CHECK(g.adjacency.num_edges() == 6 + 10);
  std::vector<int> comp;
  CHECK(components(g.adjacency, comp) == 2);
  for (NodeId i = 0; i < 9; ++i) CHECK((comp[i] == comp[0]) == ((*g.labels)[i] == 0));
  for (NodeId i = 1; i < 4; ++i) CHECK(std::equal(g.features.row(i).begin(), g.features.row(i).end(), g.features.row(0).begin()));
  CHECK(g.features(0, 0) == spec.feat_sep);
  CHECK(g.features(4, 1) == spec.feat_sep);

  SbmSpec noisy;
  noisy.sizes = {10, 10, 10};
  noisy.seed = 9;
  CHECK(generate_sbm(noisy).adjacency == generate_sbm(noisy).adjacency);
  CHECK(generate_sbm(noisy).features == generate_sbm(noisy).features);

  SbmSpec bad = noisy;
  bad.p_in = 1.5;
  CHECK_THROWS(generate_sbm(bad));
  bad = noisy;
  bad.p_out = 0.5;
  bad.p_in = 0.1;
  CHECK_THROWS(generate_sbm(bad));
  bad = noisy;
  bad.sizes = {3, 0};
  CHECK_THROWS(generate_sbm(bad));
}

TEST_CASE("perturb_graph examples") {
  SbmSpec spec;
  spec.sizes = {15, 15};
  spec.seed = 1;
  const Graph g = generate_sbm(spec);

  const Graph same = perturb_graph(g, PerturbSpec{});
  CHECK(same.adjacency == g.adjacency);
  CHECK(same.features == g.features);

  PerturbSpec drop_all;
  drop_all.edge_drop_frac = 1.0;
  CHECK(perturb_graph(g, drop_all).adjacency.num_edges() == 0);

  PerturbSpec mix{0.3, 0.2, 0.25, 0.1, 42};
  const Graph a = perturb_graph(g, mix);
  const Graph b = perturb_graph(g, mix);
  CHECK(a.adjacency == b.adjacency);
  CHECK(a.features == b.features);
  CHECK(a.labels == g.labels);
  CHECK(a.num_nodes() == g.num_nodes());
  a.validate();

  const std::size_t m = g.adjacency.num_edges();
  const auto dropped = static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(m)));
  const auto added = static_cast<std::size_t>(std::floor(0.3 * static_cast<double>(m)));
  CHECK(a.adjacency.num_edges() == m - dropped + added);
  std::size_t kept = 0;
  for (auto [u, v] : g.adjacency.edge_list()) kept += a.adjacency.has_edge(u, v) ? 1 : 0;
  CHECK(kept == m - dropped);

  // floor(0.25 * J) zeroed columns per node
  const std::size_t zeroed = spec.feat_dim / 4;
  for (std::size_t i = 0; i < a.num_nodes(); ++i) {
    std::size_t zeros = 0;
    for (double x : a.features.row(i)) zeros += x == 0.0 ? 1 : 0;
    CHECK(zeros == zeroed);
  }

  PerturbSpec too_many;
  too_many.edge_add_frac = 1.0;
  const EdgeList tri{{0, 1}, {1, 2}, {0, 2}, {2, 3}};
  Graph dense{Adjacency::from_edges(4, tri), Dense(4, 2), std::nullopt};
  CHECK_THROWS(perturb_graph(dense, too_many));
}

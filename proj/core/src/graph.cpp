#include "cvgae/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace cvgae {
namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphFormatError("cannot open " + path.string());
  return in;
}

struct ParsedEdges {
  EdgeList edges;
  std::size_t max_endpoint_plus_one = 0;
};

ParsedEdges read_edges(const std::filesystem::path& path) {
  auto in = open_input(path);
  ParsedEdges out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto parts = split_ws(body);
    NodeId u = 0;
    NodeId v = 0;
    if (parts.size() != 2 || !parse_number(parts[0], u) || !parse_number(parts[1], v)) {
      throw GraphFormatError(where(path, lineno) + "malformed edge line '" + std::string(body) + "'");
    }
    out.edges.emplace_back(u, v);
    out.max_endpoint_plus_one =
        std::max<std::size_t>(out.max_endpoint_plus_one, std::max(u, v) + std::size_t{1});
  }
  return out;
}

struct ParsedFeatures {
  Dense values;
  bool sparse = false;
};

ParsedFeatures read_features(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  bool sparse = false;
  Dense sparse_values;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (lineno == 1 && body.starts_with("#sparse")) {
      const auto parts = split_ws(body);
      std::size_t n = 0;
      std::size_t j = 0;
      if (parts.size() != 3 || !parse_number(parts[1], n) || !parse_number(parts[2], j)) {
        throw GraphFormatError(where(path, lineno) + "expected header '#sparse n J'");
      }
      sparse = true;
      sparse_values = Dense(n, j);
      continue;
    }
    if (body.front() == '#') continue;
    const auto fields = split(body, ',');
    if (sparse) {
      std::size_t node = 0;
      std::size_t dim = 0;
      double value = 0.0;
      if (fields.size() != 3 || !parse_number(fields[0], node) || !parse_number(fields[1], dim) ||
          !parse_number(fields[2], value)) {
        throw GraphFormatError(where(path, lineno) + "malformed sparse feature line");
      }
      if (node >= sparse_values.rows() || dim >= sparse_values.cols()) {
        throw GraphFormatError(where(path, lineno) + "sparse feature index out of range");
      }
      if (!std::isfinite(value)) throw GraphFormatError(where(path, lineno) + "non-finite feature");
      sparse_values(node, dim) = value;
      continue;
    }
    if (rows == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw GraphFormatError(where(path, lineno) + "expected " + std::to_string(cols) +
                             " feature columns, found " + std::to_string(fields.size()));
    }
    for (const auto f : fields) {
      double v = 0.0;
      if (!parse_number(f, v)) {
        throw GraphFormatError(where(path, lineno) + "malformed feature value '" + std::string(f) + "'");
      }
      if (!std::isfinite(v)) throw GraphFormatError(where(path, lineno) + "non-finite feature");
      values.push_back(v);
    }
    ++rows;
  }
  if (sparse) return {std::move(sparse_values), true};
  return {Dense(rows, cols, std::move(values)), false};
}

std::vector<int> read_labels(const std::filesystem::path& path, std::size_t n) {
  auto in = open_input(path);
  std::vector<int> labels(n, -1);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = split(body, ',');
    std::size_t node = 0;
    long long label = 0;
    if (fields.size() != 2 || !parse_number(fields[0], node) || !parse_number(fields[1], label)) {
      throw GraphFormatError(where(path, lineno) + "malformed label line");
    }
    if (node >= n) {
      throw GraphFormatError(where(path, lineno) + "label node " + std::to_string(node) +
                             " >= node count " + std::to_string(n));
    }
    if (label < 0 || label >= static_cast<long long>(n)) {
      throw GraphFormatError(where(path, lineno) + "label out of range: " + std::to_string(label));
    }
    labels[node] = static_cast<int>(label);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0) throw GraphFormatError(path.string() + ": missing label for node " + std::to_string(i));
  }
  return labels;
}

}  // namespace

Adjacency Adjacency::from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges,
                                std::size_t* dropped_self_loops) {
  std::vector<std::pair<NodeId, NodeId>> directed;
  directed.reserve(edges.size() * 2);
  std::size_t self_loops = 0;
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) {
      throw std::invalid_argument("edge endpoint " + std::to_string(std::max(u, v)) +
                                  " >= node count " + std::to_string(n));
    }
    if (u == v) {
      ++self_loops;
      continue;
    }
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());
  Adjacency adj(n);
  adj.neighbors_.reserve(directed.size());
  for (auto [u, v] : directed) {
    ++adj.offsets_[u + 1];
    adj.neighbors_.push_back(v);
  }
  for (std::size_t i = 0; i < n; ++i) adj.offsets_[i + 1] += adj.offsets_[i];
  if (dropped_self_loops != nullptr) *dropped_self_loops = self_loops;
  return adj;
}

bool Adjacency::has_edge(NodeId u, NodeId v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

EdgeList Adjacency::edge_list() const {
  EdgeList out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

void Graph::validate() const {
  const std::size_t n = num_nodes();
  if (features.rows() != n) {
    throw std::invalid_argument("feature/node count mismatch: " + std::to_string(features.rows()) +
                                " feature rows for " + std::to_string(n) + " nodes");
  }
  if (!features.all_finite()) throw std::invalid_argument("non-finite feature value");
  if (labels && labels->size() != n) throw std::invalid_argument("label vector length mismatch");
  for (NodeId u = 0; u < n; ++u) {
    const auto nb = adjacency.neighbors(u);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (nb[k] >= n || nb[k] == u) throw std::invalid_argument("invalid neighbor entry");
      if (k > 0 && nb[k - 1] >= nb[k]) throw std::invalid_argument("unsorted or duplicate neighbors");
      if (!adjacency.has_edge(nb[k], u)) throw std::invalid_argument("asymmetric adjacency");
    }
  }
}

PropagationMatrix normalize_adjacency(const Adjacency& adjacency) {
  const std::size_t n = adjacency.num_nodes();
  std::vector<double> deg_plus_one(n);
  for (NodeId i = 0; i < n; ++i) deg_plus_one[i] = static_cast<double>(adjacency.degree(i) + 1);
  std::vector<std::size_t> row_ptr(n + 1, 0);
  std::vector<NodeId> cols;
  std::vector<double> vals;
  cols.reserve(2 * adjacency.num_edges() + n);
  vals.reserve(cols.capacity());
  for (NodeId i = 0; i < n; ++i) {
    bool diag_done = false;
    auto push_diag = [&] {
      cols.push_back(i);
      vals.push_back(1.0 / deg_plus_one[i]);
      diag_done = true;
    };
    for (NodeId j : adjacency.neighbors(i)) {
      if (!diag_done && j > i) push_diag();
      cols.push_back(j);
      // The product is commutative, so entries (i, j) and (j, i) are bitwise equal.
      vals.push_back(1.0 / std::sqrt(deg_plus_one[i] * deg_plus_one[j]));
    }
    if (!diag_done) push_diag();
    row_ptr[i + 1] = cols.size();
  }
  return PropagationMatrix(
      SparseMatrix(n, n, std::move(row_ptr), std::move(cols), std::move(vals)));
}

Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                 const std::optional<std::filesystem::path>& label_path, LoadReport* report) {
  auto edges = read_edges(edge_path);
  auto features = read_features(feature_path);
  const std::size_t n = features.values.rows();
  if (edges.max_endpoint_plus_one > n) {
    throw GraphFormatError(edge_path.string() + ": edge endpoint " +
                           std::to_string(edges.max_endpoint_plus_one - 1) +
                           " >= node count " + std::to_string(n));
  }
  // Dense feature files carry no explicit node count; the edge file must then
  // mention the last node.
  if (!features.sparse && !edges.edges.empty() && edges.max_endpoint_plus_one != n) {
    throw GraphFormatError("feature/node count mismatch: " + std::to_string(n) +
                           " feature rows for " + std::to_string(edges.max_endpoint_plus_one) +
                           " nodes in " + edge_path.string());
  }
  Graph g;
  std::size_t self_loops = 0;
  g.adjacency = Adjacency::from_edges(n, edges.edges, &self_loops);
  g.features = std::move(features.values);
  if (label_path) g.labels = read_labels(*label_path, n);
  if (report != nullptr) {
    report->dropped_self_loops = self_loops;
    report->duplicate_edges = edges.edges.size() - self_loops - g.adjacency.num_edges();
  }
  g.validate();
  return g;
}

void save_graph(const Graph& g, const std::filesystem::path& edge_path,
                const std::filesystem::path& feature_path,
                const std::optional<std::filesystem::path>& label_path) {
  {
    std::ofstream out(edge_path);
    if (!out) throw GraphFormatError("cannot write " + edge_path.string());
    for (auto [u, v] : g.adjacency.edge_list()) out << u << '\t' << v << '\n';
  }
  {
    std::ofstream out(feature_path);
    if (!out) throw GraphFormatError("cannot write " + feature_path.string());
    out << std::setprecision(17);
    const std::size_t n = g.features.rows();
    // A dense file cannot express a trailing isolated node, so fall back to
    // the sparse layout with its explicit node count.
    const bool sparse = n > 0 && g.adjacency.degree(static_cast<NodeId>(n - 1)) == 0;
    if (sparse) out << "#sparse " << n << ' ' << g.features.cols() << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      auto row = g.features.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (!sparse) out << (j ? "," : "") << row[j];
        else if (row[j] != 0.0) out << i << ',' << j << ',' << row[j] << '\n';
      }
      if (!sparse) out << '\n';
    }
  }
  if (label_path && g.labels) {
    std::ofstream out(*label_path);
    if (!out) throw GraphFormatError("cannot write " + label_path->string());
    for (std::size_t i = 0; i < g.labels->size(); ++i) out << i << ',' << (*g.labels)[i] << '\n';
  }
}

Graph generate_sbm(const SbmSpec& spec) {
  auto valid_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!valid_prob(spec.p_in) || !valid_prob(spec.p_out)) {
    throw std::invalid_argument("generate_sbm: probabilities must lie in [0, 1]");
  }
  if (spec.p_out > spec.p_in) throw std::invalid_argument("generate_sbm: p_out > p_in");
  if (spec.sizes.empty() || std::find(spec.sizes.begin(), spec.sizes.end(), 0u) != spec.sizes.end()) {
    throw std::invalid_argument("generate_sbm: block sizes must be positive");
  }
  if (spec.feat_dim == 0) throw std::invalid_argument("generate_sbm: feat_dim must be positive");

  const std::size_t n = std::accumulate(spec.sizes.begin(), spec.sizes.end(), std::size_t{0});
  std::vector<int> block(n);
  for (std::size_t c = 0, i = 0; c < spec.sizes.size(); ++c) {
    for (std::size_t k = 0; k < spec.sizes[c]; ++k) block[i++] = static_cast<int>(c);
  }

  auto rng = rng_stream(spec.seed, Stream::kSbm);
  EdgeList edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = block[u] == block[v] ? spec.p_in : spec.p_out;
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }

  Graph g;
  g.adjacency = Adjacency::from_edges(n, edges);
  g.features = Dense(n, spec.feat_dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = g.features.row(i);
    for (double& x : row) x = spec.noise_sd * rng.normal();
    row[static_cast<std::size_t>(block[i]) % spec.feat_dim] += spec.feat_sep;
  }
  g.labels = std::move(block);
  return g;
}

Graph perturb_graph(const Graph& g, const PerturbSpec& spec) {
  auto valid_frac = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!valid_frac(spec.edge_add_frac) || !valid_frac(spec.edge_drop_frac) ||
      !valid_frac(spec.feat_drop_frac)) {
    throw std::invalid_argument("perturb_graph: fractions must lie in [0, 1]");
  }
  if (spec.feat_noise_sd < 0.0) throw std::invalid_argument("perturb_graph: negative noise sd");

  const std::size_t n = g.num_nodes();
  const EdgeList original = g.adjacency.edge_list();
  const auto m = original.size();
  const auto n_drop = static_cast<std::size_t>(std::floor(spec.edge_drop_frac * static_cast<double>(m)));
  const auto n_add = static_cast<std::size_t>(std::floor(spec.edge_add_frac * static_cast<double>(m)));
  const std::size_t pairs = n * (n - (n > 0 ? 1 : 0)) / 2;
  if (n_add > pairs - m) {
    throw std::invalid_argument("perturb_graph: " + std::to_string(n_add) +
                                " edge additions requested but only " + std::to_string(pairs - m) +
                                " non-edges exist");
  }

  auto rng = rng_stream(spec.seed, Stream::kPerturbation);

  // Partial Fisher-Yates: the first n_drop positions are the dropped edges.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = 0; k < n_drop; ++k) {
    std::swap(order[k], order[k + rng.below(m - k)]);
  }
  EdgeList kept;
  kept.reserve(m - n_drop + n_add);
  for (std::size_t k = n_drop; k < m; ++k) kept.push_back(original[order[k]]);
  std::sort(kept.begin(), kept.end());

  std::set<std::pair<NodeId, NodeId>> added;
  while (added.size() < n_add) {
    auto u = static_cast<NodeId>(rng.below(n));
    auto v = static_cast<NodeId>(rng.below(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (g.adjacency.has_edge(u, v)) continue;
    added.emplace(u, v);
  }
  kept.insert(kept.end(), added.begin(), added.end());

  Graph out;
  out.adjacency = Adjacency::from_edges(n, kept);
  out.features = g.features;
  out.labels = g.labels;

  const std::size_t j = g.feature_dim();
  const auto n_zero = static_cast<std::size_t>(std::floor(spec.feat_drop_frac * static_cast<double>(j)));
  std::vector<std::size_t> cols(j);
  std::vector<char> dropped(j);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.features.row(i);
    std::fill(dropped.begin(), dropped.end(), 0);
    if (n_zero > 0) {
      std::iota(cols.begin(), cols.end(), 0);
      for (std::size_t k = 0; k < n_zero; ++k) {
        std::swap(cols[k], cols[k + rng.below(j - k)]);
        dropped[cols[k]] = 1;
        row[cols[k]] = 0.0;
      }
    }
    if (spec.feat_noise_sd > 0.0) {
      for (std::size_t c = 0; c < j; ++c) {
        if (!dropped[c]) row[c] += spec.feat_noise_sd * rng.normal();
      }
    }
  }
  return out;
}

}  // namespace cvgae

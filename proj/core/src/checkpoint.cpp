#include "cvgae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace cvgae {
namespace {

constexpr char kMagic[4] = {'C', 'V', 'G', 'A'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  template <typename T>
  void le(T value) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void tensor(const Dense& t) {
    le<std::uint64_t>(2);
    le<std::uint64_t>(t.rows());
    le<std::uint64_t>(t.cols());
    for (double x : t.values()) le(x);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw CheckpointError("checkpoint corrupt: truncated file");
  }
  template <typename T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Dense tensor() {
    const auto rank = le<std::uint64_t>();
    if (rank != 2) throw CheckpointError("checkpoint corrupt: unsupported tensor rank " + std::to_string(rank));
    const auto rows = le<std::uint64_t>();
    const auto cols = le<std::uint64_t>();
    if (cols != 0 && rows > (in_.size() - pos_) / 8 / cols) {
      throw CheckpointError("checkpoint corrupt: truncated file");
    }
    Dense t(rows, cols);
    for (double& x : t.values()) x = le<double>();
    return t;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

void expect_shape(const Dense& t, std::size_t rows, std::size_t cols, const char* name) {
  if (t.rows() != rows || t.cols() != cols) {
    throw CheckpointError(std::string("checkpoint shape mismatch for ") + name + ": stored " +
                          std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                          ", config expects " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le(Checkpoint::kVersion);
  w.le(ckpt.config_hash);
  w.le(ckpt.pretrain_iterations);
  w.le(ckpt.clustering_iterations);
  w.le(ckpt.adam.t);
  w.le(ckpt.adam.config.lr);
  w.le(ckpt.adam.config.beta1);
  w.le(ckpt.adam.config.beta2);
  w.le(ckpt.adam.config.eps);
  w.le<std::uint64_t>(ckpt.rng_state.size());
  w.bytes(ckpt.rng_state.data(), ckpt.rng_state.size());

  const auto params = ckpt.params.tensors();
  if (ckpt.adam.m.size() != params.size() || ckpt.adam.v.size() != params.size()) {
    throw CheckpointError("checkpoint: Adam state does not match parameter count");
  }
  w.le<std::uint64_t>(3 * params.size() + 1);
  for (const Dense* t : params) w.tensor(*t);
  for (const Dense& t : ckpt.adam.m) w.tensor(t);
  for (const Dense& t : ckpt.adam.v) w.tensor(t);
  Dense edges(ckpt.positive_edges.size(), 2);
  for (std::size_t e = 0; e < ckpt.positive_edges.size(); ++e) {
    edges(e, 0) = ckpt.positive_edges[e].first;
    edges(e, 1) = ckpt.positive_edges[e].second;
  }
  w.tensor(edges);
  return w.take();
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(4) != std::string(kMagic, 4)) throw CheckpointError("checkpoint corrupt: bad magic");
  const auto version = r.le<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(Checkpoint::kVersion) + ")");
  }
  Checkpoint c;
  c.config_hash = r.le<std::uint64_t>();
  c.pretrain_iterations = r.le<std::uint64_t>();
  c.clustering_iterations = r.le<std::uint64_t>();
  c.adam.t = r.le<std::uint64_t>();
  c.adam.config.lr = r.le<double>();
  c.adam.config.beta1 = r.le<double>();
  c.adam.config.beta2 = r.le<double>();
  c.adam.config.eps = r.le<double>();
  c.rng_state = r.bytes(r.le<std::uint64_t>());
  const auto count = r.le<std::uint64_t>();
  if (count != 13) throw CheckpointError("checkpoint corrupt: expected 13 tensors, found " + std::to_string(count));
  c.params.w1 = r.tensor();
  c.params.w2_mu = r.tensor();
  c.params.w2_sigma = r.tensor();
  c.params.omega = r.tensor();
  for (int i = 0; i < 4; ++i) c.adam.m.push_back(r.tensor());
  for (int i = 0; i < 4; ++i) c.adam.v.push_back(r.tensor());
  const Dense edges = r.tensor();
  if (edges.cols() != 2 && edges.rows() != 0) throw CheckpointError("checkpoint corrupt: edge tensor");
  for (std::size_t e = 0; e < edges.rows(); ++e) {
    c.positive_edges.emplace_back(static_cast<NodeId>(edges(e, 0)), static_cast<NodeId>(edges(e, 1)));
  }
  if (!r.done()) throw CheckpointError("checkpoint corrupt: trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelShape& expected,
                           std::uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Checkpoint c = parse_checkpoint(bytes);

  expect_shape(c.params.w1, expected.feat_dim, expected.hidden, "w1");
  expect_shape(c.params.w2_mu, expected.hidden, expected.latent, "w2_mu");
  expect_shape(c.params.w2_sigma, expected.hidden, expected.latent, "w2_sigma");
  // A pretraining checkpoint carries no centers yet.
  if (c.params.omega.rows() != 0) {
    expect_shape(c.params.omega, expected.clusters == 0 ? c.params.omega.rows() : expected.clusters,
                 expected.latent, "omega");
  }
  const auto tensors = c.params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (!c.adam.m[i].same_shape(*tensors[i]) || !c.adam.v[i].same_shape(*tensors[i])) {
      throw CheckpointError("checkpoint shape mismatch: Adam moments for " + std::string(kTensorNames[i]));
    }
  }
  if (c.config_hash != expected_hash) {
    throw CheckpointError("checkpoint config hash mismatch: the checkpoint was produced with a "
                          "different model configuration");
  }
  return c;
}

}  // namespace cvgae

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "cvgae/encoder.hpp"
#include "cvgae/graph.hpp"
#include "cvgae/numeric.hpp"

namespace cvgae {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout, all integers and floats little-endian:
//   "CVGA" | u32 version | u64 config hash
//   u64 pretrain iterations | u64 clustering iterations | u64 adam step
//   f64 lr, beta1, beta2, eps | u64 rng-state length | rng-state bytes
//   u64 tensor count, then per tensor: u64 rank | u64 dims[rank] | f64 data (row-major)
// Tensor order: w1, w2_mu, w2_sigma, omega, adam m x4, adam v x4, and the
// positive-graph edge list as an E x 2 tensor.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  EncoderParams params;
  AdamState adam;
  std::uint64_t pretrain_iterations = 0;
  std::uint64_t clustering_iterations = 0;
  std::uint64_t config_hash = 0;
  std::string rng_state;
  EdgeList positive_edges;
};

struct ModelShape {
  std::size_t feat_dim = 0;
  std::size_t hidden = 0;
  std::size_t latent = 0;
  std::size_t clusters = 0;  // 0 accepts a checkpoint without centers
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Rejects bad magic, unknown versions and truncation, then tensor shapes
// that disagree with `expected`, then a config-hash mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelShape& expected,
                           std::uint64_t expected_hash);

}  // namespace cvgae

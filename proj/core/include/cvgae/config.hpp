#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace cvgae {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Every key of the flat JSON config file. Field names are the JSON keys.
struct TrainConfig {
  double alpha = 0.2;             // confidence threshold on lambda1 - lambda2
  std::size_t M = 10;             // refresh period for theta, A_pos, A_gen
  std::size_t T1 = 200;           // pretraining iterations
  std::size_t max_clus_iters = 2000;
  std::size_t K = 0;              // 0: number of distinct ground-truth labels
  std::size_t h = 32;
  std::size_t d = 16;
  std::size_t L = 1;              // Monte Carlo samples
  double lr_pre = 0.01;
  double lr_clus = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::optional<double> scale;    // objective multiplier; unset means 1 / N^2
  // Prefactor of the KL terms: sum_i KL(q_i || p) in pretraining and the
  // whole L3 term (rescaled by kl_weight / 2N). Unset means the unscaled 2N.
  std::optional<double> kl_weight = 1.0;
  double stop_fraction = 0.8;
  bool no_fr = false;
  bool no_fd = false;
  bool no_pc = false;
  bool no_cl = false;
  bool include_self_pairs = true;
  bool l3_full_gradient = false;
  bool refine_all_members = false;
  std::string nmi_norm = "arithmetic";
  double au_delta = 0.01;
  std::size_t kmeans_iters = 100;
  double kmeans_tol = 1e-6;
  bool diagnostics = true;

  // Throws ConfigError naming the offending key.
  void validate() const;

  double resolved_scale(std::size_t num_nodes) const;

  // Hash of the keys that determine the trained tensors' shapes and the
  // pretraining trajectory. Clustering-phase keys (alpha, M, ablations) are
  // excluded so one pretrained checkpoint can seed several variants.
  std::uint64_t model_hash() const;
};

nlohmann::json to_json(const TrainConfig& cfg);

// Overlays `j` onto `base`. Unknown keys and wrongly typed values throw.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

TrainConfig load_config(const std::string& path, TrainConfig base = {});

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace cvgae

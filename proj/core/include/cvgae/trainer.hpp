#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cvgae/config.hpp"
#include "cvgae/encoder.hpp"
#include "cvgae/graph.hpp"
#include "cvgae/metrics.hpp"
#include "cvgae/numeric.hpp"
#include "cvgae/objectives.hpp"
#include "cvgae/refine.hpp"

namespace cvgae {

struct IterationLog {
  enum class Phase { kPretrain, kClustering };
  Phase phase = Phase::kPretrain;
  std::size_t iteration = 0;
  LossBreakdown loss;
  double pretrain_elbo = 0.0;               // pretraining only
  std::size_t theta_size = 0;               // clustering only
  bool refreshed = false;                   // theta / graphs rebuilt this iteration
  std::optional<MetricsRecord> metrics;     // on refresh iterations, when labels exist
  std::optional<LinkAudit> links;           // on refresh iterations, when labels exist
  std::optional<double> lambda_fr;          // needs labels
  std::optional<double> lambda_fd;
  std::vector<double> au_variance;          // per latent unit
  std::size_t active_units = 0;
};

using IterationCallback = std::function<void(const IterationLog&)>;

struct PretrainOutput {
  EncoderParams params;
  AdamState adam;
  std::vector<double> elbo_trace;
  std::string rng_state;
  // Set when the ELBO or its gradient went non-finite; `params` and `adam`
  // then hold the last finite state.
  std::optional<std::string> failure;
  std::size_t iterations = 0;
};

// Number of clusters: cfg.K, or the distinct label count when cfg.K == 0.
std::size_t resolve_cluster_count(const Graph& g, const TrainConfig& cfg);

EncoderParams initial_params(const Graph& g, const TrainConfig& cfg);

// T1 full-batch ascent steps on the pretraining ELBO with A as the target.
// Stops early, without throwing, on a non-finite ELBO or gradient.
PretrainOutput pretrain(const Graph& g, const TrainConfig& cfg,
                        const IterationCallback& on_iteration = {});

struct KMeansResult {
  Dense centers;
  std::vector<int> assignment;
  std::vector<double> inertia_trace;  // after each Lloyd iteration
};

// Lloyd's algorithm from k-means++ seeds.
KMeansResult kmeans(const Dense& data, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100, double rel_tol = 1e-6);

Dense init_centers(const Dense& mu, std::size_t k, std::uint64_t seed);

struct ClusteringOutput {
  EncoderParams params;
  AdamState adam;
  Adjacency a_pos;
  Adjacency a_gen;
  std::vector<NodeId> theta;
  std::size_t iterations = 0;           // gradient steps taken
  bool reached_stop_fraction = false;
  LossBreakdown last_loss;
  std::size_t theta_first = 0;          // |theta| at the first refresh
  std::size_t theta_last = 0;
  std::string rng_state;
};

ClusteringOutput train_clustering(const Graph& g, EncoderParams params, const TrainConfig& cfg,
                                  const IterationCallback& on_iteration = {});

// Final clustering read off the positive-graph encoding.
struct Evaluation {
  Posterior posterior;
  Dense p;
  std::vector<int> predicted;
  std::vector<double> margin;
  std::vector<NodeId> decidable;
  std::optional<MetricsRecord> all;
  std::optional<MetricsRecord> decidable_metrics;
  std::optional<MetricsRecord> undecidable_metrics;
};

Evaluation evaluate_model(const Graph& g, const EncoderParams& params, const Adjacency& a_pos,
                          const TrainConfig& cfg);

}  // namespace cvgae

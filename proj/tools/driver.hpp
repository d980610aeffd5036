#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvgae/checkpoint.hpp"
#include "cvgae/config.hpp"
#include "cvgae/graph.hpp"
#include "cvgae/trainer.hpp"

namespace cvgae::driver {

namespace fs = std::filesystem;
using nlohmann::json;

// Where a graph came from, recorded in the manifest.
struct DataSource {
  std::optional<fs::path> edges;
  std::optional<fs::path> features;
  std::optional<fs::path> labels;
  json generator;  // SBM spec or perturbation record, null otherwise

  json to_json() const;
};

// Resolves --data DIR into edges.txt / features.csv / labels.csv (labels
// only when present).
DataSource data_dir(const fs::path& dir);

Graph load(const DataSource& src);

// A pretrained starting point: either the in-memory result of pretrain() or a
// loaded checkpoint.
struct Pretrained {
  EncoderParams params;
  AdamState adam;
  std::size_t iterations = 0;
  std::string rng_state;
};

Pretrained from_pretrain(PretrainOutput out);
Pretrained from_checkpoint(const Checkpoint& ckpt);

struct TrainRun {
  TrainConfig config;
  std::size_t num_clusters = 0;
  Pretrained start;
  ClusteringOutput clustering;
  Evaluation evaluation;
  std::vector<json> log;  // one fixed-schema object per iteration
};

// Pretrains (unless `start` is given), trains and evaluates. Throws on a
// diverged pretraining run.
TrainRun run_training(const Graph& g, const TrainConfig& cfg,
                      std::optional<Pretrained> start = std::nullopt, bool keep_log = true);

json metrics_json(const std::optional<MetricsRecord>& m);
json loss_json(const LossBreakdown& loss);
json log_record(const IterationLog& log);

// Final metrics per subset, the last LossBreakdown and |theta| endpoints.
// Contains no timings, so identical runs give identical bytes.
json summary_json(const TrainRun& run, const Graph& g);

// The metrics block of summary_json, also produced by `eval`.
json evaluation_json(const Evaluation& ev);

Checkpoint make_checkpoint(const TrainRun& run);
Checkpoint make_checkpoint(const PretrainOutput& pre, const TrainConfig& cfg);

json manifest_json(const std::string& command, const TrainConfig& cfg,
                   const std::vector<std::uint64_t>& seeds, const DataSource& src,
                   const fs::path& out, const std::optional<fs::path>& checkpoint);

// summary.json, metrics.jsonl, embeddings.csv, assignments.csv, model.ckpt.
void write_run(const fs::path& out, const TrainRun& run, const Graph& g);

void write_json(const fs::path& path, const json& j);
void write_jsonl(const fs::path& path, const std::vector<json>& lines);
std::vector<json> read_jsonl(const fs::path& path);

// Per-unit cumulative AU-variance difference (a minus b) over the clustering
// phase of two metrics.jsonl logs, as CSV text: iteration,sum,unit_0,...
std::string au_difference_csv(const std::vector<json>& a, const std::vector<json>& b);

}  // namespace cvgae::driver

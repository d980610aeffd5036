#include "driver.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cvgae/diagnostics.hpp"

namespace cvgae::driver {
namespace {

json path_or_null(const std::optional<fs::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

template <typename T>
json value_or_null(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

void append_number(std::string& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

json links_json(const LinkAudit& a) {
  auto counts = [](const LinkCounts& c) {
    return json{{"true", c.true_links}, {"false", c.false_links}};
  };
  return json{{"current", counts(a.current)}, {"added", counts(a.added)}, {"deleted", counts(a.deleted)}};
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

json DataSource::to_json() const {
  return json{{"edges", path_or_null(edges)},
              {"features", path_or_null(features)},
              {"labels", path_or_null(labels)},
              {"generator", generator}};
}

DataSource data_dir(const fs::path& dir) {
  DataSource src;
  src.edges = dir / "edges.txt";
  src.features = dir / "features.csv";
  for (const auto& p : {*src.edges, *src.features}) {
    if (!fs::exists(p)) throw std::runtime_error("missing file " + p.string());
  }
  if (fs::exists(dir / "labels.csv")) src.labels = dir / "labels.csv";
  return src;
}

Graph load(const DataSource& src) {
  if (!src.edges || !src.features) throw std::runtime_error("no dataset given (use --data or --edges/--features)");
  for (const auto& p : {*src.edges, *src.features}) {
    if (!fs::exists(p)) throw std::runtime_error("missing file " + p.string());
  }
  if (src.labels && !fs::exists(*src.labels)) throw std::runtime_error("missing file " + src.labels->string());
  return load_graph(*src.edges, *src.features, src.labels);
}

Pretrained from_pretrain(PretrainOutput out) {
  Pretrained p;
  p.params = std::move(out.params);
  p.adam = std::move(out.adam);
  p.iterations = out.iterations;
  p.rng_state = std::move(out.rng_state);
  return p;
}

Pretrained from_checkpoint(const Checkpoint& ckpt) {
  Pretrained p;
  p.params = ckpt.params;
  p.params.omega = Dense();  // centers are re-initialized by k-means
  p.adam = ckpt.adam;
  p.iterations = ckpt.pretrain_iterations;
  p.rng_state = ckpt.rng_state;
  return p;
}

TrainRun run_training(const Graph& g, const TrainConfig& cfg, std::optional<Pretrained> start,
                      bool keep_log) {
  cfg.validate();
  TrainRun run;
  run.config = cfg;
  run.num_clusters = resolve_cluster_count(g, cfg);
  IterationCallback sink;
  if (keep_log) sink = [&run](const IterationLog& l) { run.log.push_back(log_record(l)); };

  if (start) {
    run.start = std::move(*start);
  } else {
    PretrainOutput pre = pretrain(g, cfg, sink);
    if (pre.failure) throw NonFiniteError(*pre.failure);
    run.start = from_pretrain(std::move(pre));
  }
  run.clustering = train_clustering(g, run.start.params, cfg, sink);
  run.evaluation = evaluate_model(g, run.clustering.params, run.clustering.a_pos, cfg);
  return run;
}

json metrics_json(const std::optional<MetricsRecord>& m) {
  if (!m) return nullptr;
  return json{{"acc", m->acc},  {"nmi", m->nmi},             {"ari", m->ari},
              {"f1", m->f1},    {"precision", m->precision}, {"purity", m->purity},
              {"count", m->count}};
}

json loss_json(const LossBreakdown& loss) {
  return json{{"l1", loss.l1},
              {"l2", loss.l2},
              {"l3", loss.l3},
              {"total", loss.total},
              {"pretrain_recon", loss.pretrain_recon},
              {"pretrain_kl", loss.pretrain_kl},
              {"theorem1_gap", loss.theorem1_gap},
              {"elbo_clus", loss.elbo_clus}};
}

json log_record(const IterationLog& log) {
  const bool pre = log.phase == IterationLog::Phase::kPretrain;
  json j;
  j["phase"] = pre ? "pretrain" : "clustering";
  j["iteration"] = log.iteration;
  j["loss"] = loss_json(log.loss);
  j["pretrain_elbo"] = pre ? json(log.pretrain_elbo) : json(nullptr);
  j["theta_size"] = pre ? json(nullptr) : json(log.theta_size);
  j["refreshed"] = log.refreshed;
  j["metrics"] = metrics_json(log.metrics);
  j["links"] = log.links ? links_json(*log.links) : json(nullptr);
  j["lambda_fr"] = value_or_null(log.lambda_fr);
  j["lambda_fd"] = value_or_null(log.lambda_fd);
  j["active_units"] = log.active_units;
  j["au_variance"] = log.au_variance;
  return j;
}

json evaluation_json(const Evaluation& ev) {
  return json{{"all", metrics_json(ev.all)},
              {"decidable", metrics_json(ev.decidable_metrics)},
              {"undecidable", metrics_json(ev.undecidable_metrics)}};
}

json summary_json(const TrainRun& run, const Graph& g) {
  const auto& c = run.clustering;
  const double n = static_cast<double>(g.num_nodes());
  json j;
  j["num_nodes"] = g.num_nodes();
  j["num_edges"] = g.adjacency.num_edges();
  j["num_clusters"] = run.num_clusters;
  j["iterations"] = {{"pretrain", run.start.iterations}, {"clustering", c.iterations}};
  j["reached_stop_fraction"] = c.reached_stop_fraction;
  j["theta"] = {{"first", c.theta_first},
                {"last", c.theta_last},
                {"last_fraction", static_cast<double>(c.theta_last) / n},
                {"final_decidable", run.evaluation.decidable.size()}};
  j["positive_graph_edges"] = c.a_pos.num_edges();
  j["loss"] = loss_json(c.last_loss);
  j["metrics"] = evaluation_json(run.evaluation);
  j["config"] = to_json(run.config);
  j["model_hash"] = hex64(run.config.model_hash());
  return j;
}

Checkpoint make_checkpoint(const TrainRun& run) {
  Checkpoint c;
  c.params = run.clustering.params;
  c.adam = run.clustering.adam;
  c.pretrain_iterations = run.start.iterations;
  c.clustering_iterations = run.clustering.iterations;
  c.config_hash = run.config.model_hash();
  c.rng_state = run.clustering.rng_state;
  c.positive_edges = run.clustering.a_pos.edge_list();
  return c;
}

Checkpoint make_checkpoint(const PretrainOutput& pre, const TrainConfig& cfg) {
  Checkpoint c;
  c.params = pre.params;
  c.adam = pre.adam;
  c.pretrain_iterations = pre.iterations;
  c.config_hash = cfg.model_hash();
  c.rng_state = pre.rng_state;
  return c;
}

json manifest_json(const std::string& command, const TrainConfig& cfg,
                   const std::vector<std::uint64_t>& seeds, const DataSource& src,
                   const fs::path& out, const std::optional<fs::path>& checkpoint) {
  json j;
  j["command"] = command;
  j["config"] = to_json(cfg);
  j["seeds"] = seeds;
  j["dataset"] = src.to_json();
  j["from_checkpoint"] = path_or_null(checkpoint);
  j["run_id"] = hex64(fnv1a64(j.dump())).substr(0, 12);
  j["output_dir"] = fs::absolute(out).lexically_normal().string();
  return j;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_jsonl(const fs::path& path, const std::vector<json>& lines) {
  auto out = open_out(path);
  for (const auto& line : lines) out << line.dump() << '\n';
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing file " + path.string());
  std::vector<json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(json::parse(line));
  }
  return lines;
}

void write_run(const fs::path& out, const TrainRun& run, const Graph& g) {
  fs::create_directories(out);
  write_json(out / "summary.json", summary_json(run, g));
  write_jsonl(out / "metrics.jsonl", run.log);

  const auto& ev = run.evaluation;
  std::string text = "node";
  for (std::size_t u = 0; u < ev.posterior.mu.cols(); ++u) text += ",mu_" + std::to_string(u);
  text += '\n';
  for (std::size_t i = 0; i < ev.posterior.mu.rows(); ++i) {
    text += std::to_string(i);
    for (double x : ev.posterior.mu.row(i)) {
      text += ',';
      append_number(text, x);
    }
    text += '\n';
  }
  open_out(out / "embeddings.csv") << text;

  text = "node,cluster,margin\n";
  for (std::size_t i = 0; i < ev.predicted.size(); ++i) {
    text += std::to_string(i) + ',' + std::to_string(ev.predicted[i]) + ',';
    append_number(text, ev.margin[i]);
    text += '\n';
  }
  open_out(out / "assignments.csv") << text;

  save_checkpoint(out / "model.ckpt", make_checkpoint(run));
}

std::string au_difference_csv(const std::vector<json>& a, const std::vector<json>& b) {
  auto series = [](const std::vector<json>& log) {
    std::vector<std::vector<double>> s;
    for (const auto& rec : log) {
      if (rec.at("phase") != "clustering") continue;
      s.push_back(rec.at("au_variance").get<std::vector<double>>());
    }
    return s;
  };
  const auto sa = series(a);
  const auto sb = series(b);
  if (sa.empty() || sb.empty()) throw std::runtime_error("diag: a log has no clustering-phase AU records");
  if (sa.front().size() != sb.front().size()) throw std::runtime_error("diag: runs have different latent sizes");
  const auto diff = cumulative_difference(sa, sb);

  std::string text = "iteration,sum";
  for (std::size_t u = 0; u < sa.front().size(); ++u) text += ",unit_" + std::to_string(u);
  text += '\n';
  for (std::size_t t = 0; t < diff.size(); ++t) {
    double sum = 0.0;
    for (double x : diff[t]) sum += x;
    text += std::to_string(t) + ',';
    append_number(text, sum);
    for (double x : diff[t]) {
      text += ',';
      append_number(text, x);
    }
    text += '\n';
  }
  return text;
}

}  // namespace cvgae::driver

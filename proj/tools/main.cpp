// cvgae: command-line driver for pretraining, clustering, evaluation and
// diagnostics.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cvgae/checkpoint.hpp"
#include "cvgae/config.hpp"
#include "cvgae/graph.hpp"
#include "cvgae/trainer.hpp"
#include "driver.hpp"
#include "gradcheck.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cvgae;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataOpts {
  std::string dir;
  std::string edges;
  std::string features;
  std::string labels;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", dir, "Directory with edges.txt, features.csv and optional labels.csv");
    cmd->add_option("--edges", edges, "Edge list file");
    cmd->add_option("--features", features, "Feature file (dense CSV or #sparse triplets)");
    cmd->add_option("--labels", labels, "Label file (node,label)");
  }

  driver::DataSource source() const {
    driver::DataSource src;
    if (!dir.empty()) src = driver::data_dir(dir);
    if (!edges.empty()) src.edges = edges;
    if (!features.empty()) src.features = features;
    if (!labels.empty()) src.labels = labels;
    return src;
  }
};

struct ConfigOpts {
  std::string path;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  bool no_fr = false;
  bool no_fd = false;
  bool no_pc = false;
  bool no_cl = false;

  void attach(CLI::App* cmd, bool ablations) {
    cmd->add_option("--config", path, "JSON config file (flat TrainConfig keys)");
    seed_opt = cmd->add_option("--seed", seed, "Override the config seed");
    if (ablations) {
      cmd->add_flag("--no-fr", no_fr, "Hard targets for every node");
      cmd->add_flag("--no-fd", no_fd, "Reconstruct A instead of A_gen");
      cmd->add_flag("--no-pc", no_pc, "Drop the KL(pos || neg) term");
      cmd->add_flag("--no-cl", no_cl, "Use the original graph for both views");
    }
  }

  TrainConfig resolve() const {
    TrainConfig cfg = path.empty() ? TrainConfig{} : load_config(path);
    if (seed_opt != nullptr && seed_opt->count() > 0) cfg.seed = seed;
    cfg.no_fr = cfg.no_fr || no_fr;
    cfg.no_fd = cfg.no_fd || no_fd;
    cfg.no_pc = cfg.no_pc || no_pc;
    cfg.no_cl = cfg.no_cl || no_cl;
    cfg.validate();
    return cfg;
  }
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--seeds: '" + item + "' is not a non-negative integer");
    }
  }
  if (seeds.empty()) throw UsageError("--seeds: empty list");
  return seeds;
}

std::optional<driver::Pretrained> load_start(const std::string& path, const Graph& g,
                                             const TrainConfig& cfg) {
  if (path.empty()) return std::nullopt;
  const ModelShape shape{g.feature_dim(), cfg.h, cfg.d, 0};
  return driver::from_checkpoint(load_checkpoint(path, shape, cfg.model_hash()));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Trains one seed into `out` and returns its summary.
json train_one(const Graph& g, const TrainConfig& cfg, const std::string& command,
               const driver::DataSource& src, const fs::path& out, const std::string& checkpoint) {
  const auto t0 = std::chrono::steady_clock::now();
  auto start = load_start(checkpoint, g, cfg);
  const driver::TrainRun run = driver::run_training(g, cfg, std::move(start));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out);
  std::optional<fs::path> ckpt;
  if (!checkpoint.empty()) ckpt = checkpoint;
  driver::write_json(out / "manifest.json", driver::manifest_json(command, cfg, {cfg.seed}, src, out, ckpt));
  driver::write_run(out, run, g);
  driver::write_json(out / "timing.json", json{{"seconds", seconds}});

  json summary = driver::summary_json(run, g);
  std::cerr << "seed " << cfg.seed << ": " << run.clustering.iterations << " clustering iterations, |theta| "
            << run.clustering.theta_last << "/" << g.num_nodes() << ", " << seconds << " s";
  if (run.evaluation.all) {
    std::cerr << ", acc " << run.evaluation.all->acc << " nmi " << run.evaluation.all->nmi << " ari "
              << run.evaluation.all->ari;
  }
  std::cerr << "\n";
  return summary;
}

int cmd_train(const Graph& g, TrainConfig cfg, const std::string& command, const driver::DataSource& src,
              const fs::path& out, const std::string& seeds_text, const std::string& checkpoint) {
  if (seeds_text.empty()) {
    train_one(g, cfg, command, src, out, checkpoint);
    return 0;
  }
  const auto seeds = parse_seeds(seeds_text);
  std::vector<double> acc, nmi, ari;
  json per_seed = json::array();
  for (std::uint64_t s : seeds) {
    cfg.seed = s;
    const json summary = train_one(g, cfg, command, src, out / ("seed_" + std::to_string(s)), checkpoint);
    const json& all = summary["metrics"]["all"];
    per_seed.push_back({{"seed", s}, {"metrics", all}});
    if (!all.is_null()) {
      acc.push_back(all["acc"]);
      nmi.push_back(all["nmi"]);
      ari.push_back(all["ari"]);
    }
  }
  json agg = {{"seeds", seeds}, {"runs", per_seed}};
  if (!acc.empty()) agg["median"] = {{"acc", median(acc)}, {"nmi", median(nmi)}, {"ari", median(ari)}};
  driver::write_json(out / "seeds_summary.json", agg);
  driver::write_json(out / "manifest.json", driver::manifest_json(command, cfg, seeds, src, out,
                                                                  checkpoint.empty() ? std::nullopt
                                                                                     : std::optional<fs::path>(checkpoint)));
  return 0;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) sizes.push_back(std::stoul(item));
  }
  if (sizes.empty()) throw UsageError("--sizes: empty list");
  return sizes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive variational graph auto-encoder for node clustering"};
  app.require_subcommand(1);

  // gen-sbm
  auto* gen = app.add_subcommand("gen-sbm", "Write a labeled stochastic block model graph");
  std::string sizes_text = "50,50,50";
  SbmSpec sbm;
  std::string gen_out;
  gen->add_option("--sizes", sizes_text, "Comma-separated block sizes")->capture_default_str();
  gen->add_option("--p-in", sbm.p_in, "Within-block edge probability")->capture_default_str();
  gen->add_option("--p-out", sbm.p_out, "Between-block edge probability")->capture_default_str();
  gen->add_option("--feat-dim", sbm.feat_dim, "Feature dimension")->capture_default_str();
  gen->add_option("--feat-sep", sbm.feat_sep, "Feature mean offset per block")->capture_default_str();
  gen->add_option("--noise-sd", sbm.noise_sd, "Feature noise standard deviation")->capture_default_str();
  gen->add_option("--seed", sbm.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Pretrain the variational encoder and save a checkpoint");
  DataOpts pre_data;
  ConfigOpts pre_cfg;
  std::string pre_out;
  pre_data.attach(pre);
  pre_cfg.attach(pre, false);
  pre->add_option("--out", pre_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Pretrain (or load) and run clustering training");
  DataOpts train_data;
  ConfigOpts train_cfg;
  std::string train_out, train_seeds, train_ckpt;
  train_data.attach(train);
  train_cfg.attach(train, true);
  train->add_option("--seeds", train_seeds, "Comma-separated seeds, run sequentially into seed_<s>/");
  train->add_option("--from-checkpoint", train_ckpt, "Skip pretraining and start from this checkpoint");
  train->add_option("--out", train_out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Recompute final metrics from a trained checkpoint");
  DataOpts eval_data;
  ConfigOpts eval_cfg;
  std::string eval_ckpt, eval_out;
  eval_data.attach(eval);
  eval_cfg.attach(eval, false);
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint written by train")->required();
  eval->add_option("--out", eval_out, "Write eval.json here instead of stdout only");

  // perturb
  auto* perturb = app.add_subcommand("perturb", "Perturb a graph, then train on it");
  DataOpts pert_data;
  ConfigOpts pert_cfg;
  PerturbSpec pert;
  std::string pert_out, pert_seeds;
  pert_data.attach(perturb);
  pert_cfg.attach(perturb, true);
  perturb->add_option("--edge-add", pert.edge_add_frac, "Fraction of |E| non-edges to add");
  perturb->add_option("--edge-drop", pert.edge_drop_frac, "Fraction of edges to drop");
  perturb->add_option("--feat-drop", pert.feat_drop_frac, "Fraction of feature columns zeroed per node");
  perturb->add_option("--feat-noise", pert.feat_noise_sd, "Gaussian noise sd on kept features");
  perturb->add_option("--seeds", pert_seeds, "Comma-separated training seeds");
  perturb->add_option("--out", pert_out, "Output directory")->required();

  // diag
  auto* diag = app.add_subcommand("diag", "Cumulative per-unit AU difference between two runs");
  std::string diag_a, diag_b, diag_out;
  diag->add_option("--run-a", diag_a, "Run directory (or metrics.jsonl) of the first run")->required();
  diag->add_option("--run-b", diag_b, "Run directory (or metrics.jsonl) of the second run")->required();
  diag->add_option("--out", diag_out, "CSV output path (stdout when omitted)");

  // grad-check
  auto* grad = app.add_subcommand("grad-check", "Finite-difference check of every analytic gradient");
  std::size_t gc_instances = 20;
  std::uint64_t gc_seed = 0;
  double gc_eps = 1e-5;
  double gc_tol = 1e-4;
  grad->add_option("--instances", gc_instances, "Random instances")->capture_default_str();
  grad->add_option("--seed", gc_seed, "Instance seed")->capture_default_str();
  grad->add_option("--eps", gc_eps, "Central-difference step")->capture_default_str();
  grad->add_option("--tol", gc_tol, "Maximum relative error")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      sbm.sizes = parse_sizes(sizes_text);
      const Graph g = generate_sbm(sbm);
      fs::create_directories(gen_out);
      const fs::path out(gen_out);
      save_graph(g, out / "edges.txt", out / "features.csv", out / "labels.csv");
      std::cerr << "wrote " << g.num_nodes() << " nodes, " << g.adjacency.num_edges() << " edges to " << gen_out
                << "\n";
      return 0;
    }
    if (*pre) {
      const TrainConfig cfg = pre_cfg.resolve();
      const auto src = pre_data.source();
      const Graph g = driver::load(src);
      const fs::path out(pre_out);
      fs::create_directories(out);
      std::vector<json> log;
      const PretrainOutput result =
          pretrain(g, cfg, [&log](const IterationLog& l) { log.push_back(driver::log_record(l)); });
      driver::write_json(out / "manifest.json", driver::manifest_json("pretrain", cfg, {cfg.seed}, src, out, {}));
      driver::write_jsonl(out / "metrics.jsonl", log);
      save_checkpoint(out / "pretrain.ckpt", driver::make_checkpoint(result, cfg));
      if (result.failure) {
        std::cerr << "error: " << *result.failure << " (last finite state saved to "
                  << (out / "pretrain.ckpt").string() << ")\n";
        return 1;
      }
      std::cerr << "pretrained " << result.iterations << " iterations, final ELBO "
                << (result.elbo_trace.empty() ? 0.0 : result.elbo_trace.back()) << "\n";
      return 0;
    }
    if (*train) {
      const TrainConfig cfg = train_cfg.resolve();
      const auto src = train_data.source();
      const Graph g = driver::load(src);
      return cmd_train(g, cfg, "train", src, train_out, train_seeds, train_ckpt);
    }
    if (*eval) {
      const TrainConfig cfg = eval_cfg.resolve();
      const auto src = eval_data.source();
      const Graph g = driver::load(src);
      if (!g.labels) throw UsageError("eval needs ground-truth labels (--labels or labels.csv)");
      const std::size_t k = resolve_cluster_count(g, cfg);
      const Checkpoint ckpt =
          load_checkpoint(eval_ckpt, ModelShape{g.feature_dim(), cfg.h, cfg.d, k}, cfg.model_hash());
      if (ckpt.params.omega.rows() == 0) throw UsageError("eval needs a trained checkpoint, not a pretraining one");
      const Adjacency a_pos = Adjacency::from_edges(g.num_nodes(), ckpt.positive_edges);
      const Evaluation ev = evaluate_model(g, ckpt.params, a_pos, cfg);
      const json result = driver::evaluation_json(ev);
      if (!eval_out.empty()) {
        fs::create_directories(eval_out);
        driver::write_json(fs::path(eval_out) / "eval.json", result);
      }
      std::cout << result.dump(2) << "\n";
      return 0;
    }
    if (*perturb) {
      TrainConfig cfg = pert_cfg.resolve();
      auto src = pert_data.source();
      const Graph original = driver::load(src);
      pert.seed = cfg.seed;
      const Graph g = perturb_graph(original, pert);
      const fs::path out(pert_out);
      const fs::path graph_dir = out / "graph";
      fs::create_directories(graph_dir);
      save_graph(g, graph_dir / "edges.txt", graph_dir / "features.csv",
                 g.labels ? std::optional<fs::path>(graph_dir / "labels.csv") : std::nullopt);
      src.generator = {{"perturbation",
                        {{"edge_add", pert.edge_add_frac},
                         {"edge_drop", pert.edge_drop_frac},
                         {"feat_drop", pert.feat_drop_frac},
                         {"feat_noise", pert.feat_noise_sd},
                         {"seed", pert.seed}}}};
      return cmd_train(g, cfg, "perturb", src, out, pert_seeds, "");
    }
    if (*diag) {
      auto log_path = [](const std::string& p) {
        return fs::is_directory(p) ? fs::path(p) / "metrics.jsonl" : fs::path(p);
      };
      const std::string csv =
          driver::au_difference_csv(driver::read_jsonl(log_path(diag_a)), driver::read_jsonl(log_path(diag_b)));
      if (diag_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream(diag_out) << csv;
      }
      return 0;
    }
    if (*grad) {
      const auto report = driver::run_grad_check(gc_instances, gc_seed, gc_eps);
      json j = {{"instances", report.instances}, {"retries", report.retries}, {"eps", gc_eps},
                {"max_relative_error", report.max_error}};
      std::cout << j.dump(2) << "\n";
      return report.worst() <= gc_tol ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

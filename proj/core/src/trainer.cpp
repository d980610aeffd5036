#include "cvgae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cvgae/diagnostics.hpp"

namespace cvgae {
namespace {

std::vector<ParamRef> param_refs(EncoderParams& params, const EncoderParams& grads) {
  return {{kTensorNames[0], &params.w1, &grads.w1},
          {kTensorNames[1], &params.w2_mu, &grads.w2_mu},
          {kTensorNames[2], &params.w2_sigma, &grads.w2_sigma},
          {kTensorNames[3], &params.omega, &grads.omega}};
}

AdamState fresh_adam(const EncoderParams& params, double lr, const TrainConfig& cfg) {
  const auto tensors = params.tensors();
  return AdamState::fresh(AdamConfig{lr, cfg.beta1, cfg.beta2, cfg.adam_eps}, tensors);
}

// One-hot targets from ground truth, expressed in cluster indices through
// the accuracy-optimal matching. Classes without a matched cluster keep the
// model's soft row.
Dense supervised_targets(const Dense& p, std::span<const int> predicted,
                         std::span<const int> labels) {
  const auto table = contingency(predicted, labels);
  const auto mapping = best_cluster_mapping(table);
  std::vector<int> class_to_cluster(table.class_values.size(), -1);
  for (std::size_t c = 0; c < mapping.size(); ++c) {
    if (mapping[c] >= 0) class_to_cluster[static_cast<std::size_t>(mapping[c])] = table.cluster_values[c];
  }
  Dense q = p;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto cls = static_cast<std::size_t>(
        std::lower_bound(table.class_values.begin(), table.class_values.end(), labels[i]) -
        table.class_values.begin());
    const int cluster = class_to_cluster[cls];
    if (cluster < 0 || static_cast<std::size_t>(cluster) >= p.cols()) continue;
    auto row = q.row(i);
    std::fill(row.begin(), row.end(), 0.0);
    row[static_cast<std::size_t>(cluster)] = 1.0;
  }
  return q;
}

std::optional<MetricsRecord> subset_metrics(std::span<const int> predicted,
                                            std::span<const int> labels,
                                            std::span<const NodeId> nodes, NmiNormalization norm) {
  if (nodes.empty()) return std::nullopt;
  std::vector<int> p, t;
  for (NodeId i : nodes) {
    p.push_back(predicted[i]);
    t.push_back(labels[i]);
  }
  return clustering_metrics(p, t, norm);
}

}  // namespace

std::size_t resolve_cluster_count(const Graph& g, const TrainConfig& cfg) {
  if (cfg.K != 0) return cfg.K;
  if (!g.labels) throw ConfigError("config key 'K': must be set when the graph has no labels");
  const std::set<int> distinct(g.labels->begin(), g.labels->end());
  if (distinct.size() < 2) throw ConfigError("config key 'K': labels contain fewer than 2 classes");
  return distinct.size();
}

EncoderParams initial_params(const Graph& g, const TrainConfig& cfg) {
  auto rng = rng_stream(cfg.seed, Stream::kWeightInit);
  return EncoderParams::glorot(g.feature_dim(), cfg.h, cfg.d, rng);
}

PretrainOutput pretrain(const Graph& g, const TrainConfig& cfg,
                        const IterationCallback& on_iteration) {
  cfg.validate();
  PretrainOutput out;
  out.params = initial_params(g, cfg);
  out.adam = fresh_adam(out.params, cfg.lr_pre, cfg);
  const auto prop = normalize_adjacency(g.adjacency);
  const double scale = cfg.resolved_scale(g.num_nodes());
  auto rng = rng_stream(cfg.seed, Stream::kReparameterization);

  for (std::size_t t = 0; t < cfg.T1; ++t) {
    const Encoding enc = encode(out.params, prop, g.features);
    auto noise = draw_noise(g.num_nodes(), cfg.d, cfg.L, rng);
    PretrainResult r;
    try {
      r = pretrain_objective(out.params, g.features, prop, enc, g.adjacency, std::move(noise),
                             cfg.include_self_pairs, cfg.kl_weight);
    } catch (const NonFiniteError& e) {
      out.failure = std::string(e.what()) + " at iteration " + std::to_string(t);
      break;
    }
    if (!std::isfinite(r.elbo.elbo)) {
      out.failure = "pretrain: non-finite ELBO at iteration " + std::to_string(t);
      break;
    }
    out.elbo_trace.push_back(r.elbo.elbo);
    if (on_iteration) {
      IterationLog log;
      log.phase = IterationLog::Phase::kPretrain;
      log.iteration = t;
      log.loss.pretrain_recon = r.elbo.recon;
      log.loss.pretrain_kl = r.elbo.kl;
      log.pretrain_elbo = r.elbo.elbo;
      if (cfg.diagnostics) {
        const auto au = active_units(enc.posterior.mu, cfg.au_delta);
        log.au_variance = au.variance;
        log.active_units = au.count();
      }
      on_iteration(log);
    }
    r.grad *= scale;
    try {
      adam_step(param_refs(out.params, r.grad), out.adam);
    } catch (const NonFiniteError& e) {
      out.failure = std::string(e.what()) + " at iteration " + std::to_string(t);
      break;
    }
    ++out.iterations;
  }
  out.rng_state = rng.serialize();
  return out;
}

KMeansResult kmeans(const Dense& data, std::size_t k, std::uint64_t seed, std::size_t max_iters,
                    double rel_tol) {
  const std::size_t n = data.rows();
  if (k == 0 || k > n) {
    throw std::invalid_argument("kmeans: K=" + std::to_string(k) + " but only " +
                                std::to_string(n) + " points");
  }
  auto rng = rng_stream(seed, Stream::kKMeans);
  KMeansResult r;
  r.centers = Dense(k, data.cols());

  // k-means++ seeding.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(data.row(pick).begin(), data.row(pick).end(), r.centers.row(c).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(data.row(i), r.centers.row(c)));
      total += nearest[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = rng.below(n);
      continue;
    }
    double target = rng.uniform() * total;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= nearest[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
  }

  r.assignment.assign(n, 0);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = squared_distance(data.row(i), r.centers.row(c));
        if (dist < best) {
          best = dist;
          r.assignment[i] = static_cast<int>(c);
        }
      }
    }
    Dense sums(k, data.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.assignment[i]);
      ++counts[c];
      auto dst = sums.row(c);
      auto src = data.row(i);
      for (std::size_t u = 0; u < dst.size(); ++u) dst[u] += src[u];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its center
      auto dst = r.centers.row(c);
      auto src = sums.row(c);
      for (std::size_t u = 0; u < dst.size(); ++u) dst[u] = src[u] / static_cast<double>(counts[c]);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += squared_distance(data.row(i), r.centers.row(static_cast<std::size_t>(r.assignment[i])));
    }
    r.inertia_trace.push_back(inertia);
    if (std::isfinite(previous) && std::abs(previous - inertia) <= rel_tol * std::max(previous, 1e-300)) {
      break;
    }
    previous = inertia;
  }
  return r;
}

Dense init_centers(const Dense& mu, std::size_t k, std::uint64_t seed) {
  return kmeans(mu, k, seed).centers;
}

ClusteringOutput train_clustering(const Graph& g, EncoderParams params, const TrainConfig& cfg,
                                  const IterationCallback& on_iteration) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  const std::size_t k = resolve_cluster_count(g, cfg);
  const auto norm = parse_nmi_normalization(cfg.nmi_norm);
  const double scale = cfg.resolved_scale(n);
  const Adjacency& a = g.adjacency;
  const auto prop_neg = normalize_adjacency(a);

  {
    const Encoding enc = encode(params, prop_neg, g.features);
    params.omega = kmeans(enc.posterior.mu, k, cfg.seed, cfg.kmeans_iters, cfg.kmeans_tol).centers;
  }

  ClusteringOutput out;
  out.a_pos = a;
  out.a_gen = a;
  auto prop_pos = prop_neg;
  AdamState adam = fresh_adam(params, cfg.lr_clus, cfg);
  auto rng = rng_stream(cfg.seed, Stream::kClusteringNoise);
  const ObjectiveOptions options{cfg.include_self_pairs, cfg.l3_full_gradient, cfg.no_pc, cfg.kl_weight};
  const RefineOptions refine{cfg.refine_all_members};
  const auto stop_size = static_cast<double>(n) * cfg.stop_fraction;
  bool first_refresh = true;

  for (std::size_t m = 0; m < cfg.max_clus_iters; ++m) {
    Encoding pos = encode(params, prop_pos, g.features);
    Dense p = soft_assignments(pos.posterior.mu, params.omega);

    IterationLog log;
    log.phase = IterationLog::Phase::kClustering;
    log.iteration = m;

    if (m % cfg.M == 0) {
      const auto margins = confidence_margins(p, cfg.alpha);
      out.theta = margins.reliable;
      const auto predicted = argmax_rows(p);
      const auto centroids = centroid_nodes(pos.posterior.mu, params.omega, predicted, out.theta);
      out.a_pos = cfg.no_cl ? a : build_positive_graph(a, predicted, out.theta, centroids, refine);
      out.a_gen = cfg.no_fd ? a : build_generative_graph(a, predicted, out.theta, centroids, refine);
      prop_pos = normalize_adjacency(out.a_pos);
      if (first_refresh) out.theta_first = out.theta.size();
      first_refresh = false;
      out.theta_last = out.theta.size();
      log.refreshed = true;
      if (g.labels) {
        log.metrics = clustering_metrics(predicted, *g.labels, norm);
        log.links = audit_links(a, out.a_pos, *g.labels);
      }
      if (static_cast<double>(out.theta.size()) >= stop_size) {
        out.reached_stop_fraction = true;
        break;
      }
      pos = encode(params, prop_pos, g.features);
      p = soft_assignments(pos.posterior.mu, params.omega);
    }
    log.theta_size = out.theta.size();

    const auto margins = confidence_margins(p, cfg.alpha);
    const Dense q = target_assignments(p, margins.first, margins.second, cfg.alpha, cfg.no_fr);
    const Encoding neg = cfg.no_cl ? pos : encode(params, prop_neg, g.features);
    auto noise = draw_noise(n, cfg.d, cfg.L, rng);
    std::vector<Dense> noise_copy;
    if (cfg.diagnostics && g.labels) noise_copy = noise;

    ObjectiveResult r = cvgae_objective(params, g.features, prop_pos, pos, prop_neg, neg,
                                        out.a_gen, q, std::move(noise), options);
    if (!std::isfinite(r.loss.total)) {
      throw NonFiniteError("train_clustering: non-finite objective at iteration " + std::to_string(m));
    }
    out.last_loss = r.loss;
    log.loss = r.loss;

    if (cfg.diagnostics) {
      log.lambda_fd = lambda_fd(r.grad_mu_l2, r.grad_mu_l1);
      if (g.labels) {
        const auto samples = latent_from_noise(pos.posterior, std::move(noise_copy));
        const Dense q_sup = supervised_targets(p, argmax_rows(p), *g.labels);
        log.lambda_fr = lambda_fr(r.grad_mu_l2, l2_gradient_wrt_mu(samples, q_sup, params.omega));
      }
      const auto au = active_units(pos.posterior.mu, cfg.au_delta);
      log.au_variance = au.variance;
      log.active_units = au.count();
    }
    if (on_iteration) on_iteration(log);

    r.grad *= scale;
    adam_step(param_refs(params, r.grad), adam);
    ++out.iterations;
  }

  out.params = std::move(params);
  out.adam = std::move(adam);
  out.rng_state = rng.serialize();
  return out;
}

Evaluation evaluate_model(const Graph& g, const EncoderParams& params, const Adjacency& a_pos,
                          const TrainConfig& cfg) {
  Evaluation ev;
  ev.posterior = encode_posterior(params, normalize_adjacency(a_pos), g.features);
  ev.p = soft_assignments(ev.posterior.mu, params.omega);
  ev.predicted = argmax_rows(ev.p);
  const auto margins = confidence_margins(ev.p, cfg.alpha);
  ev.margin.resize(g.num_nodes());
  for (std::size_t i = 0; i < ev.margin.size(); ++i) ev.margin[i] = margins.first[i] - margins.second[i];
  ev.decidable = margins.reliable;
  if (g.labels) {
    const auto norm = parse_nmi_normalization(cfg.nmi_norm);
    ev.all = clustering_metrics(ev.predicted, *g.labels, norm);
    std::vector<char> in(g.num_nodes(), 0);
    for (NodeId i : ev.decidable) in[i] = 1;
    std::vector<NodeId> undecidable;
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      if (!in[i]) undecidable.push_back(i);
    }
    ev.decidable_metrics = subset_metrics(ev.predicted, *g.labels, ev.decidable, norm);
    ev.undecidable_metrics = subset_metrics(ev.predicted, *g.labels, undecidable, norm);
  }
  return ev;
}

}  // namespace cvgae

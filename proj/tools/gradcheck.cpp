#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cvgae/objectives.hpp"

namespace cvgae::driver {
namespace {

std::size_t draw_in(RngStream& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

Adjacency random_graph(std::size_t n, double p, RngStream& rng) {
  EdgeList edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }
  return Adjacency::from_edges(n, edges);
}

// Keeps each edge of `a` with probability keep, adds each non-edge with
// probability add.
Adjacency rewire(const Adjacency& a, double keep, double add, RngStream& rng) {
  const std::size_t n = a.num_nodes();
  EdgeList edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (a.has_edge(u, v) ? rng.bernoulli(keep) : rng.bernoulli(add)) edges.emplace_back(u, v);
    }
  }
  return Adjacency::from_edges(n, edges);
}

double min_abs(const Dense& m) {
  double best = std::numeric_limits<double>::infinity();
  for (double x : m.values()) best = std::min(best, std::abs(x));
  return best;
}

struct Objective {
  std::string name;
  std::function<double(const EncoderParams&)> value;
  std::function<EncoderParams(const EncoderParams&)> grad;
};

// Borrowed views of one instance; outlives every Objective built from it.
struct Context {
  const GradInstance* inst;
  const PropagationMatrix* prop_a;
  const PropagationMatrix* prop_pos;
  const Encoding* neg_fixed;

  const Dense& x() const { return inst->features; }
  Encoding pos(const EncoderParams& p) const { return encode(p, *prop_pos, x()); }
  Encoding neg(const EncoderParams& p) const { return encode(p, *prop_a, x()); }
  LatentSamples samples(const EncoderParams& p) const {
    return latent_from_noise(pos(p).posterior, inst->noise);
  }
  // Chains per-sample latent gradients through the positive encoder.
  void through_pos(const EncoderParams& p, const std::vector<Dense>& dz, EncoderParams& g) const {
    const Encoding enc = pos(p);
    const LatentSamples s = latent_from_noise(enc.posterior, inst->noise);
    PosteriorGrad up = PosteriorGrad::zeros_like(enc.posterior);
    samples_backward(enc.posterior, s, dz, up);
    encoder_backward(p, *prop_pos, x(), enc, up, g);
  }
  ObjectiveResult combined(const EncoderParams& p, const ObjectiveOptions& opt, bool refresh_neg) const {
    const Encoding n = refresh_neg ? neg(p) : *neg_fixed;
    return cvgae_objective(p, x(), *prop_pos, pos(p), *prop_a, n, inst->a_gen, inst->q, inst->noise, opt);
  }
};

Objective combined_objective(std::string name, Context c, ObjectiveOptions opt, bool refresh_neg) {
  return {std::move(name),
          [c, opt, refresh_neg](const EncoderParams& p) { return c.combined(p, opt, refresh_neg).loss.total; },
          [c, opt, refresh_neg](const EncoderParams& p) { return c.combined(p, opt, refresh_neg).grad; }};
}

std::vector<Objective> objectives(Context c) {
  std::vector<Objective> out;
  out.push_back({"elbo_pre",
                 [c](const EncoderParams& p) {
                   const Posterior post = c.neg(p).posterior;
                   return elbo_pretrain(post, latent_from_noise(post, c.inst->noise), c.inst->a).elbo;
                 },
                 [c](const EncoderParams& p) {
                   return pretrain_objective(p, c.x(), *c.prop_a, c.neg(p), c.inst->a, c.inst->noise).grad;
                 }});
  out.push_back({"l1",
                 [c](const EncoderParams& p) { return loss_l1(c.samples(p), c.inst->a_gen); },
                 [c](const EncoderParams& p) {
                   std::vector<Dense> dz;
                   loss_l1(c.samples(p), c.inst->a_gen, true, &dz);
                   EncoderParams g = EncoderParams::zeros_like(p);
                   c.through_pos(p, dz, g);
                   return g;
                 }});
  out.push_back({"l2",
                 [c](const EncoderParams& p) { return loss_l2(c.samples(p), c.inst->q, p.omega); },
                 [c](const EncoderParams& p) {
                   std::vector<Dense> dz;
                   EncoderParams g = EncoderParams::zeros_like(p);
                   loss_l2(c.samples(p), c.inst->q, p.omega, &dz, &g.omega);
                   c.through_pos(p, dz, g);
                   return g;
                 }});
  out.push_back({"l3",
                 [c](const EncoderParams& p) { return loss_l3(c.pos(p).posterior, c.neg_fixed->posterior); },
                 [c](const EncoderParams& p) {
                   const Encoding enc = c.pos(p);
                   PosteriorGrad up = PosteriorGrad::zeros_like(enc.posterior);
                   loss_l3(enc.posterior, c.neg_fixed->posterior, &up);
                   EncoderParams g = EncoderParams::zeros_like(p);
                   encoder_backward(p, *c.prop_pos, c.x(), enc, up, g);
                   return g;
                 }});
  out.push_back({"l3_full",
                 [c](const EncoderParams& p) { return loss_l3(c.pos(p).posterior, c.neg(p).posterior); },
                 [c](const EncoderParams& p) {
                   const Encoding pos = c.pos(p);
                   const Encoding neg = c.neg(p);
                   PosteriorGrad gp = PosteriorGrad::zeros_like(pos.posterior);
                   PosteriorGrad gn = PosteriorGrad::zeros_like(neg.posterior);
                   loss_l3(pos.posterior, neg.posterior, &gp, &gn);
                   EncoderParams g = EncoderParams::zeros_like(p);
                   encoder_backward(p, *c.prop_pos, c.x(), pos, gp, g);
                   encoder_backward(p, *c.prop_a, c.x(), neg, gn, g);
                   return g;
                 }});
  out.push_back(combined_objective("total", c, ObjectiveOptions{}, false));
  ObjectiveOptions full;
  full.l3_full_gradient = true;
  out.push_back(combined_objective("total_full_gradient", c, full, true));
  ObjectiveOptions no_pc;
  no_pc.drop_contrastive = true;
  out.push_back(combined_objective("total_no_pc", c, no_pc, false));
  ObjectiveOptions weighted;
  weighted.kl_weight = 0.7;
  out.push_back(combined_objective("total_kl_weight", c, weighted, false));
  return out;
}

}  // namespace

GradInstance random_grad_instance(RngStream& rng, const GradInstanceLimits& limits, double margin,
                                  std::size_t* retries) {
  for (;;) {
    GradInstance inst;
    const std::size_t n = draw_in(rng, 4, limits.max_nodes);
    const std::size_t j = draw_in(rng, 2, limits.max_features);
    const std::size_t h = draw_in(rng, 2, limits.max_hidden);
    const std::size_t d = draw_in(rng, 2, limits.max_latent);
    const std::size_t k = draw_in(rng, 2, limits.max_clusters);
    const std::size_t l = draw_in(rng, 1, limits.max_samples);

    inst.a = random_graph(n, 0.35, rng);
    inst.a_pos = rewire(inst.a, 0.8, 0.1, rng);
    inst.a_gen = rewire(inst.a, 1.0, 0.1, rng);
    inst.features = Dense(n, j);
    for (double& v : inst.features.values()) v = rng.normal();
    inst.params = EncoderParams::glorot(j, h, d, rng);
    inst.params.omega = Dense(k, d);
    for (double& v : inst.params.omega.values()) v = rng.normal();
    inst.q = Dense(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = inst.q.row(i);
      if (rng.bernoulli(0.5)) {
        row[rng.below(k)] = 1.0;
      } else {
        double total = 0.0;
        for (double& v : row) total += (v = rng.uniform(0.05, 1.0));
        for (double& v : row) v /= total;
      }
    }
    inst.noise = draw_noise(n, d, l, rng);

    const double closest =
        std::min(min_abs(encode(inst.params, normalize_adjacency(inst.a), inst.features).pre_hidden),
                 min_abs(encode(inst.params, normalize_adjacency(inst.a_pos), inst.features).pre_hidden));
    if (closest >= margin) return inst;
    if (retries != nullptr) ++*retries;
  }
}

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& [name, err] : max_error) w = std::max(w, err);
  return w;
}

GradCheckReport run_grad_check(std::size_t instances, std::uint64_t seed, double eps,
                               const GradInstanceLimits& limits) {
  GradCheckReport report;
  auto rng = rng_stream(seed, Stream::kTestData);
  for (std::size_t t = 0; t < instances; ++t) {
    const GradInstance inst = random_grad_instance(rng, limits, 1e-3, &report.retries);
    const auto prop_a = normalize_adjacency(inst.a);
    const auto prop_pos = normalize_adjacency(inst.a_pos);
    const Encoding neg_fixed = encode(inst.params, prop_a, inst.features);

    for (const Objective& obj : objectives(Context{&inst, &prop_a, &prop_pos, &neg_fixed})) {
      const EncoderParams analytic = obj.grad(inst.params);
      const auto grads = analytic.tensors();
      double worst = 0.0;
      for (std::size_t k = 0; k < grads.size(); ++k) {
        auto f = [&](const Dense& point) {
          EncoderParams p = inst.params;
          *p.tensors()[k] = point;
          return obj.value(p);
        };
        worst = std::max(worst, finite_diff_check(f, *inst.params.tensors()[k], *grads[k], eps));
      }
      double& slot = report.max_error[obj.name];
      slot = std::max(slot, worst);
    }
    ++report.instances;
  }
  return report;
}

}  // namespace cvgae::driver

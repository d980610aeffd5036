#include "cvgae/objectives.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace cvgae {

Dense soft_assignments(const Dense& z, const Dense& omega) {
  if (z.cols() != omega.cols()) throw DimensionError("soft_assignments: latent dims differ");
  if (omega.rows() < 2) throw std::invalid_argument("soft_assignments: need K >= 2 centers");
  Dense p(z.rows(), omega.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = p.row(i);
    double total = 0.0;
    for (std::size_t j = 0; j < omega.rows(); ++j) {
      row[j] = 1.0 / (1.0 + squared_distance(z.row(i), omega.row(j)));
      total += row[j];
    }
    for (double& x : row) x /= total;
  }
  return p;
}

Margins confidence_margins(const Dense& p, double alpha) {
  Margins m;
  m.first.resize(p.rows());
  m.second.resize(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double best = -1.0;
    double runner_up = -1.0;
    for (double x : p.row(i)) {
      if (x > best) {
        runner_up = best;
        best = x;
      } else if (x > runner_up) {
        runner_up = x;
      }
    }
    m.first[i] = best;
    m.second[i] = runner_up;
    if (best - runner_up >= alpha) m.reliable.push_back(static_cast<NodeId>(i));
  }
  return m;
}

std::vector<int> argmax_rows(const Dense& p) {
  std::vector<int> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto row = p.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Dense target_assignments(const Dense& p, std::span<const double> first,
                         std::span<const double> second, double alpha, bool hard_all) {
  if (first.size() != p.rows() || second.size() != p.rows()) {
    throw DimensionError("target_assignments: margin vectors do not match P");
  }
  Dense q = p;
  const auto winners = argmax_rows(p);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    if (hard_all || first[i] - second[i] >= alpha) {
      auto row = q.row(i);
      std::fill(row.begin(), row.end(), 0.0);
      row[static_cast<std::size_t>(winners[i])] = 1.0;
    }
  }
  return q;
}

ClusterState ClusterState::from_assignments(Dense p, double alpha, bool hard_all) {
  ClusterState s;
  auto margins = confidence_margins(p, alpha);
  s.q = target_assignments(p, margins.first, margins.second, alpha, hard_all);
  s.p = std::move(p);
  s.lambda1 = std::move(margins.first);
  s.lambda2 = std::move(margins.second);
  s.theta = std::move(margins.reliable);
  s.alpha = alpha;
  return s;
}

double reconstruction_loglik(const LatentSamples& samples, const Adjacency& target,
                             bool include_self_pairs, std::vector<Dense>* dz) {
  const std::size_t L = samples.count();
  if (L == 0) throw std::invalid_argument("reconstruction_loglik: no samples");
  const std::size_t n = samples.z.front().rows();
  const std::size_t d = samples.z.front().cols();
  if (target.num_nodes() != n) throw DimensionError("reconstruction_loglik: node count mismatch");
  if (dz != nullptr) {
    dz->assign(L, Dense(n, d));
  }
  const double weight = 1.0 / static_cast<double>(L * L);
  std::vector<char> is_edge(n, 0);
  double total = 0.0;
  for (std::size_t l1 = 0; l1 < L; ++l1) {
    const Dense& za = samples.z[l1];
    for (std::size_t l2 = 0; l2 < L; ++l2) {
      const Dense& zb = samples.z[l2];
      for (NodeId i = 0; i < n; ++i) {
        for (NodeId j : target.neighbors(i)) is_edge[j] = 1;
        is_edge[i] = 1;
        const auto zi = za.row(i);
        double row_total = 0.0;
        for (NodeId j = 0; j < n; ++j) {
          if (j == i && !include_self_pairs) continue;
          const auto zj = zb.row(j);
          const double x = dot(zi, zj);
          const double e = std::exp(-std::abs(x));
          const double a = is_edge[j] ? 1.0 : 0.0;
          // a * x - softplus(x)
          row_total += a * x - (std::max(x, 0.0) + std::log1p(e));
          if (dz != nullptr) {
            const double sig = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
            const double g = weight * (a - sig);
            auto gi = (*dz)[l1].row(i);
            auto gj = (*dz)[l2].row(j);
            for (std::size_t c = 0; c < d; ++c) {
              gi[c] += g * zj[c];
              gj[c] += g * zi[c];
            }
          }
        }
        total += row_total;
        for (NodeId j : target.neighbors(i)) is_edge[j] = 0;
        is_edge[i] = 0;
      }
    }
  }
  return weight * total;
}

double kl_to_prior(const Posterior& post, PosteriorGrad* grad) {
  const auto mu = post.mu.values();
  const auto lv = post.logvar.values();
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double var = std::exp(lv[i]);
    total += mu[i] * mu[i] + var - lv[i] - 1.0;
    if (grad != nullptr) {
      grad->mu.values()[i] += mu[i];
      grad->logvar.values()[i] += 0.5 * (var - 1.0);
    }
  }
  return 0.5 * total;
}

double kl_between(const Posterior& a, const Posterior& b) {
  if (!a.mu.same_shape(b.mu)) throw DimensionError("kl_between: shape mismatch");
  const auto ma = a.mu.values();
  const auto la = a.logvar.values();
  const auto mb = b.mu.values();
  const auto lb = b.logvar.values();
  double total = 0.0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double diff = ma[i] - mb[i];
    // expm1(t) - t >= 0 term by term, so the sum never dips below zero
    const double t = la[i] - lb[i];
    total += std::max(0.0, std::expm1(t) - t) + diff * diff * std::exp(-lb[i]);
  }
  return 0.5 * total;
}

PretrainElbo elbo_pretrain(const Posterior& post, const LatentSamples& samples,
                           const Adjacency& target, bool include_self_pairs,
                           std::optional<double> kl_weight, PosteriorGrad* grad) {
  const double n = static_cast<double>(post.mu.rows());
  const double w = kl_weight.value_or(2.0 * n);
  PretrainElbo out;
  std::vector<Dense> dz;
  out.recon = reconstruction_loglik(samples, target, include_self_pairs,
                                    grad != nullptr ? &dz : nullptr);
  if (grad != nullptr) {
    samples_backward(post, samples, dz, *grad);
    PosteriorGrad kl_grad = PosteriorGrad::zeros_like(post);
    out.kl = kl_to_prior(post, &kl_grad);
    kl_grad.mu *= -w;
    kl_grad.logvar *= -w;
    *grad += kl_grad;
  } else {
    out.kl = kl_to_prior(post);
  }
  out.elbo = out.recon - w * out.kl;
  return out;
}

double loss_l1(const LatentSamples& samples, const Adjacency& a_gen, bool include_self_pairs,
               std::vector<Dense>* dz) {
  return reconstruction_loglik(samples, a_gen, include_self_pairs, dz);
}

double loss_l2(const LatentSamples& samples, const Dense& q, const Dense& omega,
               std::vector<Dense>* dz, Dense* domega) {
  const std::size_t L = samples.count();
  if (L == 0) throw std::invalid_argument("loss_l2: no samples");
  const std::size_t n = q.rows();
  const std::size_t k = omega.rows();
  const std::size_t d = omega.cols();
  if (q.cols() != k || samples.z.front().rows() != n || samples.z.front().cols() != d) {
    throw DimensionError("loss_l2: shape mismatch");
  }
  const double coef = 2.0 * static_cast<double>(n) / static_cast<double>(L);
  if (dz != nullptr) dz->assign(L, Dense(n, d));
  if (domega != nullptr && !domega->same_shape(omega)) *domega = Dense(k, d);
  std::vector<double> kern(k);
  double total = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const Dense& z = samples.z[l];
    for (std::size_t i = 0; i < n; ++i) {
      const auto zi = z.row(i);
      double norm = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        kern[j] = 1.0 / (1.0 + squared_distance(zi, omega.row(j)));
        norm += kern[j];
      }
      for (std::size_t j = 0; j < k; ++j) {
        const double qij = q(i, j);
        if (qij == 0.0) continue;
        const double pij = kern[j] / norm;
        assert(pij > 0.0);
        total += qij * (std::log(qij) - std::log(pij));
      }
      if (dz == nullptr && domega == nullptr) continue;
      for (std::size_t j = 0; j < k; ++j) {
        const double pij = kern[j] / norm;
        // d log p_ij / d z_i summed against q gives (q - p) * (-2 k (z - omega)).
        const double s = coef * (q(i, j) - pij) * 2.0 * kern[j];
        const auto om = omega.row(j);
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = zi[c] - om[c];
          if (dz != nullptr) (*dz)[l](i, c) -= s * diff;
          if (domega != nullptr) (*domega)(j, c) += s * diff;
        }
      }
    }
  }
  return -coef * total;
}

double loss_l3(const Posterior& pos, const Posterior& neg, PosteriorGrad* dpos,
               PosteriorGrad* dneg) {
  if (!pos.mu.same_shape(neg.mu) || !pos.logvar.same_shape(neg.logvar)) {
    throw DimensionError("loss_l3: posterior shapes differ");
  }
  const double n = static_cast<double>(pos.mu.rows());
  const auto mp = pos.mu.values();
  const auto lp = pos.logvar.values();
  const auto mn = neg.mu.values();
  const auto ln = neg.logvar.values();
  double total = 0.0;
  for (std::size_t i = 0; i < mp.size(); ++i) {
    const double var_p = std::exp(lp[i]);
    const double inv_var_n = std::exp(-ln[i]);
    const double ratio = std::exp(lp[i] - ln[i]);
    const double diff = mp[i] - mn[i];
    total += ln[i] - mp[i] * mp[i] - var_p + ratio + diff * diff * inv_var_n;
    if (dpos != nullptr) {
      dpos->mu.values()[i] += n * (-2.0 * mp[i] + 2.0 * diff * inv_var_n);
      dpos->logvar.values()[i] += n * (-var_p + ratio);
    }
    if (dneg != nullptr) {
      dneg->mu.values()[i] += n * (-2.0 * diff * inv_var_n);
      dneg->logvar.values()[i] += n * (1.0 - ratio - diff * diff * inv_var_n);
    }
  }
  return n * total;
}

namespace {

Dense sum_samples(const std::vector<Dense>& dz) {
  Dense out(dz.front().rows(), dz.front().cols());
  for (const Dense& g : dz) out += g;
  return out;
}

}  // namespace

ObjectiveResult cvgae_objective(const EncoderParams& params, const Dense& features,
                                const PropagationMatrix& prop_pos, const Encoding& pos,
                                const PropagationMatrix& prop_neg, const Encoding& neg,
                                const Adjacency& a_gen, const Dense& q,
                                std::vector<Dense> noise, const ObjectiveOptions& options) {
  const Posterior& qpos = pos.posterior;
  const double two_n = 2.0 * static_cast<double>(qpos.mu.rows());
  const LatentSamples samples = latent_from_noise(qpos, std::move(noise));

  ObjectiveResult r;
  r.grad = EncoderParams::zeros_like(params);

  std::vector<Dense> dz1;
  std::vector<Dense> dz2;
  r.loss.l1 = loss_l1(samples, a_gen, options.include_self_pairs, &dz1);
  r.loss.l2 = loss_l2(samples, q, params.omega, &dz2, &r.grad.omega);

  PosteriorGrad gpos = PosteriorGrad::zeros_like(qpos);
  samples_backward(qpos, samples, dz1, gpos);
  samples_backward(qpos, samples, dz2, gpos);
  r.grad_mu_l1 = sum_samples(dz1);
  r.grad_mu_l2 = sum_samples(dz2);

  const double kl_prior = kl_to_prior(qpos);
  const double w = options.kl_weight.value_or(two_n);
  r.loss.elbo_clus = r.loss.l1 + r.loss.l2 - w * kl_prior;

  if (options.drop_contrastive) {
    // Only the prior regularizer of the clustering ELBO remains.
    PosteriorGrad kl_grad = PosteriorGrad::zeros_like(qpos);
    kl_to_prior(qpos, &kl_grad);
    kl_grad.mu *= -w;
    kl_grad.logvar *= -w;
    gpos += kl_grad;
    r.loss.l3 = -w * kl_prior;
    r.loss.theorem1_gap = 0.0;
  } else {
    const double f = w / two_n;
    PosteriorGrad dpos = PosteriorGrad::zeros_like(qpos);
    PosteriorGrad dneg = PosteriorGrad::zeros_like(neg.posterior);
    r.loss.l3 = f * loss_l3(qpos, neg.posterior, &dpos, options.l3_full_gradient ? &dneg : nullptr);
    r.loss.theorem1_gap = w * kl_between(qpos, neg.posterior);
    if (f != 1.0) {
      dpos.mu *= f;
      dpos.logvar *= f;
    }
    gpos += dpos;
    if (options.l3_full_gradient) {
      dneg.mu *= f;
      dneg.logvar *= f;
      encoder_backward(params, prop_neg, features, neg, dneg, r.grad);
    }
  }
  encoder_backward(params, prop_pos, features, pos, gpos, r.grad);
  r.loss.total = r.loss.l1 + r.loss.l2 + r.loss.l3;

  if (!r.grad.all_finite()) {
    const char* term = !r.grad_mu_l1.all_finite() ? "L1" : !r.grad_mu_l2.all_finite() ? "L2" : "L3";
    throw NonFiniteError(std::string("cvgae_objective: non-finite gradient (") + term + ")");
  }
  return r;
}

PretrainResult pretrain_objective(const EncoderParams& params, const Dense& features,
                                  const PropagationMatrix& prop, const Encoding& enc,
                                  const Adjacency& target, std::vector<Dense> noise,
                                  bool include_self_pairs, std::optional<double> kl_weight) {
  const LatentSamples samples = latent_from_noise(enc.posterior, std::move(noise));
  PretrainResult r;
  r.grad = EncoderParams::zeros_like(params);
  PosteriorGrad g = PosteriorGrad::zeros_like(enc.posterior);
  r.elbo = elbo_pretrain(enc.posterior, samples, target, include_self_pairs, kl_weight, &g);
  encoder_backward(params, prop, features, enc, g, r.grad);
  if (!r.grad.all_finite()) throw NonFiniteError("pretrain_objective: non-finite gradient (ELBO)");
  return r;
}

Dense l2_gradient_wrt_mu(const LatentSamples& samples, const Dense& q, const Dense& omega) {
  std::vector<Dense> dz;
  loss_l2(samples, q, omega, &dz, nullptr);
  return sum_samples(dz);
}

}  // namespace cvgae

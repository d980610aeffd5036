#include "cvgae/encoder.hpp"

#include <cmath>

namespace cvgae {
namespace {

Dense glorot_uniform(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Dense w(fan_in, fan_out);
  for (double& x : w.values()) x = rng.uniform(-r, r);
  return w;
}

}  // namespace

EncoderParams EncoderParams::glorot(std::size_t feat_dim, std::size_t hidden, std::size_t latent,
                                    RngStream& rng) {
  EncoderParams p;
  p.w1 = glorot_uniform(feat_dim, hidden, rng);
  p.w2_mu = glorot_uniform(hidden, latent, rng);
  p.w2_sigma = glorot_uniform(hidden, latent, rng);
  p.omega = Dense(0, latent);
  return p;
}

EncoderParams EncoderParams::zeros_like(const EncoderParams& like) {
  return {Dense(like.w1.rows(), like.w1.cols()), Dense(like.w2_mu.rows(), like.w2_mu.cols()),
          Dense(like.w2_sigma.rows(), like.w2_sigma.cols()),
          Dense(like.omega.rows(), like.omega.cols())};
}

std::vector<Dense*> EncoderParams::tensors() { return {&w1, &w2_mu, &w2_sigma, &omega}; }

std::vector<const Dense*> EncoderParams::tensors() const {
  return {&w1, &w2_mu, &w2_sigma, &omega};
}

bool EncoderParams::all_finite() const {
  return w1.all_finite() && w2_mu.all_finite() && w2_sigma.all_finite() && omega.all_finite();
}

EncoderParams& EncoderParams::operator+=(const EncoderParams& o) {
  w1 += o.w1;
  w2_mu += o.w2_mu;
  w2_sigma += o.w2_sigma;
  omega += o.omega;
  return *this;
}

EncoderParams& EncoderParams::operator*=(double s) {
  w1 *= s;
  w2_mu *= s;
  w2_sigma *= s;
  omega *= s;
  return *this;
}

Encoding encode(const EncoderParams& params, const PropagationMatrix& prop, const Dense& features) {
  if (features.cols() != params.w1.rows()) {
    throw DimensionError("encode: feature dim " + std::to_string(features.cols()) +
                         " != W1 rows " + std::to_string(params.w1.rows()));
  }
  Encoding enc;
  enc.pre_hidden = spmm(prop, matmul(features, params.w1));
  Dense activated = enc.pre_hidden;
  for (double& x : activated.values()) x = x > 0.0 ? x : 0.0;
  enc.hidden = spmm(prop, activated);
  enc.posterior.mu = matmul(enc.hidden, params.w2_mu);
  enc.posterior.logvar = matmul(enc.hidden, params.w2_sigma);
  if (!enc.posterior.mu.all_finite() || !enc.posterior.logvar.all_finite()) {
    throw NonFiniteError("encode: non-finite activations");
  }
  return enc;
}

PosteriorGrad PosteriorGrad::zeros_like(const Posterior& p) {
  return {Dense(p.mu.rows(), p.mu.cols()), Dense(p.logvar.rows(), p.logvar.cols())};
}

PosteriorGrad& PosteriorGrad::operator+=(const PosteriorGrad& o) {
  mu += o.mu;
  logvar += o.logvar;
  return *this;
}

void encoder_backward(const EncoderParams& params, const PropagationMatrix& prop,
                      const Dense& features, const Encoding& enc, const PosteriorGrad& upstream,
                      EncoderParams& grads) {
  grads.w2_mu += matmul_tn(enc.hidden, upstream.mu);
  grads.w2_sigma += matmul_tn(enc.hidden, upstream.logvar);
  Dense d_hidden = matmul_nt(upstream.mu, params.w2_mu);
  d_hidden += matmul_nt(upstream.logvar, params.w2_sigma);
  // The propagation matrix is symmetric, so S^T = S.
  Dense d_pre = spmm(prop, d_hidden);
  auto pre = enc.pre_hidden.values();
  auto dp = d_pre.values();
  for (std::size_t i = 0; i < dp.size(); ++i) {
    if (!(pre[i] > 0.0)) dp[i] = 0.0;
  }
  grads.w1 += matmul_tn(features, spmm(prop, d_pre));
}

std::vector<Dense> draw_noise(std::size_t rows, std::size_t cols, std::size_t count,
                              RngStream& rng) {
  std::vector<Dense> noise;
  noise.reserve(count);
  for (std::size_t l = 0; l < count; ++l) {
    Dense e(rows, cols);
    for (double& x : e.values()) x = rng.normal();
    noise.push_back(std::move(e));
  }
  return noise;
}

LatentSamples latent_from_noise(const Posterior& post, std::vector<Dense> noise) {
  LatentSamples s;
  s.noise = std::move(noise);
  const auto mu = post.mu.values();
  const auto lv = post.logvar.values();
  for (const Dense& e : s.noise) {
    if (!e.same_shape(post.mu)) throw DimensionError("latent_from_noise: noise shape mismatch");
    Dense z(post.mu.rows(), post.mu.cols());
    auto zv = z.values();
    auto ev = e.values();
    for (std::size_t i = 0; i < zv.size(); ++i) zv[i] = mu[i] + std::exp(0.5 * lv[i]) * ev[i];
    s.z.push_back(std::move(z));
  }
  return s;
}

LatentSamples sample_latent(const Posterior& post, std::size_t count, RngStream& rng) {
  if (count == 0) throw std::invalid_argument("sample_latent: need at least one sample");
  return latent_from_noise(post, draw_noise(post.mu.rows(), post.mu.cols(), count, rng));
}

void samples_backward(const Posterior& post, const LatentSamples& samples,
                      std::span<const Dense> dz, PosteriorGrad& out) {
  const auto lv = post.logvar.values();
  auto dmu = out.mu.values();
  auto dlv = out.logvar.values();
  for (std::size_t l = 0; l < dz.size(); ++l) {
    const auto g = dz[l].values();
    const auto e = samples.noise[l].values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      dmu[i] += g[i];
      dlv[i] += g[i] * e[i] * 0.5 * std::exp(0.5 * lv[i]);
    }
  }
}

}  // namespace cvgae

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cvgae/graph.hpp"
#include "cvgae/numeric.hpp"

namespace cvgae {

// Trainable tensors. `omega` (K x d cluster centers) is empty until the
// clustering phase starts. Gradients use the same struct.
struct EncoderParams {
  Dense w1;        // J x h
  Dense w2_mu;     // h x d
  Dense w2_sigma;  // h x d, produces log-variances
  Dense omega;     // K x d

  // Glorot-uniform weights, empty omega.
  static EncoderParams glorot(std::size_t feat_dim, std::size_t hidden, std::size_t latent,
                              RngStream& rng);
  // Zero tensors with the shapes of `like`.
  static EncoderParams zeros_like(const EncoderParams& like);

  std::size_t latent_dim() const { return w2_mu.cols(); }
  std::size_t hidden_dim() const { return w1.cols(); }

  std::vector<Dense*> tensors();
  std::vector<const Dense*> tensors() const;
  bool all_finite() const;

  EncoderParams& operator+=(const EncoderParams& o);
  EncoderParams& operator*=(double s);

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

inline constexpr const char* kTensorNames[] = {"w1", "w2_mu", "w2_sigma", "omega"};

// Per-node diagonal Gaussian q(z_i | X, A).
struct Posterior {
  Dense mu;      // N x d
  Dense logvar;  // N x d
};

// Posterior plus the intermediates needed for the backward pass.
struct Encoding {
  Posterior posterior;
  Dense pre_hidden;  // S X W1, before ReLU
  Dense hidden;      // S ReLU(S X W1)
};

Encoding encode(const EncoderParams& params, const PropagationMatrix& prop, const Dense& features);

inline Posterior encode_posterior(const EncoderParams& params, const PropagationMatrix& prop,
                                  const Dense& features) {
  return encode(params, prop, features).posterior;
}

// Gradient of a scalar with respect to mu and logvar.
struct PosteriorGrad {
  Dense mu;
  Dense logvar;

  static PosteriorGrad zeros_like(const Posterior& p);
  PosteriorGrad& operator+=(const PosteriorGrad& o);
};

// Accumulates dL/dW1, dL/dW2mu, dL/dW2sigma into `grads` given dL/dmu and
// dL/dlogvar for one encoding. `omega` in `grads` is untouched.
void encoder_backward(const EncoderParams& params, const PropagationMatrix& prop,
                      const Dense& features, const Encoding& enc, const PosteriorGrad& upstream,
                      EncoderParams& grads);

// L reparameterized draws z = mu + exp(logvar / 2) * eps.
struct LatentSamples {
  std::vector<Dense> z;
  std::vector<Dense> noise;

  std::size_t count() const { return z.size(); }
};

LatentSamples sample_latent(const Posterior& post, std::size_t count, RngStream& rng);
std::vector<Dense> draw_noise(std::size_t rows, std::size_t cols, std::size_t count, RngStream& rng);
LatentSamples latent_from_noise(const Posterior& post, std::vector<Dense> noise);

// Chains dL/dz^(l) through the reparameterization into `out`.
void samples_backward(const Posterior& post, const LatentSamples& samples,
                      std::span<const Dense> dz, PosteriorGrad& out);

inline double edge_logit(std::span<const double> zi, std::span<const double> zj) {
  return dot(zi, zj);
}
inline double edge_prob(std::span<const double> zi, std::span<const double> zj) {
  return sigmoid(edge_logit(zi, zj));
}

}  // namespace cvgae

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cvgae/encoder.hpp"
#include "cvgae/graph.hpp"
#include "cvgae/numeric.hpp"

namespace cvgae {

// Student's t (one degree of freedom) soft assignment of each row of `z` to
// the centers in `omega`. Rows sum to one.
Dense soft_assignments(const Dense& z, const Dense& omega);

struct Margins {
  std::vector<double> first;     // largest assignment per node
  std::vector<double> second;    // second largest; equals `first` on a tied maximum
  std::vector<NodeId> reliable;  // nodes with first - second >= alpha, ascending
};

Margins confidence_margins(const Dense& p, double alpha);

// Target distribution: one-hot at the argmax for rows whose margin reaches
// alpha, the soft row otherwise. `hard_all` makes every row one-hot.
Dense target_assignments(const Dense& p, std::span<const double> first,
                         std::span<const double> second, double alpha, bool hard_all = false);

// Index of the largest entry per row; ties resolve to the lowest index.
std::vector<int> argmax_rows(const Dense& p);

struct ClusterState {
  Dense p;
  Dense q;
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<NodeId> theta;
  double alpha = 0.0;

  static ClusterState from_assignments(Dense p, double alpha, bool hard_all = false);
};

struct LossBreakdown {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double total = 0.0;
  double pretrain_recon = 0.0;
  double pretrain_kl = 0.0;
  // L_CVGAE minus the clustering ELBO, i.e. 2N * sum_i KL(q_pos_i || q_neg_i)
  // for the objective actually optimized.
  double theorem1_gap = 0.0;
  // Clustering ELBO on the positive graph: l1 + l2 - 2N * KL(q_pos || prior).
  double elbo_clus = 0.0;
};

// Monte Carlo estimate of sum_{i,j} log p(a_ij | z_i, z_j) averaged over all
// L^2 sample pairings. Self pairs use target 1 when `include_self_pairs`,
// otherwise they are skipped. When `dz` is non-null it receives the gradient
// with respect to every sample.
double reconstruction_loglik(const LatentSamples& samples, const Adjacency& target,
                             bool include_self_pairs, std::vector<Dense>* dz = nullptr);

// sum_i KL(N(mu_i, diag sigma_i^2) || N(0, I)).
double kl_to_prior(const Posterior& post, PosteriorGrad* grad = nullptr);

// sum_i KL(q_a_i || q_b_i) for diagonal Gaussians.
double kl_between(const Posterior& a, const Posterior& b);

struct PretrainElbo {
  double recon = 0.0;
  double kl = 0.0;
  double elbo = 0.0;  // recon - kl_weight * kl
};

// kl_weight defaults to 2N.
PretrainElbo elbo_pretrain(const Posterior& post, const LatentSamples& samples,
                           const Adjacency& target, bool include_self_pairs = true,
                           std::optional<double> kl_weight = std::nullopt,
                           PosteriorGrad* grad = nullptr);

double loss_l1(const LatentSamples& samples, const Adjacency& a_gen, bool include_self_pairs = true,
               std::vector<Dense>* dz = nullptr);

// -2N/L sum_l sum_i KL(q_i || p_i(z_i^(l))) with q held constant.
double loss_l2(const LatentSamples& samples, const Dense& q, const Dense& omega,
               std::vector<Dense>* dz = nullptr, Dense* domega = nullptr);

// Closed form of 2N * sum_i E_{q_pos}[log p(z_i) - log q_neg(z_i)].
double loss_l3(const Posterior& pos, const Posterior& neg, PosteriorGrad* dpos = nullptr,
               PosteriorGrad* dneg = nullptr);

struct ObjectiveOptions {
  bool include_self_pairs = true;
  bool l3_full_gradient = false;  // default: negative branch is a constant
  bool drop_contrastive = false;  // the -PC variant
  // Replaces the 2N prefactor of the KL terms; L3 is rescaled by kl_weight / 2N.
  std::optional<double> kl_weight;
};

struct ObjectiveResult {
  LossBreakdown loss;
  EncoderParams grad;     // d total / d params, unscaled
  Dense grad_mu_l1;       // d l1 / d mu_pos
  Dense grad_mu_l2;       // d l2 / d mu_pos
};

// Evaluates the three-term clustering objective and its gradient.
// `pos` and `neg` must be encodings of the same params on the positive and
// negative graphs; `noise` drives the reparameterized samples of `pos`.
ObjectiveResult cvgae_objective(const EncoderParams& params, const Dense& features,
                                const PropagationMatrix& prop_pos, const Encoding& pos,
                                const PropagationMatrix& prop_neg, const Encoding& neg,
                                const Adjacency& a_gen, const Dense& q,
                                std::vector<Dense> noise, const ObjectiveOptions& options);

struct PretrainResult {
  PretrainElbo elbo;
  EncoderParams grad;
};

PretrainResult pretrain_objective(const EncoderParams& params, const Dense& features,
                                  const PropagationMatrix& prop, const Encoding& enc,
                                  const Adjacency& target, std::vector<Dense> noise,
                                  bool include_self_pairs = true,
                                  std::optional<double> kl_weight = std::nullopt);

// dL2/dmu for a caller-supplied target (used by the feature-randomness probe).
Dense l2_gradient_wrt_mu(const LatentSamples& samples, const Dense& q, const Dense& omega);

}  // namespace cvgae

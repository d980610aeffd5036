#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "cvgae/encoder.hpp"
#include "cvgae/graph.hpp"

namespace cvgae::driver {

// A small random problem: graph views, targets and fixed reparameterization
// noise, so every objective is a deterministic function of the parameters.
struct GradInstance {
  Dense features;
  Adjacency a;      // original graph, also the negative view
  Adjacency a_pos;
  Adjacency a_gen;
  EncoderParams params;
  Dense q;
  std::vector<Dense> noise;
};

struct GradInstanceLimits {
  std::size_t max_nodes = 12;
  std::size_t max_features = 6;
  std::size_t max_hidden = 5;
  std::size_t max_latent = 4;
  std::size_t max_clusters = 3;
  std::size_t max_samples = 2;
};

// Draws an instance whose ReLU pre-activations all sit at least `margin` away
// from the kink, retrying otherwise. `retries` counts rejected draws.
GradInstance random_grad_instance(RngStream& rng, const GradInstanceLimits& limits,
                                  double margin = 1e-3, std::size_t* retries = nullptr);

struct GradCheckReport {
  std::map<std::string, double> max_error;  // objective name -> worst relative error
  std::size_t instances = 0;
  std::size_t retries = 0;

  double worst() const;
};

// Central-difference check of every analytic gradient (pretraining ELBO, L1,
// L2, L3 with and without the negative branch, and the combined objective
// variants) with respect to every parameter tensor.
GradCheckReport run_grad_check(std::size_t instances, std::uint64_t seed, double eps = 1e-5,
                               const GradInstanceLimits& limits = {});

}  // namespace cvgae::driver

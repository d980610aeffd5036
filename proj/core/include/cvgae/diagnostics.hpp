#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cvgae/numeric.hpp"

namespace cvgae {

// Cosine similarity; 0 when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Agreement between the clustering-loss gradient under model targets and the
// same gradient under ground-truth targets. Higher means less feature randomness.
double lambda_fr(const Dense& grad_pseudo, const Dense& grad_supervised);

// Agreement between the clustering and reconstruction gradients. Higher means
// less feature drift.
double lambda_fd(const Dense& grad_cluster, const Dense& grad_selfsup);

struct ActiveUnits {
  std::vector<double> variance;  // per latent unit, over nodes (N - 1 denominator)
  std::vector<bool> active;      // variance > delta

  std::size_t count() const;
};

ActiveUnits active_units(const Dense& means, double delta = 0.01);

// Running sum over iterations of (a_t - b_t), truncated to the shorter series.
std::vector<double> cumulative_difference(std::span<const double> a, std::span<const double> b);

// Per-unit variant: series[t][u]. Output has the same layout.
std::vector<std::vector<double>> cumulative_difference(
    const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);

}  // namespace cvgae

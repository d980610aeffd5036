#include "cvgae/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace cvgae {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double lambda_fr(const Dense& grad_pseudo, const Dense& grad_supervised) {
  if (!grad_pseudo.same_shape(grad_supervised)) throw DimensionError("lambda_fr: shape mismatch");
  return cosine_similarity(grad_pseudo.values(), grad_supervised.values());
}

double lambda_fd(const Dense& grad_cluster, const Dense& grad_selfsup) {
  if (!grad_cluster.same_shape(grad_selfsup)) throw DimensionError("lambda_fd: shape mismatch");
  return cosine_similarity(grad_cluster.values(), grad_selfsup.values());
}

std::size_t ActiveUnits::count() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

ActiveUnits active_units(const Dense& means, double delta) {
  if (means.rows() < 2) throw std::invalid_argument("active_units: need at least two nodes");
  const std::size_t d = means.cols();
  // Welford's update, one pass over the rows.
  std::vector<double> mean(d, 0.0), m2(d, 0.0);
  for (std::size_t i = 0; i < means.rows(); ++i) {
    const auto row = means.row(i);
    const double k = static_cast<double>(i + 1);
    for (std::size_t u = 0; u < d; ++u) {
      const double dx = row[u] - mean[u];
      mean[u] += dx / k;
      m2[u] += dx * (row[u] - mean[u]);
    }
  }
  ActiveUnits out;
  out.variance.resize(d);
  out.active.resize(d);
  for (std::size_t u = 0; u < d; ++u) {
    out.variance[u] = m2[u] / static_cast<double>(means.rows() - 1);
    out.active[u] = out.variance[u] > delta;
  }
  return out;
}

std::vector<double> cumulative_difference(std::span<const double> a, std::span<const double> b) {
  const std::size_t len = std::min(a.size(), b.size());
  std::vector<double> out(len);
  double run = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    run += a[t] - b[t];
    out[t] = run;
  }
  return out;
}

std::vector<std::vector<double>> cumulative_difference(
    const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  const std::size_t len = std::min(a.size(), b.size());
  std::vector<std::vector<double>> out(len);
  std::vector<double> run;
  for (std::size_t t = 0; t < len; ++t) {
    if (a[t].size() != b[t].size()) throw DimensionError("cumulative_difference: unit count mismatch");
    run.resize(a[t].size(), 0.0);
    for (std::size_t u = 0; u < run.size(); ++u) run[u] += a[t][u] - b[t][u];
    out[t] = run;
  }
  return out;
}

}  // namespace cvgae

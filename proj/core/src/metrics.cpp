#include "cvgae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace cvgae {

NmiNormalization parse_nmi_normalization(const std::string& name) {
  if (name == "arithmetic") return NmiNormalization::kArithmetic;
  if (name == "geometric") return NmiNormalization::kGeometric;
  if (name == "min") return NmiNormalization::kMin;
  if (name == "max") return NmiNormalization::kMax;
  throw std::invalid_argument("unknown NMI normalization '" + name + "'");
}

std::string to_string(NmiNormalization norm) {
  switch (norm) {
    case NmiNormalization::kArithmetic: return "arithmetic";
    case NmiNormalization::kGeometric: return "geometric";
    case NmiNormalization::kMin: return "min";
    case NmiNormalization::kMax: return "max";
  }
  return "arithmetic";
}

// Shortest augmenting path with row/column potentials, O(n^3).
std::vector<std::size_t> hungarian(const Dense& cost) {
  if (cost.rows() != cost.cols()) throw DimensionError("hungarian: cost matrix must be square");
  if (!cost.all_finite()) throw std::invalid_argument("hungarian: non-finite cost entry");
  const std::size_t n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual start column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> result(n);
  for (std::size_t j = 1; j <= n; ++j) {
    if (match[j] != 0) result[match[j] - 1] = j - 1;
  }
  return result;
}

Contingency contingency(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("metrics: length mismatch");
  Contingency c;
  c.cluster_values.assign(pred.begin(), pred.end());
  c.class_values.assign(truth.begin(), truth.end());
  for (auto* values : {&c.cluster_values, &c.class_values}) {
    std::sort(values->begin(), values->end());
    values->erase(std::unique(values->begin(), values->end()), values->end());
  }
  auto index_of = [](const std::vector<int>& values, int x) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), x) -
                                    values.begin());
  };
  c.table.assign(c.cluster_values.size(), std::vector<std::size_t>(c.class_values.size(), 0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++c.table[index_of(c.cluster_values, pred[i])][index_of(c.class_values, truth[i])];
  }
  return c;
}

std::vector<int> best_cluster_mapping(const Contingency& c) {
  const std::size_t kc = c.cluster_values.size();
  const std::size_t kt = c.class_values.size();
  const std::size_t size = std::max(kc, kt);
  Dense cost(size, size);
  for (std::size_t i = 0; i < kc; ++i) {
    for (std::size_t j = 0; j < kt; ++j) cost(i, j) = -static_cast<double>(c.table[i][j]);
  }
  const auto assign = hungarian(cost);
  std::vector<int> mapping(kc, -1);
  for (std::size_t i = 0; i < kc; ++i) {
    if (assign[i] < kt) mapping[i] = static_cast<int>(assign[i]);
  }
  return mapping;
}

namespace {

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

MetricsRecord clustering_metrics(std::span<const int> pred, std::span<const int> truth,
                                 NmiNormalization norm) {
  if (pred.size() != truth.size()) throw std::invalid_argument("metrics: length mismatch");
  if (pred.empty()) throw std::invalid_argument("metrics: empty input");
  const auto c = contingency(pred, truth);
  const std::size_t kc = c.cluster_values.size();
  const std::size_t kt = c.class_values.size();
  const double n = static_cast<double>(pred.size());

  std::vector<double> row_sum(kc, 0.0), col_sum(kt, 0.0);
  for (std::size_t i = 0; i < kc; ++i) {
    for (std::size_t j = 0; j < kt; ++j) {
      row_sum[i] += static_cast<double>(c.table[i][j]);
      col_sum[j] += static_cast<double>(c.table[i][j]);
    }
  }

  MetricsRecord m;
  m.count = pred.size();

  const auto mapping = best_cluster_mapping(c);
  double matched = 0.0;
  std::vector<double> tp(kt, 0.0), predicted_as(kt, 0.0);
  for (std::size_t i = 0; i < kc; ++i) {
    if (mapping[i] < 0) continue;
    const auto j = static_cast<std::size_t>(mapping[i]);
    matched += static_cast<double>(c.table[i][j]);
    tp[j] = static_cast<double>(c.table[i][j]);
    predicted_as[j] = row_sum[i];
  }
  m.acc = matched / n;

  double prec_sum = 0.0, f1_sum = 0.0;
  for (std::size_t j = 0; j < kt; ++j) {
    const double p = predicted_as[j] > 0.0 ? tp[j] / predicted_as[j] : 0.0;
    const double r = tp[j] / col_sum[j];
    prec_sum += p;
    f1_sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  m.precision = prec_sum / static_cast<double>(kt);
  m.f1 = f1_sum / static_cast<double>(kt);

  double pure = 0.0;
  for (std::size_t i = 0; i < kc; ++i) {
    pure += static_cast<double>(*std::max_element(c.table[i].begin(), c.table[i].end()));
  }
  m.purity = pure / n;

  const double h_pred = entropy(row_sum, n);
  const double h_true = entropy(col_sum, n);
  double mi = 0.0;
  for (std::size_t i = 0; i < kc; ++i) {
    for (std::size_t j = 0; j < kt; ++j) {
      const double nij = static_cast<double>(c.table[i][j]);
      if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (row_sum[i] * col_sum[j]));
    }
  }
  if (kc == 1 && kt == 1) {
    m.nmi = 1.0;
  } else {
    double denom = 0.0;
    switch (norm) {
      case NmiNormalization::kArithmetic: denom = 0.5 * (h_pred + h_true); break;
      case NmiNormalization::kGeometric: denom = std::sqrt(h_pred * h_true); break;
      case NmiNormalization::kMin: denom = std::min(h_pred, h_true); break;
      case NmiNormalization::kMax: denom = std::max(h_pred, h_true); break;
    }
    m.nmi = denom > 0.0 ? std::max(0.0, mi) / denom : 0.0;
  }

  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (std::size_t i = 0; i < kc; ++i) {
    sum_rows += comb2(row_sum[i]);
    for (std::size_t j = 0; j < kt; ++j) sum_cells += comb2(static_cast<double>(c.table[i][j]));
  }
  for (std::size_t j = 0; j < kt; ++j) sum_cols += comb2(col_sum[j]);
  const double expected = n > 1.0 ? sum_rows * sum_cols / comb2(n) : 0.0;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  m.ari = max_index == expected ? 1.0 : (sum_cells - expected) / (max_index - expected);
  return m;
}

}  // namespace cvgae

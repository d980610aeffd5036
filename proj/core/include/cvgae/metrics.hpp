#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvgae/numeric.hpp"

namespace cvgae {

enum class NmiNormalization { kArithmetic, kGeometric, kMin, kMax };

NmiNormalization parse_nmi_normalization(const std::string& name);
std::string to_string(NmiNormalization norm);

struct MetricsRecord {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double f1 = 0.0;         // macro over ground-truth classes
  double precision = 0.0;  // macro over ground-truth classes
  double purity = 0.0;
  std::size_t count = 0;   // number of evaluated nodes
};

// Minimum-cost assignment for a square cost matrix: result[row] = column.
std::vector<std::size_t> hungarian(const Dense& cost);

// Dense relabeling of arbitrary integer labels plus the contingency table
// (rows: predicted clusters, columns: ground-truth classes).
struct Contingency {
  std::vector<std::vector<std::size_t>> table;
  std::vector<int> cluster_values;
  std::vector<int> class_values;
};

Contingency contingency(std::span<const int> pred, std::span<const int> truth);

// Cluster index -> class index maximizing matched nodes. Clusters without a
// class partner map to -1.
std::vector<int> best_cluster_mapping(const Contingency& c);

MetricsRecord clustering_metrics(std::span<const int> pred, std::span<const int> truth,
                                 NmiNormalization norm = NmiNormalization::kArithmetic);

}  // namespace cvgae

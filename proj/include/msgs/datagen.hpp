#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msgs/graph.hpp"
#include "msgs/types.hpp"

namespace msgs {

/// Stochastic-block-model generator configuration. Edges between nodes of
/// the same class appear with probability p_in, across classes with p_out;
/// features are Gaussian around class means placed at mean_separation times
/// the class one-hot corner.
struct SbmConfig {
  int num_nodes = 0;
  int num_classes = 2;
  std::vector<double> proportions;  // empty = equal shares; must sum to 1
  double p_in = 0.05;
  double p_out = 0.05;
  int feature_dim = 8;
  double mean_separation = 1.0;
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
  bool require_connected = true;
  int max_attempts = 100;
};

/// Expected homophily ratio h = p_in E_intra / (p_in E_intra + p_out E_inter)
/// where E_intra/E_inter count same/cross-class node pairs.
double expected_homophily(const SbmConfig& config);

struct Dataset {
  Graph graph;
  Matrix features;              // N x M
  std::vector<int> labels;      // length N, 0-based classes
  std::vector<char> train_mask;
  std::vector<char> val_mask;
  std::vector<char> test_mask;

  int num_classes() const;
  /// Fraction of edges whose endpoints share a label.
  double edge_homophily() const;
};

/// Samples an SBM dataset. When require_connected is set, regenerates from
/// the continuing RNG stream until connected, up to max_attempts, then
/// raises NumericalError. Masks are left empty; apply split() separately.
Dataset generate_sbm(const SbmConfig& config);

/// File formats (UTF-8, LF):
///   edges:    "i j" per line, '#' comments (see load_edge_list)
///   features: no header, N rows of M comma-separated decimals
///   labels:   no header, rows "node_id,class_id"
Dataset load_dataset(const std::string& edge_path, const std::string& feature_path,
                     const std::string& label_path, int num_nodes_override = -1);

void save_features(const Matrix& features, const std::string& path);
void save_labels(const std::vector<int>& labels, const std::string& path);

/// Stratified split by class with the largest-remainder method; deterministic
/// per seed. Ratios must be positive and sum to at most 1 (any remainder is
/// left unassigned). A class with fewer nodes than split bins is an
/// InputError.
Dataset split(const Dataset& dataset, double train_ratio, double val_ratio,
              double test_ratio, std::uint64_t seed);

}  // namespace msgs

#include "msgs/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "msgs/csv.hpp"
#include "msgs/rng.hpp"

namespace msgs {

namespace {

std::vector<double> resolved_proportions(const SbmConfig& config) {
  if (config.num_classes < 1) throw InputError("sbm: need at least one class");
  if (config.proportions.empty()) {
    return std::vector<double>(static_cast<std::size_t>(config.num_classes),
                               1.0 / config.num_classes);
  }
  if (static_cast<int>(config.proportions.size()) != config.num_classes) {
    throw InputError("sbm: proportions size does not match class count");
  }
  double total = 0.0;
  for (double p : config.proportions) {
    if (p <= 0.0) throw InputError("sbm: proportions must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InputError("sbm: proportions must sum to 1");
  }
  return config.proportions;
}

/// Largest-remainder apportionment of n items into the given shares.
std::vector<int> apportion(int n, const std::vector<double>& shares) {
  std::vector<int> counts(shares.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = n * shares[i];
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < n - assigned; ++k) {
    counts[remainders[static_cast<std::size_t>(k)].second] += 1;
  }
  return counts;
}

void validate_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InputError(std::string("sbm: ") + name + " must lie in [0, 1]");
  }
}

}  // namespace

double expected_homophily(const SbmConfig& config) {
  const auto shares = resolved_proportions(config);
  const auto counts = apportion(config.num_nodes, shares);
  double intra_pairs = 0.0, inter_pairs = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    intra_pairs += 0.5 * counts[c] * (counts[c] - 1.0);
    for (std::size_t d = c + 1; d < counts.size(); ++d) {
      inter_pairs += static_cast<double>(counts[c]) * counts[d];
    }
  }
  const double intra = config.p_in * intra_pairs;
  const double inter = config.p_out * inter_pairs;
  if (intra + inter == 0.0) return 0.0;
  return intra / (intra + inter);
}

int Dataset::num_classes() const {
  int c = 0;
  for (int y : labels) c = std::max(c, y + 1);
  return c;
}

double Dataset::edge_homophily() const {
  if (graph.edges.empty()) return 0.0;
  int intra = 0;
  for (const auto& [i, j] : graph.edges) {
    if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
      ++intra;
    }
  }
  return static_cast<double>(intra) / graph.edges.size();
}

Dataset generate_sbm(const SbmConfig& config) {
  if (config.num_nodes < 1) throw InputError("sbm: need at least one node");
  validate_probability(config.p_in, "p_in");
  validate_probability(config.p_out, "p_out");
  if (config.feature_dim < config.num_classes) {
    throw InputError("sbm: feature_dim must be >= num_classes");
  }
  if (config.feature_noise < 0.0) throw InputError("sbm: negative feature noise");

  const auto shares = resolved_proportions(config);
  const auto counts = apportion(config.num_nodes, shares);

  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(config.num_nodes));
  for (std::size_t c = 0; c < counts.size(); ++c) {
    labels.insert(labels.end(), static_cast<std::size_t>(counts[c]),
                  static_cast<int>(c));
  }

  Rng rng(derive_seed(config.seed, kStreamSbm));
  Graph graph;
  bool connected = false;
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < config.num_nodes; ++i) {
      for (int j = i + 1; j < config.num_nodes; ++j) {
        const double p = labels[static_cast<std::size_t>(i)] ==
                                 labels[static_cast<std::size_t>(j)]
                             ? config.p_in
                             : config.p_out;
        if (rng.uniform() < p) edges.emplace_back(i, j);
      }
    }
    graph = build_graph(config.num_nodes, edges);
    if (!config.require_connected || is_connected(graph)) {
      connected = true;
      break;
    }
  }
  if (!connected) {
    throw NumericalError("sbm: no connected sample within " +
                         std::to_string(config.max_attempts) + " attempts");
  }

  Matrix features(config.num_nodes, config.feature_dim);
  for (int i = 0; i < config.num_nodes; ++i) {
    for (int m = 0; m < config.feature_dim; ++m) {
      const double mean = m == labels[static_cast<std::size_t>(i)]
                              ? config.mean_separation
                              : 0.0;
      features(i, m) = mean + config.feature_noise * rng.normal();
    }
  }

  Dataset ds;
  ds.graph = std::move(graph);
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  const auto n = static_cast<std::size_t>(config.num_nodes);
  ds.train_mask.assign(n, 0);
  ds.val_mask.assign(n, 0);
  ds.test_mask.assign(n, 0);
  return ds;
}

Dataset load_dataset(const std::string& edge_path, const std::string& feature_path,
                     const std::string& label_path, int num_nodes_override) {
  Dataset ds;
  ds.features = read_features_csv(feature_path);
  ds.labels = read_labels_csv(label_path, static_cast<int>(ds.features.rows()));
  if (static_cast<int>(ds.labels.size()) != ds.features.rows()) {
    throw InputError("load_dataset: " + std::to_string(ds.labels.size()) +
                     " labels for " + std::to_string(ds.features.rows()) +
                     " feature rows");
  }
  const int n = num_nodes_override >= 0 ? num_nodes_override
                                        : static_cast<int>(ds.features.rows());
  if (n != ds.features.rows()) {
    throw InputError("load_dataset: node count override disagrees with features");
  }
  ds.graph = load_edge_list(edge_path, n);
  const auto nn = static_cast<std::size_t>(n);
  ds.train_mask.assign(nn, 0);
  ds.val_mask.assign(nn, 0);
  ds.test_mask.assign(nn, 0);
  return ds;
}

void save_features(const Matrix& features, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write features: " + path);
  for (int i = 0; i < features.rows(); ++i) {
    for (int j = 0; j < features.cols(); ++j) {
      if (j) out << ",";
      out << format_sig(features(i, j));
    }
    out << "\n";
  }
}

void save_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write labels: " + path);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << "," << labels[i] << "\n";
  }
}

Dataset split(const Dataset& dataset, double train_ratio, double val_ratio,
              double test_ratio, std::uint64_t seed) {
  const double ratios[3] = {train_ratio, val_ratio, test_ratio};
  double total = 0.0;
  for (double r : ratios) {
    if (r <= 0.0) throw InputError("split: ratios must be positive");
    total += r;
  }
  if (total > 1.0 + 1e-9) throw InputError("split: ratios must sum to at most 1");

  const int n = dataset.graph.num_nodes;
  const int num_classes = dataset.num_classes();
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
  for (int i = 0; i < n; ++i) {
    by_class[static_cast<std::size_t>(dataset.labels[static_cast<std::size_t>(i)])]
        .push_back(i);
  }

  Dataset out = dataset;
  out.train_mask.assign(static_cast<std::size_t>(n), 0);
  out.val_mask.assign(static_cast<std::size_t>(n), 0);
  out.test_mask.assign(static_cast<std::size_t>(n), 0);

  Rng rng(derive_seed(seed, kStreamSplit));
  for (int c = 0; c < num_classes; ++c) {
    auto& nodes = by_class[static_cast<std::size_t>(c)];
    if (static_cast<int>(nodes.size()) < 3) {
      throw InputError("split: class " + std::to_string(c) + " has only " +
                       std::to_string(nodes.size()) + " nodes, fewer than bins");
    }
    rng.shuffle(nodes);
    // Apportion within the class; any sub-1 remainder stays unassigned.
    const int assigned_total = total >= 1.0 - 1e-9
                                   ? static_cast<int>(nodes.size())
                                   : static_cast<int>(std::floor(
                                         total * static_cast<double>(nodes.size()) +
                                         1e-9));
    const std::vector<double> shares = {train_ratio / total, val_ratio / total,
                                        test_ratio / total};
    const auto counts = apportion(assigned_total, shares);
    for (int bin = 0; bin < 3; ++bin) {
      if (counts[static_cast<std::size_t>(bin)] == 0) {
        throw InputError("split: class " + std::to_string(c) +
                         " too small for requested ratios");
      }
    }
    int pos = 0;
    auto take = [&](std::vector<char>& mask, int count) {
      for (int k = 0; k < count; ++k) {
        mask[static_cast<std::size_t>(nodes[static_cast<std::size_t>(pos++)])] = 1;
      }
    };
    take(out.train_mask, counts[0]);
    take(out.val_mask, counts[1]);
    take(out.test_mask, counts[2]);
  }
  return out;
}

}  // namespace msgs

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msgs/datagen.hpp"
#include "msgs/models.hpp"
#include "msgs/types.hpp"

namespace msgs {

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.3;
  int hidden_dim = 32;
  int layers = 10;  // K
  int epochs = 500;
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::Msgs;
  AblationKind ablation = AblationKind::None;
  double epsilon = 0.3;    // FAGCN
  int positive_class = 1;  // class treated as positive for P/R/F1
};

/// Count-based classification metrics; the formulas over TP/TN/FP/FN hold
/// exactly. With more than two classes, counts are one-vs-rest against the
/// positive class. Precision and recall default to 0 when undefined.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0, tn = 0, fp = 0, fn = 0;
};

Metrics evaluate(const Matrix& logits, const std::vector<int>& labels,
                 const std::vector<char>& mask, int positive_class);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  ModelParams best_params;
  ModelShape shape;
  std::vector<EpochLog> log;
  Metrics test_metrics;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
};

/// Full-graph training with Adam (beta1 0.9, beta2 0.999, eps 1e-8) and
/// decoupled weight decay on the decay-tagged tensors. Keeps the checkpoint
/// with the highest validation accuracy (earliest epoch wins ties) and
/// reports test metrics from it. A NaN loss raises NumericalError naming the
/// epoch.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

/// Eval-mode logits for a trained parameter set.
Matrix eval_logits(const Dataset& dataset, const ModelParams& params,
                   const ModelShape& shape, const TrainConfig& config);

struct MetricsRow {
  std::string model;
  int layers = 0;
  std::uint64_t seed = 0;
  std::string split;
  Metrics metrics;
};

struct SplitRatios {
  double train = 0.1;
  double val = 0.1;
  double test = 0.8;
};

/// One training run per (model kind, K, seed); each seed re-splits the
/// dataset and re-initializes. Jobs run on a bounded worker pool; row order
/// is deterministic regardless of completion order.
std::vector<MetricsRow> depth_sweep(const std::vector<ModelKind>& kinds,
                                    const Dataset& dataset,
                                    const std::vector<int>& layer_list,
                                    const TrainConfig& config,
                                    const std::vector<std::uint64_t>& seeds,
                                    const SplitRatios& ratios, int workers = 2);

/// Full MSGS plus its three ablation variants under matched seeds.
std::vector<MetricsRow> ablation_suite(const Dataset& dataset,
                                       const TrainConfig& config,
                                       const std::vector<std::uint64_t>& seeds,
                                       const SplitRatios& ratios, int workers = 2);

struct SummaryStat {
  std::string key;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
};

/// Per-key (model or ablation name) mean and standard deviation of accuracy.
std::vector<SummaryStat> summarize_accuracy(const std::vector<MetricsRow>& rows);

}  // namespace msgs

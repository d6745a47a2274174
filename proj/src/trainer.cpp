#include "msgs/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <thread>

#include "msgs/rng.hpp"

namespace msgs {

namespace {

/// Adam with bias-corrected moments and decoupled weight decay.
class Adam {
 public:
  Adam(double lr, double weight_decay) : lr_(lr), weight_decay_(weight_decay) {}

  void step(ModelParams& params, const std::map<std::string, Matrix>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    for (auto& [name, theta] : params.tensors) {
      const Matrix& g = grads.at(name);
      Matrix& m = moment1_.try_emplace(name, Matrix::Zero(theta.rows(), theta.cols()))
                      .first->second;
      Matrix& v = moment2_.try_emplace(name, Matrix::Zero(theta.rows(), theta.cols()))
                      .first->second;
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
      const Matrix m_hat = m / bc1;
      const Matrix v_hat = v / bc2;
      theta -= lr_ * (m_hat.array() / (v_hat.array().sqrt() + kEps)).matrix();
      if (weight_decay_ > 0.0 && params.decay.count(name)) {
        theta -= (lr_ * weight_decay_) * theta;
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  double weight_decay_;
  std::map<std::string, Matrix> moment1_, moment2_;
  long t_ = 0;
};

ad::Var forward_logits(ad::Tape& tape, const BoundParams& bound,
                       const Dataset& ds, const PropagationMatrix& prop,
                       const TrainConfig& cfg, double dropout_rate) {
  ad::Var x = tape.constant(ds.features);
  switch (cfg.model) {
    case ModelKind::Msgs: {
      MsgsOptions opt;
      opt.layers = cfg.layers;
      opt.dropout = dropout_rate;
      opt.ablation = cfg.ablation;
      return msgs_forward(tape, bound, ds.graph, prop, x, opt).logits_var;
    }
    case ModelKind::Gcn:
      return gcn_forward(tape, bound, prop, x, cfg.layers, dropout_rate);
    case ModelKind::Sgc:
      return sgc_forward(tape, bound, prop, x, cfg.layers, dropout_rate);
    case ModelKind::Fagcn: {
      EdgeModelOptions opt;
      opt.layers = cfg.layers;
      opt.dropout = dropout_rate;
      opt.epsilon = cfg.epsilon;
      return fagcn_forward(tape, bound, ds.graph, x, opt);
    }
    case ModelKind::RfaGnn: {
      EdgeModelOptions opt;
      opt.layers = cfg.layers;
      opt.dropout = dropout_rate;
      return rfagnn_forward(tape, bound, ds.graph, x, opt);
    }
  }
  throw InputError("forward_logits: unknown model kind");
}

double masked_accuracy(const Matrix& logits, const std::vector<int>& labels,
                       const std::vector<char>& mask) {
  long correct = 0, total = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    int pred = 0;
    logits.row(i).maxCoeff(&pred);
    ++total;
    if (pred == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return total ? static_cast<double>(correct) / total : 0.0;
}

void run_jobs(std::vector<std::function<void()>>& jobs, int workers) {
  if (workers < 1) workers = 1;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= jobs.size()) return;
      jobs[idx]();
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(jobs.size()));
  pool.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace

Metrics evaluate(const Matrix& logits, const std::vector<int>& labels,
                 const std::vector<char>& mask, int positive_class) {
  if (static_cast<int>(labels.size()) != logits.rows() ||
      mask.size() != labels.size()) {
    throw InputError("evaluate: label/mask length mismatch");
  }
  Metrics m;
  long total = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    ++total;
    int pred = 0;
    logits.row(i).maxCoeff(&pred);
    const int truth = labels[static_cast<std::size_t>(i)];
    const bool pred_pos = pred == positive_class;
    const bool true_pos = truth == positive_class;
    if (pred_pos && true_pos) ++m.tp;
    else if (pred_pos && !true_pos) ++m.fp;
    else if (!pred_pos && true_pos) ++m.fn;
    else ++m.tn;
  }
  if (total == 0) throw InputError("evaluate: empty mask");
  m.accuracy = static_cast<double>(m.tp + m.tn) / total;
  m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
  m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

Matrix eval_logits(const Dataset& ds, const ModelParams& params,
                   const ModelShape& shape, const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.model = shape.kind;
  cfg.layers = shape.layers;
  const PropagationMatrix prop =
      propagation_matrix(ds.graph, PropagationKind::GcnRenormalized);
  ad::Tape tape;  // eval mode: dropout is identity
  const BoundParams bound = bind(tape, params);
  const ad::Var logits = forward_logits(tape, bound, ds, prop, cfg, 0.0);
  return tape.value(logits);
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
  const auto has_any = [](const std::vector<char>& m) {
    return std::any_of(m.begin(), m.end(), [](char c) { return c != 0; });
  };
  if (!has_any(ds.train_mask) || !has_any(ds.val_mask) || !has_any(ds.test_mask)) {
    throw InputError("train: dataset has empty split masks");
  }
  if (cfg.epochs < 1) throw InputError("train: epochs must be >= 1");
  if (cfg.layers < 1) throw InputError("train: K must be >= 1");

  ModelShape shape;
  shape.kind = cfg.model;
  shape.feature_dim = static_cast<int>(ds.features.cols());
  shape.hidden_dim = cfg.hidden_dim;
  shape.num_classes = ds.num_classes();
  shape.layers = cfg.layers;

  ModelParams params = init_params(shape, cfg.seed);
  const PropagationMatrix prop =
      propagation_matrix(ds.graph, PropagationKind::GcnRenormalized);
  Adam optimizer(cfg.learning_rate, cfg.weight_decay);

  TrainResult result;
  result.shape = shape;
  result.best_params = params;
  result.best_val_accuracy = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    ad::Tape tape(derive_seed(cfg.seed, kStreamDropout), epoch, true);
    const BoundParams bound = bind(tape, params);
    const ad::Var logits = forward_logits(tape, bound, ds, prop, cfg, cfg.dropout);
    const ad::Var loss =
        ad::cross_entropy_with_softmax(tape, logits, ds.labels, ds.train_mask);
    const double loss_value = tape.value(loss)(0, 0);
    if (!std::isfinite(loss_value)) {
      throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch));
    }
    const auto grads = named_grads(tape.backward(loss), bound);
    optimizer.step(params, grads);

    ad::Tape eval_tape;
    const BoundParams eval_bound = bind(eval_tape, params);
    const ad::Var eval_out =
        forward_logits(eval_tape, eval_bound, ds, prop, cfg, 0.0);
    const double val_acc =
        masked_accuracy(eval_tape.value(eval_out), ds.labels, ds.val_mask);
    result.log.push_back({epoch, loss_value, val_acc});

    if (val_acc > result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      result.best_params = params;
    }
  }

  const Matrix test_logits = eval_logits(ds, result.best_params, shape, cfg);
  result.test_metrics =
      evaluate(test_logits, ds.labels, ds.test_mask, cfg.positive_class);
  return result;
}

std::vector<MetricsRow> depth_sweep(const std::vector<ModelKind>& kinds,
                                    const Dataset& dataset,
                                    const std::vector<int>& layer_list,
                                    const TrainConfig& config,
                                    const std::vector<std::uint64_t>& seeds,
                                    const SplitRatios& ratios, int workers) {
  if (kinds.empty() || layer_list.empty() || seeds.empty()) {
    throw InputError("depth_sweep: empty kinds, layers, or seeds");
  }
  struct Job {
    ModelKind kind;
    int layers;
    std::uint64_t seed;
  };
  std::vector<Job> plan;
  for (const auto kind : kinds) {
    for (const int k : layer_list) {
      for (const auto seed : seeds) plan.push_back({kind, k, seed});
    }
  }

  std::vector<MetricsRow> rows(plan.size());
  std::vector<std::function<void()>> jobs;
  jobs.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    jobs.emplace_back([&, i] {
      const Job& job = plan[i];
      TrainConfig cfg = config;
      cfg.model = job.kind;
      cfg.layers = job.layers;
      cfg.seed = job.seed;
      const Dataset ds =
          split(dataset, ratios.train, ratios.val, ratios.test, job.seed);
      const TrainResult r = train(ds, cfg);
      rows[i] = {model_kind_name(job.kind), job.layers, job.seed, "test",
                 r.test_metrics};
    });
  }
  run_jobs(jobs, workers);
  return rows;
}

std::vector<MetricsRow> ablation_suite(const Dataset& dataset,
                                       const TrainConfig& config,
                                       const std::vector<std::uint64_t>& seeds,
                                       const SplitRatios& ratios, int workers) {
  if (seeds.empty()) throw InputError("ablation_suite: empty seeds");
  const std::vector<AblationKind> variants = {
      AblationKind::None, AblationKind::NoMs, AblationKind::NoSamNode,
      AblationKind::NoSamScale};

  struct Job {
    AblationKind variant;
    std::uint64_t seed;
  };
  std::vector<Job> plan;
  for (const auto v : variants) {
    for (const auto seed : seeds) plan.push_back({v, seed});
  }

  std::vector<MetricsRow> rows(plan.size());
  std::vector<std::function<void()>> jobs;
  jobs.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    jobs.emplace_back([&, i] {
      const Job& job = plan[i];
      TrainConfig cfg = config;
      cfg.model = ModelKind::Msgs;
      cfg.ablation = job.variant;
      cfg.seed = job.seed;
      const Dataset ds =
          split(dataset, ratios.train, ratios.val, ratios.test, job.seed);
      const TrainResult r = train(ds, cfg);
      const std::string name =
          job.variant == AblationKind::None
              ? "msgs"
              : "msgs-" + ablation_kind_name(job.variant);
      rows[i] = {name, cfg.layers, job.seed, "test", r.test_metrics};
    });
  }
  run_jobs(jobs, workers);
  return rows;
}

std::vector<SummaryStat> summarize_accuracy(const std::vector<MetricsRow>& rows) {
  std::map<std::string, std::vector<double>> grouped;
  std::vector<std::string> order;
  for (const auto& row : rows) {
    const std::string key = row.model + "/K=" + std::to_string(row.layers);
    if (!grouped.count(key)) order.push_back(key);
    grouped[key].push_back(row.metrics.accuracy);
  }
  std::vector<SummaryStat> out;
  for (const auto& key : order) {
    const auto& xs = grouped[key];
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / (static_cast<double>(xs.size()) - 1.0) : 0.0;
    out.push_back({key, mean, std::sqrt(var)});
  }
  return out;
}

}  // namespace msgs

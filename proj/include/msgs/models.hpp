#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "msgs/autodiff.hpp"
#include "msgs/graph.hpp"
#include "msgs/spectral.hpp"
#include "msgs/types.hpp"

namespace msgs {

enum class ModelKind { Msgs, Gcn, Sgc, Fagcn, RfaGnn };

enum class AblationKind { None, NoMs, NoSamNode, NoSamScale };

ModelKind parse_model_kind(const std::string& name);
std::string model_kind_name(ModelKind kind);
AblationKind parse_ablation_kind(const std::string& name);
std::string ablation_kind_name(AblationKind kind);

/// All trainable tensors of one model, keyed by name. Names in `decay` get
/// weight decay (the weight matrices); attention vectors and biases do not.
struct ModelParams {
  std::map<std::string, Matrix> tensors;
  std::set<std::string> decay;
};

/// Shape metadata needed to build or restore a parameter set.
struct ModelShape {
  ModelKind kind = ModelKind::Msgs;
  int feature_dim = 0;
  int hidden_dim = 16;
  int num_classes = 2;
  int layers = 2;  // K
};

/// Xavier-uniform initialization (+/- sqrt(6/(fan_in+fan_out))), biases zero,
/// creation order fixed so a seed pins every tensor.
ModelParams init_params(const ModelShape& shape, std::uint64_t seed);

/// Text round trip for trained parameters (17 significant digits).
void save_params(const ModelParams& params, const ModelShape& shape,
                 const std::string& path);
struct LoadedParams {
  ModelParams params;
  ModelShape shape;
};
LoadedParams load_params(const std::string& path);

/// Parameters bound onto a tape for one forward/backward pass.
struct BoundParams {
  std::map<std::string, ad::Var> vars;

  ad::Var at(const std::string& name) const;
};

BoundParams bind(ad::Tape& tape, const ModelParams& params);

/// Translates node-id-keyed gradients into name-keyed ones.
std::map<std::string, Matrix> named_grads(const ad::GradMap& grads,
                                          const BoundParams& bound);

struct MsgsOptions {
  int layers = 2;  // K; >= 1 unless an ablation is selected
  double dropout = 0.0;
  AblationKind ablation = AblationKind::None;
  // Test hooks.
  std::optional<int> gamma_onehot_scale;
  bool force_alpha_one = false;
  bool force_beta_one = false;
  bool linear_backbone = false;
};

/// Everything a forward pass exposes for inspection and export.
struct ForwardArtifacts {
  ad::Var logits_var;
  Matrix logits;                          // N x C
  std::vector<Matrix> scale_embeddings;   // Z^(k), N x hidden, k = 0..K
  std::vector<Vector> node_coeffs;        // alpha^(k), length N
  std::vector<Vector> edge_coeffs;        // beta^(k), one per directed edge
  Matrix scale_attention;                 // gamma, N x (K+1)
};

/// MSGS forward pass. Backbone: H^(0) = X W0, H^(l) = relu(P H^(l-1) W_l).
/// Per scale k: alpha_i = sigmoid(g_alpha . (h~_i - h_i)) with h~ = P h,
/// beta_{i,j} = tanh(g_beta^T [h_i || h_j]) per directed edge,
/// z_i = alpha_i h_i + sum_j beta_{i,j} h_j / sqrt(d_i d_j),
/// gamma_{k,i} = q^T tanh(W_k z_i^T) (signed, not normalized across scales),
/// logits = (sum_k gamma_k z^(k)) W + b.
ForwardArtifacts msgs_forward(ad::Tape& tape, const BoundParams& params,
                              const Graph& graph, const PropagationMatrix& prop,
                              ad::Var features, const MsgsOptions& options);

/// Ablation variants: NoMs keeps only the scale-K embedding, NoSamNode fixes
/// alpha = 1 and beta = 0, NoSamScale averages the scale embeddings.
ForwardArtifacts ablation_variant(AblationKind kind, ad::Tape& tape,
                                  const BoundParams& params, const Graph& graph,
                                  const PropagationMatrix& prop, ad::Var features,
                                  MsgsOptions options);

ad::Var gcn_forward(ad::Tape& tape, const BoundParams& params,
                    const PropagationMatrix& prop, ad::Var features, int layers,
                    double dropout_rate = 0.0);

ad::Var sgc_forward(ad::Tape& tape, const BoundParams& params,
                    const PropagationMatrix& prop, ad::Var features, int hops,
                    double dropout_rate = 0.0);

struct EdgeModelOptions {
  int layers = 2;
  double dropout = 0.0;
  double epsilon = 0.3;  // FAGCN residual weight, in [0, 1]
  // Test hooks: pin every edge coefficient to a constant.
  std::optional<double> override_edge_coeff;
  std::optional<double> override_self_weight;
};

ad::Var fagcn_forward(ad::Tape& tape, const BoundParams& params, const Graph& graph,
                      ad::Var features, const EdgeModelOptions& options);

ad::Var rfagnn_forward(ad::Tape& tape, const BoundParams& params, const Graph& graph,
                       ad::Var features, const EdgeModelOptions& options);

/// Averages the learned (alpha, beta, gamma) over nodes/edges into a single
/// closed-form MSGS filter and samples its response.
ResponseCurve extract_equivalent_filter(const ForwardArtifacts& artifacts,
                                        int sample_points = 256);

/// Fraction of connected node pairs whose feature distance shrinks under one
/// application of alpha I + beta D^{-1/2} A D^{-1/2} to Gaussian features.
/// Drives the low-pass/high-pass distance statistics.
double contracted_pair_fraction(const Graph& graph, const Matrix& features,
                                double alpha, double beta, int num_pairs,
                                std::uint64_t seed);

}  // namespace msgs

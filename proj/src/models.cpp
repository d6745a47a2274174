#include "msgs/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msgs/rng.hpp"

namespace msgs {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "msgs") return ModelKind::Msgs;
  if (name == "gcn") return ModelKind::Gcn;
  if (name == "sgc") return ModelKind::Sgc;
  if (name == "fagcn") return ModelKind::Fagcn;
  if (name == "rfagnn") return ModelKind::RfaGnn;
  throw InputError("unknown model kind: " + name);
}

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Msgs: return "msgs";
    case ModelKind::Gcn: return "gcn";
    case ModelKind::Sgc: return "sgc";
    case ModelKind::Fagcn: return "fagcn";
    case ModelKind::RfaGnn: return "rfagnn";
  }
  return "unknown";
}

AblationKind parse_ablation_kind(const std::string& name) {
  if (name == "none") return AblationKind::None;
  if (name == "no-ms") return AblationKind::NoMs;
  if (name == "no-sam-node") return AblationKind::NoSamNode;
  if (name == "no-sam-scale") return AblationKind::NoSamScale;
  throw InputError("unknown ablation kind: " + name);
}

std::string ablation_kind_name(AblationKind kind) {
  switch (kind) {
    case AblationKind::None: return "none";
    case AblationKind::NoMs: return "no-ms";
    case AblationKind::NoSamNode: return "no-sam-node";
    case AblationKind::NoSamScale: return "no-sam-scale";
  }
  return "unknown";
}

namespace {

Matrix xavier(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

}  // namespace

ModelParams init_params(const ModelShape& shape, std::uint64_t seed) {
  if (shape.feature_dim < 1) throw InputError("init_params: feature_dim < 1");
  if (shape.num_classes < 2) throw InputError("init_params: need >= 2 classes");
  Rng rng(derive_seed(seed, kStreamInit));
  ModelParams p;
  const int h = shape.hidden_dim;
  const int m = shape.feature_dim;
  const int c = shape.num_classes;
  const int k = shape.layers;

  auto weight = [&](const std::string& name, int r, int cc) {
    p.tensors[name] = xavier(r, cc, rng);
    p.decay.insert(name);
  };
  auto vec = [&](const std::string& name, int r, int cc) {
    p.tensors[name] = xavier(r, cc, rng);
  };

  switch (shape.kind) {
    case ModelKind::Msgs:
      weight("input_transform", m, h);
      for (int l = 1; l <= k; ++l) weight("layer_" + std::to_string(l), h, h);
      for (int s = 0; s <= k; ++s) {
        vec("g_alpha_" + std::to_string(s), h, 1);
        vec("g_beta_" + std::to_string(s), 2 * h, 1);
        weight("scale_transform_" + std::to_string(s), h, h);
      }
      vec("q", h, 1);
      weight("classifier_w", h, c);
      p.tensors["classifier_b"] = Matrix::Zero(1, c);
      break;
    case ModelKind::Gcn:
      weight("layer_1", m, h);
      for (int l = 2; l <= k; ++l) weight("layer_" + std::to_string(l), h, h);
      weight("classifier_w", h, c);
      p.tensors["classifier_b"] = Matrix::Zero(1, c);
      break;
    case ModelKind::Sgc:
      weight("linear_w", m, c);
      p.tensors["linear_b"] = Matrix::Zero(1, c);
      break;
    case ModelKind::Fagcn:
      weight("input_transform", m, h);
      for (int l = 1; l <= k; ++l) {
        vec("g_edge_" + std::to_string(l), 2 * h, 1);
      }
      weight("classifier_w", h, c);
      p.tensors["classifier_b"] = Matrix::Zero(1, c);
      break;
    case ModelKind::RfaGnn:
      weight("input_transform", m, h);
      for (int l = 1; l <= k; ++l) {
        vec("g_beta_" + std::to_string(l), 2 * h, 1);
        vec("alpha_raw_" + std::to_string(l), 1, 1);
      }
      weight("classifier_w", h, c);
      p.tensors["classifier_b"] = Matrix::Zero(1, c);
      break;
  }
  return p;
}

void save_params(const ModelParams& params, const ModelShape& shape,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write params: " + path);
  out << "msgslab-params v1\n";
  out << "model " << model_kind_name(shape.kind) << "\n";
  out << "features " << shape.feature_dim << "\n";
  out << "hidden " << shape.hidden_dim << "\n";
  out << "classes " << shape.num_classes << "\n";
  out << "layers " << shape.layers << "\n";
  out << "tensors " << params.tensors.size() << "\n";
  for (const auto& [name, tensor] : params.tensors) {
    out << name << " " << tensor.rows() << " " << tensor.cols() << " "
        << (params.decay.count(name) ? 1 : 0) << "\n";
    for (int i = 0; i < tensor.rows(); ++i) {
      for (int j = 0; j < tensor.cols(); ++j) {
        if (j) out << " ";
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", tensor(i, j));
        out << buf;
      }
      out << "\n";
    }
  }
}

LoadedParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open params: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "msgslab-params v1") {
    throw InputError("params: bad header in " + path);
  }
  LoadedParams lp;
  std::string key, model_name;
  std::size_t tensor_count = 0;
  in >> key >> model_name;
  if (key != "model") throw InputError("params: expected model line");
  lp.shape.kind = parse_model_kind(model_name);
  in >> key >> lp.shape.feature_dim;
  in >> key >> lp.shape.hidden_dim;
  in >> key >> lp.shape.num_classes;
  in >> key >> lp.shape.layers;
  in >> key >> tensor_count;
  if (!in || key != "tensors") throw InputError("params: malformed metadata");
  for (std::size_t t = 0; t < tensor_count; ++t) {
    std::string name;
    int rows = 0, cols = 0, decay = 0;
    if (!(in >> name >> rows >> cols >> decay) || rows < 0 || cols < 0) {
      throw InputError("params: malformed tensor header in " + path);
    }
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        if (!(in >> m(i, j))) {
          throw InputError("params: truncated tensor " + name + " in " + path);
        }
      }
    }
    lp.params.tensors[name] = std::move(m);
    if (decay) lp.params.decay.insert(name);
  }
  return lp;
}

ad::Var BoundParams::at(const std::string& name) const {
  const auto it = vars.find(name);
  if (it == vars.end()) throw InputError("missing parameter tensor: " + name);
  return it->second;
}

BoundParams bind(ad::Tape& tape, const ModelParams& params) {
  BoundParams bound;
  for (const auto& [name, tensor] : params.tensors) {
    bound.vars[name] = tape.parameter(tensor);
  }
  return bound;
}

std::map<std::string, Matrix> named_grads(const ad::GradMap& grads,
                                          const BoundParams& bound) {
  std::map<std::string, Matrix> out;
  for (const auto& [name, var] : bound.vars) {
    const auto it = grads.find(var.id);
    out[name] = it != grads.end() ? it->second : Matrix::Zero(var.rows, var.cols);
  }
  return out;
}

namespace {

/// Backbone scale features H^(0..K), with dropout applied to each level.
std::vector<ad::Var> backbone_scales(ad::Tape& t, const BoundParams& p,
                                     const PropagationMatrix& prop, ad::Var x,
                                     const MsgsOptions& opt) {
  ad::Var input = x;
  if (opt.dropout > 0.0) input = ad::dropout(t, input, opt.dropout);
  std::vector<ad::Var> scales;
  scales.push_back(ad::matmul(t, input, p.at("input_transform")));
  for (int l = 1; l <= opt.layers; ++l) {
    ad::Var h = ad::sparse_matmul(t, prop, scales.back());
    h = ad::matmul(t, h, p.at("layer_" + std::to_string(l)));
    if (!opt.linear_backbone) h = ad::relu(t, h);
    if (opt.dropout > 0.0) h = ad::dropout(t, h, opt.dropout);
    scales.push_back(h);
  }
  return scales;
}

}  // namespace

ForwardArtifacts msgs_forward(ad::Tape& t, const BoundParams& p, const Graph& g,
                              const PropagationMatrix& prop, ad::Var x,
                              const MsgsOptions& opt) {
  if (opt.layers < 1 && opt.ablation == AblationKind::None) {
    throw InputError("msgs_forward: K must be >= 1");
  }
  if (opt.layers < 0) throw InputError("msgs_forward: negative K");
  const int n = g.num_nodes;
  if (x.rows != n) throw InputError("msgs_forward: features row count mismatch");

  const DirectedEdges de = directed_edges(g);
  const std::vector<ad::Var> h = backbone_scales(t, p, prop, x, opt);
  const int k_top = opt.layers;

  ForwardArtifacts art;
  std::vector<ad::Var> z(static_cast<std::size_t>(k_top) + 1);

  for (int k = 0; k <= k_top; ++k) {
    const auto ks = std::to_string(k);
    if (opt.ablation == AblationKind::NoSamNode) {
      z[static_cast<std::size_t>(k)] = h[static_cast<std::size_t>(k)];
      art.node_coeffs.push_back(Vector::Ones(n));
      art.edge_coeffs.push_back(Vector::Zero(de.count()));
    } else {
      ad::Var h_agg = ad::sparse_matmul(t, prop, h[static_cast<std::size_t>(k)]);
      ad::Var alpha;
      if (opt.force_alpha_one) {
        alpha = t.constant(Matrix::Ones(n, 1));
      } else {
        ad::Var diff = ad::sub(t, h_agg, h[static_cast<std::size_t>(k)]);
        alpha = ad::sigmoid(t, ad::matmul(t, diff, p.at("g_alpha_" + ks)));
      }
      ad::Var h_src = ad::gather_rows(t, h[static_cast<std::size_t>(k)], de.src);
      ad::Var h_dst = ad::gather_rows(t, h[static_cast<std::size_t>(k)], de.dst);
      ad::Var beta;
      if (opt.force_beta_one) {
        beta = t.constant(Matrix::Ones(de.count(), 1));
      } else {
        ad::Var pair = ad::row_concat(t, h_src, h_dst);
        beta = ad::tanh(t, ad::matmul(t, pair, p.at("g_beta_" + ks)));
      }
      ad::Var weighted = ad::hadamard(t, beta, t.constant(de.norm));
      ad::Var contrib = ad::scatter_add_rows(
          t, ad::row_scale(t, h_dst, weighted), de.src, n);
      z[static_cast<std::size_t>(k)] =
          ad::add(t, ad::row_scale(t, h[static_cast<std::size_t>(k)], alpha),
                  contrib);
      art.node_coeffs.push_back(t.value(alpha).col(0));
      art.edge_coeffs.push_back(t.value(beta).col(0));
    }
    art.scale_embeddings.push_back(t.value(z[static_cast<std::size_t>(k)]));
  }

  // Scale-level combination.
  art.scale_attention = Matrix::Zero(n, k_top + 1);
  ad::Var pooled;
  if (opt.ablation == AblationKind::NoMs) {
    pooled = z[static_cast<std::size_t>(k_top)];
    art.scale_attention.col(k_top).setOnes();
  } else if (opt.ablation == AblationKind::NoSamScale) {
    pooled = z[0];
    for (int k = 1; k <= k_top; ++k) {
      pooled = ad::add(t, pooled, z[static_cast<std::size_t>(k)]);
    }
    pooled = ad::scalar_mul(t, pooled, 1.0 / (k_top + 1));
    art.scale_attention.setConstant(1.0 / (k_top + 1));
  } else if (opt.gamma_onehot_scale) {
    const int k0 = *opt.gamma_onehot_scale;
    if (k0 < 0 || k0 > k_top) throw InputError("msgs_forward: one-hot scale out of range");
    pooled = z[static_cast<std::size_t>(k0)];
    art.scale_attention.col(k0).setOnes();
  } else {
    bool first = true;
    for (int k = 0; k <= k_top; ++k) {
      const auto ks = std::to_string(k);
      ad::Var transformed = ad::tanh(
          t, ad::matmul(t, z[static_cast<std::size_t>(k)],
                        p.at("scale_transform_" + ks)));
      ad::Var gamma = ad::matmul(t, transformed, p.at("q"));
      art.scale_attention.col(k) = t.value(gamma).col(0);
      ad::Var term = ad::row_scale(t, z[static_cast<std::size_t>(k)], gamma);
      pooled = first ? term : ad::add(t, pooled, term);
      first = false;
    }
  }

  ad::Var logits = ad::add(t, ad::matmul(t, pooled, p.at("classifier_w")),
                           ad::broadcast_rows(t, p.at("classifier_b"), n));
  art.logits_var = logits;
  art.logits = t.value(logits);
  return art;
}

ForwardArtifacts ablation_variant(AblationKind kind, ad::Tape& t,
                                  const BoundParams& p, const Graph& g,
                                  const PropagationMatrix& prop, ad::Var x,
                                  MsgsOptions options) {
  if (kind == AblationKind::None) {
    throw InputError("ablation_variant: pick NoMs, NoSamNode, or NoSamScale");
  }
  options.ablation = kind;
  return msgs_forward(t, p, g, prop, x, options);
}

ad::Var gcn_forward(ad::Tape& t, const BoundParams& p, const PropagationMatrix& prop,
                    ad::Var x, int layers, double dropout_rate) {
  if (layers < 1) throw InputError("gcn_forward: K must be >= 1");
  ad::Var h = x;
  if (dropout_rate > 0.0) h = ad::dropout(t, h, dropout_rate);
  for (int l = 1; l <= layers; ++l) {
    h = ad::sparse_matmul(t, prop, h);
    h = ad::matmul(t, h, p.at("layer_" + std::to_string(l)));
    h = ad::relu(t, h);
    if (dropout_rate > 0.0) h = ad::dropout(t, h, dropout_rate);
  }
  const int n = h.rows;
  return ad::add(t, ad::matmul(t, h, p.at("classifier_w")),
                 ad::broadcast_rows(t, p.at("classifier_b"), n));
}

ad::Var sgc_forward(ad::Tape& t, const BoundParams& p, const PropagationMatrix& prop,
                    ad::Var x, int hops, double dropout_rate) {
  if (hops < 0) throw InputError("sgc_forward: K must be >= 0");
  ad::Var h = x;
  if (dropout_rate > 0.0) h = ad::dropout(t, h, dropout_rate);
  for (int l = 0; l < hops; ++l) h = ad::sparse_matmul(t, prop, h);
  const int n = h.rows;
  return ad::add(t, ad::matmul(t, h, p.at("linear_w")),
                 ad::broadcast_rows(t, p.at("linear_b"), n));
}

namespace {

/// Shared edge-attention layer stack for FAGCN and RFA-GNN:
/// h_i <- self_weight * h_i + sum_j coeff_{i,j} h_j / sqrt(d_i d_j).
ad::Var edge_attention_stack(ad::Tape& t, const BoundParams& p, const Graph& g,
                             ad::Var x, const EdgeModelOptions& opt,
                             const std::string& edge_vec_prefix, bool learned_self) {
  const int n = g.num_nodes;
  const DirectedEdges de = directed_edges(g);

  ad::Var h = x;
  if (opt.dropout > 0.0) h = ad::dropout(t, h, opt.dropout);
  h = ad::relu(t, ad::matmul(t, h, p.at("input_transform")));
  for (int l = 1; l <= opt.layers; ++l) {
    const auto ls = std::to_string(l);
    ad::Var coeff;
    if (opt.override_edge_coeff) {
      coeff = t.constant(Matrix::Constant(de.count(), 1, *opt.override_edge_coeff));
    } else {
      ad::Var h_src = ad::gather_rows(t, h, de.src);
      ad::Var h_dst = ad::gather_rows(t, h, de.dst);
      ad::Var pair = ad::row_concat(t, h_src, h_dst);
      coeff = ad::tanh(t, ad::matmul(t, pair, p.at(edge_vec_prefix + ls)));
    }
    ad::Var weighted = ad::hadamard(t, coeff, t.constant(de.norm));
    ad::Var h_dst_again = ad::gather_rows(t, h, de.dst);
    ad::Var contrib =
        ad::scatter_add_rows(t, ad::row_scale(t, h_dst_again, weighted), de.src, n);

    ad::Var self;
    if (opt.override_self_weight) {
      self = ad::scalar_mul(t, h, *opt.override_self_weight);
    } else if (learned_self) {
      ad::Var alpha = ad::sigmoid(t, p.at("alpha_raw_" + ls));
      self = ad::row_scale(t, h, ad::broadcast_rows(t, alpha, n));
    } else {
      self = ad::scalar_mul(t, h, opt.epsilon);
    }
    h = ad::add(t, self, contrib);
    if (opt.dropout > 0.0) h = ad::dropout(t, h, opt.dropout);
  }
  return ad::add(t, ad::matmul(t, h, p.at("classifier_w")),
                 ad::broadcast_rows(t, p.at("classifier_b"), n));
}

}  // namespace

ad::Var fagcn_forward(ad::Tape& t, const BoundParams& p, const Graph& g, ad::Var x,
                      const EdgeModelOptions& opt) {
  if (opt.layers < 1) throw InputError("fagcn_forward: K must be >= 1");
  if (!(opt.epsilon >= 0.0 && opt.epsilon <= 1.0)) {
    throw InputError("fagcn_forward: epsilon outside [0, 1]");
  }
  return edge_attention_stack(t, p, g, x, opt, "g_edge_", false);
}

ad::Var rfagnn_forward(ad::Tape& t, const BoundParams& p, const Graph& g, ad::Var x,
                       const EdgeModelOptions& opt) {
  if (opt.layers < 1) throw InputError("rfagnn_forward: K must be >= 1");
  return edge_attention_stack(t, p, g, x, opt, "g_beta_", true);
}

ResponseCurve extract_equivalent_filter(const ForwardArtifacts& artifacts,
                                        int sample_points) {
  const int k_top = static_cast<int>(artifacts.scale_embeddings.size()) - 1;
  if (k_top < 1) throw InputError("extract_equivalent_filter: need K >= 1");
  std::vector<FilterSpec::Scale> scales;
  scales.reserve(static_cast<std::size_t>(k_top) + 1);
  for (int k = 0; k <= k_top; ++k) {
    FilterSpec::Scale s;
    s.alpha = artifacts.node_coeffs[static_cast<std::size_t>(k)].mean();
    const auto& betas = artifacts.edge_coeffs[static_cast<std::size_t>(k)];
    s.beta = betas.size() > 0 ? betas.mean() : 0.0;
    s.gamma = artifacts.scale_attention.col(k).mean();
    // Means of sigmoid/tanh outputs stay inside the open boxes; clamp only
    // the NoSamNode fixture where alpha is exactly 1.
    s.alpha = std::min(s.alpha, 1.0);
    scales.push_back(s);
  }
  return response_closed_form(FilterSpec::msgs(std::move(scales)),
                              response_grid(sample_points));
}

double contracted_pair_fraction(const Graph& graph, const Matrix& features,
                                double alpha, double beta, int num_pairs,
                                std::uint64_t seed) {
  if (graph.edges.empty()) throw InputError("contracted_pair_fraction: no edges");
  const PropagationMatrix prop =
      propagation_matrix(graph, PropagationKind::PlainNormalizedAdjacency);
  const Matrix transformed = alpha * features + beta * (prop.matrix * features);
  Rng rng(seed);
  int contracted = 0;
  for (int s = 0; s < num_pairs; ++s) {
    const auto& [i, j] =
        graph.edges[static_cast<std::size_t>(rng.uniform_int(
            static_cast<int>(graph.edges.size())))];
    const double before = (features.row(i) - features.row(j)).norm();
    const double after = (transformed.row(i) - transformed.row(j)).norm();
    if (after < before) ++contracted;
  }
  return static_cast<double>(contracted) / num_pairs;
}

}  // namespace msgs

#include "mgr/gcn.hpp"

#include <algorithm>
#include <cmath>

#include "mgr/error.hpp"

namespace mgr {

namespace {

struct Preset {
  const char* name;
  Variant variant;
};

const std::vector<Preset>& presets() {
  static const std::vector<Preset> kPresets = {
      {"global", {true, false, false, true}},      {"pog-no-pose", {false, true, false, false}},
      {"pog", {false, true, false, true}},         {"pog+ppg", {false, true, true, true}},
      {"global+pog", {true, true, false, true}},   {"mgr", {true, true, true, true}},
  };
  return kPresets;
}

// Activations of one GCN stack, kept for the backward pass.
struct BranchTrace {
  std::vector<Matrix> propagated;  // norm_adj * X_l
  std::vector<Matrix> pre_act;     // norm_adj * X_l * W_l
  Matrix pooled;
};

BranchTrace branch_forward(const PreparedGraph& g, const std::vector<Matrix>& layers) {
  BranchTrace t;
  Matrix x = g.features;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix ax = matmul(g.norm_adj, x);
    Matrix z = matmul(ax, layers[l]);
    x = (l + 1 < layers.size()) ? relu(z) : z;
    t.propagated.push_back(std::move(ax));
    t.pre_act.push_back(std::move(z));
  }
  t.pooled = pool_nodes(x);
  return t;
}

void branch_backward(const PreparedGraph& g, const std::vector<Matrix>& layers, const BranchTrace& t,
                     std::span<const double> d_pooled, std::vector<Matrix>& d_layers) {
  const std::size_t n = g.norm_adj.rows();
  Matrix d_out(n, d_pooled.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d_pooled.size(); ++c) d_out(i, c) = d_pooled[c] / static_cast<double>(n);

  for (std::size_t l = layers.size(); l-- > 0;) {
    Matrix dz = (l + 1 < layers.size()) ? relu_backward(t.pre_act[l], d_out) : std::move(d_out);
    d_layers[l] += matmul_tn(t.propagated[l], dz);
    if (l == 0) break;
    Matrix d_ax = matmul_nt(dz, layers[l]);
    d_out = matmul_tn(g.norm_adj, d_ax);
  }
}

std::vector<double> affine(const Matrix& h, const Matrix& w, const Matrix& b) {
  Matrix out = matmul(h, w);
  out += b;
  return out.data();
}

void check_features(const PreparedGraph& g, const std::vector<Matrix>& layers, const char* branch) {
  if (layers.empty()) return;
  if (g.features.cols() != layers.front().rows())
    throw ShapeError(std::string(branch) + " feature dim " + std::to_string(g.features.cols()) +
                     " != layer input " + std::to_string(layers.front().rows()));
}

}  // namespace

Variant parse_variant(const std::string& name) {
  for (const auto& p : presets())
    if (name == p.name) return p.variant;
  throw ConfigError("unknown variant '" + name + "'");
}

std::string variant_name(const Variant& v) {
  for (const auto& p : presets())
    if (p.variant == v) return p.name;
  return "custom";
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    for (const auto& p : presets()) names.emplace_back(p.name);
    return names;
  }();
  return kNames;
}

std::size_t ModelShape::graph_feature_dim() const {
  std::size_t d = 0;
  if (variant.use_pog) d += pog_hidden.empty() ? pog_in : pog_hidden.back();
  if (variant.use_ppg) d += ppg_hidden.empty() ? ppg_in : ppg_hidden.back();
  return d;
}

ModelParams ModelParams::initialize(const ModelShape& shape, std::mt19937_64& rng) {
  if (shape.classes < 2) throw ConfigError("need at least two classes");
  if (!shape.variant.use_global && !shape.variant.has_graph_head())
    throw ConfigError("variant enables no branch");

  ModelParams p;
  auto stack = [&](std::size_t in, const std::vector<std::size_t>& dims) {
    std::vector<Matrix> layers;
    for (std::size_t d : dims) {
      layers.push_back(glorot_init(in, d, rng));
      in = d;
    }
    return layers;
  };
  if (shape.variant.use_pog) p.pog_layers = stack(shape.pog_in, shape.pog_hidden);
  if (shape.variant.use_ppg) p.ppg_layers = stack(shape.ppg_in, shape.ppg_hidden);
  if (shape.variant.has_graph_head()) {
    p.classifier = glorot_init(shape.graph_feature_dim(), shape.classes, rng);
    p.classifier_bias = Matrix(1, shape.classes);
  }
  if (shape.variant.use_global) {
    p.global_classifier = glorot_init(shape.global_in, shape.classes, rng);
    p.global_bias = Matrix(1, shape.classes);
  }
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (Matrix* m : z.tensors()) std::fill(m->data().begin(), m->data().end(), 0.0);
  return z;
}

std::vector<std::pair<std::string, Matrix*>> ModelParams::named() {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (std::size_t l = 0; l < pog_layers.size(); ++l) out.emplace_back("pog." + std::to_string(l), &pog_layers[l]);
  for (std::size_t l = 0; l < ppg_layers.size(); ++l) out.emplace_back("ppg." + std::to_string(l), &ppg_layers[l]);
  if (!classifier.empty()) {
    out.emplace_back("classifier.weight", &classifier);
    out.emplace_back("classifier.bias", &classifier_bias);
  }
  if (!global_classifier.empty()) {
    out.emplace_back("global.weight", &global_classifier);
    out.emplace_back("global.bias", &global_bias);
  }
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : const_cast<ModelParams*>(this)->named()) out.emplace_back(name, m);
  return out;
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out;
  for (auto& [name, m] : named()) out.push_back(m);
  return out;
}

Variant ModelParams::variant() const {
  // Gating is a graph-construction choice and is not visible in the tensors.
  return Variant{!global_classifier.empty(), !pog_layers.empty(), !ppg_layers.empty(), true};
}

std::size_t ModelParams::classes() const {
  return classifier.empty() ? global_classifier.cols() : classifier.cols();
}

Matrix normalize_adjacency(const Matrix& adjacency, bool add_self_loops) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("adjacency must be square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!(adjacency(i, j) >= 0.0)) throw InvalidInput("adjacency weights must be non-negative");
      if (adjacency(i, j) != adjacency(j, i)) throw InvalidInput("adjacency must be symmetric");
    }

  Matrix a = adjacency;
  if (add_self_loops)
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;

  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
    if (!(deg[i] > 0.0)) throw SingularDegree("node " + std::to_string(i) + " has zero degree");
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) != 0.0) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

Matrix gcn_layer_forward(const Matrix& norm_adj, const Matrix& x, const Matrix& weight, bool apply_activation) {
  if (norm_adj.rows() != norm_adj.cols() || norm_adj.cols() != x.rows())
    throw ShapeError("gcn layer: adjacency does not match node count");
  Matrix z = matmul(matmul(norm_adj, x), weight);
  return apply_activation ? relu(z) : z;
}

Matrix pool_nodes(const Matrix& x) {
  if (x.rows() == 0) throw InvalidInput("cannot pool an empty node set");
  Matrix out(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(0, c) += x(r, c);
  out *= 1.0 / static_cast<double>(x.rows());
  return out;
}

PreparedGraph PreparedGraph::from(const RelationGraph& g) {
  if (g.features.rows() != g.adjacency.rows()) throw ShapeError("graph features do not match node count");
  return PreparedGraph{normalize_adjacency(g.adjacency), g.features};
}

namespace {

struct FullTrace {
  BranchTrace pog;
  BranchTrace ppg;
  Matrix graph_input;
  Logits logits;
};

FullTrace run_forward(const Example& ex, const ModelParams& params) {
  FullTrace t;
  const bool pog = !params.pog_layers.empty();
  const bool ppg = !params.ppg_layers.empty();
  if (pog) {
    check_features(ex.pog, params.pog_layers, "pog");
    t.pog = branch_forward(ex.pog, params.pog_layers);
  }
  if (ppg) {
    check_features(ex.ppg, params.ppg_layers, "ppg");
    t.ppg = branch_forward(ex.ppg, params.ppg_layers);
  }
  if (!params.classifier.empty()) {
    std::vector<double> h;
    if (pog) h.insert(h.end(), t.pog.pooled.data().begin(), t.pog.pooled.data().end());
    if (ppg) h.insert(h.end(), t.ppg.pooled.data().begin(), t.ppg.pooled.data().end());
    t.graph_input = Matrix::row_vector(h);
    t.logits.graph = affine(t.graph_input, params.classifier, params.classifier_bias);
  }
  if (!params.global_classifier.empty()) {
    if (ex.global.rows() != 1 || ex.global.cols() != params.global_classifier.rows())
      throw ShapeError("global feature dim does not match the global classifier");
    t.logits.global = affine(ex.global, params.global_classifier, params.global_bias);
  }
  return t;
}

}  // namespace

Logits forward_prepared(const Example& example, const ModelParams& params) {
  return run_forward(example, params).logits;
}

Logits forward_instance(const RelationGraph& pog, const RelationGraph& ppg, const Matrix& global_feature,
                        const ModelParams& params) {
  Example ex;
  if (!params.pog_layers.empty()) ex.pog = PreparedGraph::from(pog);
  if (!params.ppg_layers.empty()) ex.ppg = PreparedGraph::from(ppg);
  ex.global = global_feature;
  return forward_prepared(ex, params);
}

LossAndGrad loss_and_gradient(const Example& example, const ModelParams& params) {
  FullTrace t = run_forward(example, params);
  LossAndGrad out;
  out.grad = params.zeros_like();

  if (!t.logits.graph.empty()) {
    const auto ce = softmax_cross_entropy(t.logits.graph, example.label);
    out.loss += ce.loss;
    const Matrix d_logits = Matrix::row_vector(ce.grad_logits);
    out.grad.classifier += matmul_tn(t.graph_input, d_logits);
    out.grad.classifier_bias += d_logits;
    const Matrix d_input = matmul_nt(d_logits, params.classifier);
    std::span<const double> d_h(d_input.data());
    if (!params.pog_layers.empty()) {
      const std::size_t w = t.pog.pooled.cols();
      branch_backward(example.pog, params.pog_layers, t.pog, d_h.first(w), out.grad.pog_layers);
      d_h = d_h.subspan(w);
    }
    if (!params.ppg_layers.empty())
      branch_backward(example.ppg, params.ppg_layers, t.ppg, d_h, out.grad.ppg_layers);
  }
  if (!t.logits.global.empty()) {
    const auto ce = softmax_cross_entropy(t.logits.global, example.label);
    out.loss += ce.loss;
    const Matrix d_logits = Matrix::row_vector(ce.grad_logits);
    out.grad.global_classifier += matmul_tn(example.global, d_logits);
    out.grad.global_bias += d_logits;
  }
  out.logits = std::move(t.logits);
  return out;
}

double total_loss(const Example& example, const ModelParams& params) {
  const Logits l = forward_prepared(example, params);
  double loss = 0.0;
  if (!l.graph.empty()) loss += softmax_cross_entropy(l.graph, example.label).loss;
  if (!l.global.empty()) loss += softmax_cross_entropy(l.global, example.label).loss;
  return loss;
}

std::vector<double> fuse_scores(std::span<const double> global_probs, std::span<const double> graph_probs,
                                double w_global, double w_graph) {
  if (global_probs.size() != graph_probs.size()) throw ShapeError("fusion inputs differ in length");
  if (!(w_global >= 0.0) || !(w_graph >= 0.0)) throw ConfigError("fusion weights must be non-negative");
  if (std::abs(w_global + w_graph - 1.0) > 1e-9) throw ConfigError("fusion weights must sum to 1");
  std::vector<double> out(global_probs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w_global * global_probs[i] + w_graph * graph_probs[i];
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace mgr

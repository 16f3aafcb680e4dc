#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mgr/graph_model.hpp"
#include "mgr/numerics.hpp"

namespace mgr {

/// Which branches a model carries. Named presets:
/// global, pog-no-pose, pog, pog+ppg, global+pog, mgr.
struct Variant {
  bool use_global = true;
  bool use_pog = true;
  bool use_ppg = true;
  bool pose_gating = true;

  bool has_graph_head() const { return use_pog || use_ppg; }
  bool fused() const { return use_global && has_graph_head(); }

  friend bool operator==(const Variant&, const Variant&) = default;
};

/// Throws ConfigError for an unknown name.
Variant parse_variant(const std::string& name);
/// Preset name, or "custom" when the flags match none.
std::string variant_name(const Variant& v);
const std::vector<std::string>& variant_names();

struct ModelShape {
  std::size_t pog_in = 2048;
  std::vector<std::size_t> pog_hidden{256, 256};
  std::size_t ppg_in = kKeypointFeatureDim;
  std::vector<std::size_t> ppg_hidden{64, 64};
  std::size_t global_in = 2048;
  std::size_t classes = 6;
  Variant variant;

  /// Width of the concatenated pooled vector fed to the graph classifier.
  std::size_t graph_feature_dim() const;
};

/// All trainable tensors. Disabled branches hold empty layer lists and empty
/// matrices. The same struct doubles as a gradient container.
struct ModelParams {
  std::vector<Matrix> pog_layers;
  std::vector<Matrix> ppg_layers;
  Matrix classifier;
  Matrix classifier_bias;
  Matrix global_classifier;
  Matrix global_bias;
  std::uint64_t seed = 0;

  /// Draw order: pog layers, ppg layers, classifier, global classifier.
  /// Biases start at zero.
  static ModelParams initialize(const ModelShape& shape, std::mt19937_64& rng);
  ModelParams zeros_like() const;

  /// Present tensors in a fixed order with stable names ("pog.0", "classifier.bias", ...).
  std::vector<std::pair<std::string, Matrix*>> named();
  std::vector<std::pair<std::string, const Matrix*>> named() const;
  std::vector<Matrix*> tensors();

  Variant variant() const;
  std::size_t classes() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// D^-1/2 (A + I) D^-1/2 with self-loops, D^-1/2 A D^-1/2 without.
Matrix normalize_adjacency(const Matrix& adjacency, bool add_self_loops = true);

/// sigma(norm_adj * X * W); sigma is ReLU when apply_activation, identity otherwise.
Matrix gcn_layer_forward(const Matrix& norm_adj, const Matrix& x, const Matrix& weight, bool apply_activation);

/// Column-wise mean over nodes, as a 1 x d row.
Matrix pool_nodes(const Matrix& x);

/// A graph with its normalized adjacency computed once.
struct PreparedGraph {
  Matrix norm_adj;
  Matrix features;

  static PreparedGraph from(const RelationGraph& g);
};

/// Everything one training or evaluation step needs for a labeled pair.
struct Example {
  PreparedGraph pog;
  PreparedGraph ppg;
  Matrix global;  ///< 1 x d_global
  std::size_t label = 0;
};

struct Logits {
  std::vector<double> graph;   ///< empty without a graph head
  std::vector<double> global;  ///< empty without the global head
};

Logits forward_instance(const RelationGraph& pog, const RelationGraph& ppg, const Matrix& global_feature,
                        const ModelParams& params);
Logits forward_prepared(const Example& example, const ModelParams& params);

struct LossAndGrad {
  double loss = 0.0;  ///< graph-head CE + global-head CE over enabled heads
  ModelParams grad;
  Logits logits;
};

/// Forward pass plus hand-derived backward pass for one example.
LossAndGrad loss_and_gradient(const Example& example, const ModelParams& params);
double total_loss(const Example& example, const ModelParams& params);

/// w_global * global_probs + w_graph * graph_probs. Throws ConfigError if the
/// weights are negative or do not sum to 1 within 1e-9.
std::vector<double> fuse_scores(std::span<const double> global_probs, std::span<const double> graph_probs,
                                double w_global, double w_graph);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

}  // namespace mgr

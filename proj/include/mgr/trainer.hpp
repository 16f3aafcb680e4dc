#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgr/feature_store.hpp"
#include "mgr/gcn.hpp"
#include "mgr/graph_model.hpp"
#include "mgr/scene.hpp"

namespace mgr {

struct TrainConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_period_epochs = 20;
  std::size_t epochs = 60;
  std::size_t batch_size = 16;
  double weight_decay = 0.0;
  double fusion_weight_global = 0.4;
  double fusion_weight_graph = 0.6;
  Variant variant;
  std::uint64_t seed = 0;
  double dilation = 0.0;
  double min_keypoint_confidence = 0.0;
  std::vector<std::size_t> pog_hidden{256, 256};
  std::vector<std::size_t> ppg_hidden{64, 64};
  /// Worker threads for per-example forward/backward inside a batch. Gradients
  /// are always summed in example order, so results do not depend on this.
  std::size_t threads = 1;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  GraphOptions graph_options() const;
  /// lr0 * factor^floor(epoch / period), epochs counted from 0.
  double learning_rate(std::size_t epoch) const;
};

nlohmann::json to_json(const TrainConfig& config);
/// Overlays the keys present in `j` onto `base`; unknown keys are a ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// One labeled pair inside a scene.
struct Sample {
  const Scene* scene = nullptr;
  RelationInstance instance;
};

/// Builds both graphs (when the variant needs them) and looks up the global feature.
Example build_example(const Scene& scene, const RelationInstance& instance, const FeatureStore& store,
                      const TrainConfig& config);

struct EpochStats {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> history;
  /// Mean off-diagonal POG density over the cached training graphs (0 without a POG branch).
  double mean_pog_density = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch SGD with momentum on the summed graph-head and global-head
/// cross-entropy. One mt19937_64 seeded from config.seed drives parameter
/// initialization first, then one shuffle per epoch.
TrainResult train(const std::vector<Sample>& dataset, const FeatureStore& store, std::size_t num_classes,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

struct Prediction {
  std::vector<double> probs;
  std::size_t predicted = 0;
};

/// Softmax per enabled head, fused with the configured weights when both heads exist.
Prediction predict_logits(const Logits& logits, const TrainConfig& config);
Prediction predict(const Scene& scene, const RelationInstance& instance, const FeatureStore& store,
                   const ModelParams& params, const TrainConfig& config);

}  // namespace mgr

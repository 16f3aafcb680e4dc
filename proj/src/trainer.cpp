#include "mgr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "mgr/error.hpp"

namespace mgr {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (!(lr_decay_factor > 0.0)) throw ConfigError("lr_decay_factor must be positive");
  if (lr_decay_period_epochs == 0) throw ConfigError("lr_decay_period_epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(fusion_weight_global >= 0.0) || !(fusion_weight_graph >= 0.0))
    throw ConfigError("fusion weights must be non-negative");
  if (std::abs(fusion_weight_global + fusion_weight_graph - 1.0) > 1e-9)
    throw ConfigError("fusion weights must sum to 1");
  if (!(dilation >= 0.0)) throw ConfigError("dilation must be non-negative");
  if (!(min_keypoint_confidence >= 0.0 && min_keypoint_confidence <= 1.0))
    throw ConfigError("min_keypoint_confidence must lie in [0,1]");
  if (!variant.use_global && !variant.has_graph_head()) throw ConfigError("variant enables no branch");
  for (std::size_t d : pog_hidden)
    if (d == 0) throw ConfigError("pog_hidden widths must be positive");
  for (std::size_t d : ppg_hidden)
    if (d == 0) throw ConfigError("ppg_hidden widths must be positive");
  if (threads == 0) throw ConfigError("threads must be positive");
}

GraphOptions TrainConfig::graph_options() const {
  return GraphOptions{dilation, min_keypoint_confidence, variant.pose_gating};
}

double TrainConfig::learning_rate(std::size_t epoch) const {
  return lr0 * std::pow(lr_decay_factor, static_cast<double>(epoch / lr_decay_period_epochs));
}

nlohmann::json to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"lr0", c.lr0},
      {"momentum", c.momentum},
      {"lr_decay_factor", c.lr_decay_factor},
      {"lr_decay_period_epochs", c.lr_decay_period_epochs},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"weight_decay", c.weight_decay},
      {"fusion_weight_global", c.fusion_weight_global},
      {"fusion_weight_graph", c.fusion_weight_graph},
      {"variant", variant_name(c.variant)},
      {"use_global", c.variant.use_global},
      {"use_pog", c.variant.use_pog},
      {"use_ppg", c.variant.use_ppg},
      {"pose_gating_on", c.variant.pose_gating},
      {"seed", c.seed},
      {"dilation", c.dilation},
      {"min_keypoint_confidence", c.min_keypoint_confidence},
      {"pog_hidden", c.pog_hidden},
      {"ppg_hidden", c.ppg_hidden},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  try {
    // A named variant is applied first so individual flags can refine it.
    if (j.contains("variant") && j.at("variant").get<std::string>() != "custom")
      c.variant = parse_variant(j.at("variant").get<std::string>());
    for (const auto& [key, value] : j.items()) {
      if (key == "variant") continue;
      else if (key == "lr0") c.lr0 = value.get<double>();
      else if (key == "momentum") c.momentum = value.get<double>();
      else if (key == "lr_decay_factor") c.lr_decay_factor = value.get<double>();
      else if (key == "lr_decay_period_epochs") c.lr_decay_period_epochs = value.get<std::size_t>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "fusion_weight_global") c.fusion_weight_global = value.get<double>();
      else if (key == "fusion_weight_graph") c.fusion_weight_graph = value.get<double>();
      else if (key == "use_global") c.variant.use_global = value.get<bool>();
      else if (key == "use_pog") c.variant.use_pog = value.get<bool>();
      else if (key == "use_ppg") c.variant.use_ppg = value.get<bool>();
      else if (key == "pose_gating_on") c.variant.pose_gating = value.get<bool>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "dilation") c.dilation = value.get<double>();
      else if (key == "min_keypoint_confidence") c.min_keypoint_confidence = value.get<double>();
      else if (key == "pog_hidden") c.pog_hidden = value.get<std::vector<std::size_t>>();
      else if (key == "ppg_hidden") c.ppg_hidden = value.get<std::vector<std::size_t>>();
      else if (key == "threads") c.threads = value.get<std::size_t>();
      else throw ConfigError("unknown training config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  return c;
}

Example build_example(const Scene& scene, const RelationInstance& instance, const FeatureStore& store,
                      const TrainConfig& config) {
  Example ex;
  ex.label = instance.label;
  const GraphOptions opts = config.graph_options();
  if (config.variant.use_pog) ex.pog = PreparedGraph::from(build_pog(scene, instance, store, opts));
  if (config.variant.use_ppg) ex.ppg = PreparedGraph::from(build_ppg(scene, instance, opts));
  if (config.variant.use_global) ex.global = store.row_matrix(scene.global_feature_ref);
  return ex;
}

Prediction predict_logits(const Logits& logits, const TrainConfig& config) {
  Prediction p;
  if (!logits.graph.empty() && !logits.global.empty()) {
    p.probs = fuse_scores(softmax(logits.global), softmax(logits.graph), config.fusion_weight_global,
                          config.fusion_weight_graph);
  } else if (!logits.graph.empty()) {
    p.probs = softmax(logits.graph);
  } else {
    p.probs = softmax(logits.global);
  }
  p.predicted = argmax(p.probs);
  return p;
}

Prediction predict(const Scene& scene, const RelationInstance& instance, const FeatureStore& store,
                   const ModelParams& params, const TrainConfig& config) {
  return predict_logits(forward_prepared(build_example(scene, instance, store, config), params), config);
}

namespace {

ModelShape infer_shape(const std::vector<Example>& examples, std::size_t num_classes, const TrainConfig& config) {
  ModelShape shape;
  shape.classes = num_classes;
  shape.variant = config.variant;
  shape.pog_hidden = config.pog_hidden;
  shape.ppg_hidden = config.ppg_hidden;
  const Example& first = examples.front();
  if (config.variant.use_pog) shape.pog_in = first.pog.features.cols();
  if (config.variant.use_ppg) shape.ppg_in = first.ppg.features.cols();
  if (config.variant.use_global) shape.global_in = first.global.cols();
  for (const Example& ex : examples) {
    if (config.variant.use_pog && ex.pog.features.cols() != shape.pog_in)
      throw DataError("inconsistent region feature dimension across the dataset");
    if (config.variant.use_global && ex.global.cols() != shape.global_in)
      throw DataError("inconsistent global feature dimension across the dataset");
  }
  return shape;
}

// Runs loss_and_gradient over [begin, end) of `order`, split across threads.
// Results land in per-example slots so the caller can reduce in a fixed order.
void run_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& order, std::size_t begin,
               std::size_t end, const ModelParams& params, std::size_t threads, std::vector<LossAndGrad>& out) {
  const std::size_t count = end - begin;
  out.resize(count);
  const std::size_t workers = std::min(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = loss_and_gradient(examples[order[begin + i]], params);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers)
          out[i] = loss_and_gradient(examples[order[begin + i]], params);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

TrainResult train(const std::vector<Sample>& dataset, const FeatureStore& store, std::size_t num_classes,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.empty()) throw InvalidInput("training dataset is empty");
  if (num_classes < 2) throw InvalidInput("need at least two classes");

  std::vector<Example> examples;
  examples.reserve(dataset.size());
  double density_sum = 0.0;
  for (const Sample& s : dataset) {
    if (s.scene == nullptr) throw InvalidInput("sample without scene");
    if (s.instance.label >= num_classes)
      throw InvalidInput("label " + std::to_string(s.instance.label) + " >= class count " +
                         std::to_string(num_classes));
    examples.push_back(build_example(*s.scene, s.instance, store, config));
    if (config.variant.use_pog) {
      density_sum += adjacency_density(build_pog(*s.scene, s.instance, store, config.graph_options()).adjacency);
    }
  }

  TrainResult result;
  if (config.variant.use_pog) result.mean_pog_density = density_sum / static_cast<double>(examples.size());

  std::mt19937_64 rng(config.seed);
  result.params = ModelParams::initialize(infer_shape(examples, num_classes, config), rng);
  result.params.seed = config.seed;

  OptimizerState opt;
  std::vector<std::size_t> order(examples.size());
  std::vector<LossAndGrad> batch_results;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Fisher-Yates with explicit draws so the sequence only depends on mt19937_64.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      run_batch(examples, order, begin, end, result.params, config.threads, batch_results);

      ModelParams grad = result.params.zeros_like();
      auto grad_tensors = grad.tensors();
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < batch_results.size(); ++i) {
        LossAndGrad& r = batch_results[i];
        batch_loss += r.loss;
        auto parts = r.grad.tensors();
        for (std::size_t t = 0; t < grad_tensors.size(); ++t) *grad_tensors[t] += *parts[t];
        if (predict_logits(r.logits, config).predicted == examples[order[begin + i]].label) ++correct;
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", batch " << batch_index << " (lr " << lr << ")";
        throw TrainingDiverged(os.str());
      }
      loss_sum += batch_loss;

      const double scale = 1.0 / static_cast<double>(end - begin);
      auto params = result.params.tensors();
      std::vector<Matrix> grads;
      grads.reserve(grad_tensors.size());
      for (std::size_t t = 0; t < grad_tensors.size(); ++t) {
        Matrix g = *grad_tensors[t] * scale;
        if (config.weight_decay > 0.0) g += *params[t] * config.weight_decay;
        grads.push_back(std::move(g));
      }
      sgd_momentum_step(params, grads, opt, lr, config.momentum);
    }

    EpochStats stats{epoch, lr, loss_sum / static_cast<double>(examples.size()),
                     static_cast<double>(correct) / static_cast<double>(examples.size())};
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace mgr

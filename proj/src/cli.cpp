#include "mgr/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "mgr/checkpoint.hpp"
#include "mgr/dataset.hpp"
#include "mgr/error.hpp"
#include "mgr/metrics.hpp"
#include "mgr/synthetic.hpp"

namespace mgr {

using nlohmann::json;
namespace fs = std::filesystem;

nlohmann::json RunConfig::to_json() const {
  json j = mgr::to_json(train);
  j["train_manifest"] = train_manifest;
  j["val_manifest"] = val_manifest;
  j["test_manifest"] = test_manifest;
  j["checkpoint"] = checkpoint;
  j["report"] = report;
  j["out"] = out;
  return j;
}

void RunConfig::apply_file(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  json rest = j;
  auto take = [&](const char* key, std::string& dst) {
    if (!rest.contains(key)) return;
    if (!rest[key].is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    dst = rest[key].get<std::string>();
    rest.erase(key);
  };
  take("train_manifest", train_manifest);
  take("val_manifest", val_manifest);
  take("test_manifest", test_manifest);
  take("checkpoint", checkpoint);
  take("report", report);
  take("out", out);
  rest.erase("synthetic");
  train = train_config_from_json(rest, train);
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

std::pair<std::size_t, std::size_t> parse_pair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("--pair expects A,B");
  try {
    return {std::stoul(text.substr(0, comma)), std::stoul(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ConfigError("--pair expects two non-negative integers, got '" + text + "'");
  }
}

// Options shared by the training-related subcommands, bound to optionals so
// only flags given on the command line override the config file.
struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> out;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "Seed for every random draw");
    app.add_option("--variant", variant, "global | pog-no-pose | pog | pog+ppg | global+pog | mgr")
        ->check(CLI::IsMember(variant_names()));
    app.add_option("--out", out, "Output directory");
  }

  RunConfig resolve() const {
    RunConfig rc;
    if (!config_path.empty()) rc.apply_file(read_json_file(config_path));
    if (seed) rc.train.seed = *seed;
    if (variant) rc.train.variant = parse_variant(*variant);
    if (out) rc.out = *out;
    return rc;
  }
};

std::vector<Prediction> predict_all(const Dataset& data, const Checkpoint& ck) {
  std::vector<Prediction> out;
  for (const Sample& s : data.samples()) {
    const Example ex = build_example(*s.scene, s.instance, data.features, ck.config);
    out.push_back(predict_logits(forward_prepared(ex, ck.params), ck.config));
  }
  return out;
}

std::string class_name(const std::vector<std::string>& names, std::size_t c) {
  return c < names.size() ? names[c] : "class_" + std::to_string(c);
}

void print_matrix(std::ostream& os, const Matrix& m) {
  os << std::fixed << std::setprecision(4);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    os << "  ";
    for (std::size_t c = 0; c < m.cols(); ++c) os << (c ? " " : "") << m(r, c);
    os << '\n';
  }
  os << std::defaultfloat;
}

void print_graph(std::ostream& os, const std::string& title, const RelationGraph& g) {
  os << title << ": " << g.node_count() << " nodes, density " << adjacency_density(g.adjacency) << '\n';
  os << "nodes:\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) os << "  " << i << " " << g.nodes[i].label() << '\n';
  os << "adjacency:\n";
  print_matrix(os, g.adjacency);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pose-guided multi-granularity social relation recognition", "mgr"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Write synthetic train/val/test manifests");
  CommonFlags gen_flags;
  gen_flags.attach(*gen);
  std::optional<std::size_t> gen_classes, gen_train, gen_val, gen_test, gen_region, gen_global, gen_objects;
  std::optional<double> gen_noise;
  gen->add_option("--classes", gen_classes, "Number of relation classes (>= 2)")->check(CLI::Range(2, 1000));
  gen->add_option("--train", gen_train, "Training scenes")->check(CLI::PositiveNumber);
  gen->add_option("--val", gen_val, "Validation scenes")->check(CLI::PositiveNumber);
  gen->add_option("--test", gen_test, "Test scenes")->check(CLI::PositiveNumber);
  gen->add_option("--rule-noise", gen_noise, "Label noise rate in [0,1)");
  gen->add_option("--region-dim", gen_region, "Person/object feature width")->check(CLI::PositiveNumber);
  gen->add_option("--global-dim", gen_global, "Global feature width")->check(CLI::PositiveNumber);
  gen->add_option("--objects", gen_objects, "Objects per scene (1..5)")->check(CLI::Range(1, 5));

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model variant");
  CommonFlags train_flags;
  train_flags.attach(*train_cmd);
  std::optional<std::string> train_manifest, val_manifest, train_checkpoint;
  std::optional<std::size_t> epochs, batch_size, threads;
  std::optional<double> lr0;
  train_cmd->add_option("--train-manifest", train_manifest, "Training manifest");
  train_cmd->add_option("--val-manifest", val_manifest, "Optional validation manifest");
  train_cmd->add_option("--checkpoint", train_checkpoint, "Checkpoint path (default OUT/model.mgrp)");
  train_cmd->add_option("--epochs", epochs, "Training epochs");
  train_cmd->add_option("--batch-size", batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr0", lr0, "Initial learning rate");
  train_cmd->add_option("--threads", threads, "Worker threads per batch")->check(CLI::PositiveNumber);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  CommonFlags eval_flags;
  eval_flags.attach(*eval_cmd);
  std::optional<std::string> eval_checkpoint, test_manifest, report_path;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint to evaluate");
  eval_cmd->add_option("--test-manifest", test_manifest, "Manifest to evaluate on");
  eval_cmd->add_option("--report", report_path, "Report path (default OUT/report.json)");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Print the class distribution for one pair");
  CommonFlags predict_flags;
  predict_flags.attach(*predict_cmd);
  std::string predict_checkpoint, predict_scene, predict_features, predict_pair;
  predict_cmd->add_option("--checkpoint", predict_checkpoint, "Checkpoint")->required();
  predict_cmd->add_option("--scene", predict_scene, "Scene JSON file")->required();
  predict_cmd->add_option("--features", predict_features, "Feature store (FMAT)")->required();
  predict_cmd->add_option("--pair", predict_pair, "Person indices A,B")->required();

  // inspect-graph
  auto* inspect = app.add_subcommand("inspect-graph", "Print the POG and PPG of one pair");
  CommonFlags inspect_flags;
  inspect_flags.attach(*inspect);
  std::string inspect_scene, inspect_features, inspect_pair = "0,1";
  std::optional<double> inspect_dilation, inspect_min_conf;
  inspect->add_option("--scene", inspect_scene, "Scene JSON file")->required();
  inspect->add_option("--features", inspect_features, "Feature store (FMAT)")->required();
  inspect->add_option("--pair", inspect_pair, "Person indices A,B");
  inspect->add_option("--dilation", inspect_dilation, "Keypoint dilation in pixels");
  inspect->add_option("--min-keypoint-confidence", inspect_min_conf, "Keypoint confidence gate");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (gen->parsed()) {
      RunConfig rc = gen_flags.resolve();
      SyntheticConfig sc;
      sc.seed = rc.train.seed;
      if (!gen_flags.config_path.empty()) {
        const json file = read_json_file(gen_flags.config_path);
        if (file.contains("synthetic")) {
          const json& s = file.at("synthetic");
          sc.classes = s.value("classes", sc.classes);
          sc.rule_noise = s.value("rule_noise", sc.rule_noise);
          sc.region_dim = s.value("region_dim", sc.region_dim);
          sc.global_dim = s.value("global_dim", sc.global_dim);
          sc.objects_per_scene = s.value("objects_per_scene", sc.objects_per_scene);
          sc.feature_noise = s.value("feature_noise", sc.feature_noise);
          sc.splits[0].second = s.value("train", sc.splits[0].second);
          sc.splits[1].second = s.value("val", sc.splits[1].second);
          sc.splits[2].second = s.value("test", sc.splits[2].second);
        }
      }
      if (gen_classes) sc.classes = *gen_classes;
      if (gen_noise) sc.rule_noise = *gen_noise;
      if (gen_region) sc.region_dim = *gen_region;
      if (gen_global) sc.global_dim = *gen_global;
      if (gen_objects) sc.objects_per_scene = *gen_objects;
      if (gen_train) sc.splits[0].second = *gen_train;
      if (gen_val) sc.splits[1].second = *gen_val;
      if (gen_test) sc.splits[2].second = *gen_test;
      for (const auto& path : generate_synthetic(sc, rc.out)) out << path.string() << '\n';
      return 0;
    }

    if (train_cmd->parsed()) {
      RunConfig rc = train_flags.resolve();
      if (train_manifest) rc.train_manifest = *train_manifest;
      if (val_manifest) rc.val_manifest = *val_manifest;
      if (train_checkpoint) rc.checkpoint = *train_checkpoint;
      if (epochs) rc.train.epochs = *epochs;
      if (batch_size) rc.train.batch_size = *batch_size;
      if (lr0) rc.train.lr0 = *lr0;
      if (threads) rc.train.threads = *threads;
      if (rc.train_manifest.empty()) throw ConfigError("train needs --train-manifest or train_manifest in --config");
      if (rc.checkpoint.empty()) rc.checkpoint = (fs::path(rc.out) / "model.mgrp").string();
      rc.train.validate();

      const Dataset data = load_manifest(rc.train_manifest);
      const TrainResult result =
          train(data.samples(), data.features, data.num_classes(), rc.train, [&](const EpochStats& s) {
            out << "epoch " << s.epoch << " lr " << s.learning_rate << " loss " << s.mean_loss << " acc "
                << s.train_accuracy << '\n';
          });
      if (rc.train.variant.use_pog) out << "pog adjacency density " << result.mean_pog_density << '\n';

      Checkpoint ck{rc.train, data.manifest.class_names, result.params};
      fs::create_directories(fs::path(rc.checkpoint).parent_path().empty() ? fs::path(".")
                                                                           : fs::path(rc.checkpoint).parent_path());
      save_checkpoint(rc.checkpoint, ck);
      // Round-trip the checkpoint so a zero exit code means it is readable.
      if (!(load_checkpoint(rc.checkpoint).params == ck.params)) throw FormatError("checkpoint verification failed");

      json history = json::array();
      for (const auto& s : result.history)
        history.push_back(json{{"epoch", s.epoch},
                               {"learning_rate", s.learning_rate},
                               {"mean_loss", s.mean_loss},
                               {"train_accuracy", s.train_accuracy}});
      json doc{{"config", rc.to_json()}, {"history", history}, {"mean_pog_density", result.mean_pog_density}};
      if (!rc.val_manifest.empty()) {
        const Dataset val = load_manifest(rc.val_manifest);
        std::size_t correct = 0;
        const auto preds = predict_all(val, ck);
        const auto samples = val.samples();
        for (std::size_t i = 0; i < preds.size(); ++i)
          if (preds[i].predicted == samples[i].instance.label) ++correct;
        const double acc = preds.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(preds.size());
        doc["val_accuracy"] = acc;
        out << "val accuracy " << acc << '\n';
      }
      write_text(fs::path(rc.out) / "history.json", doc.dump(1) + "\n");
      out << "checkpoint " << rc.checkpoint << '\n';
      return 0;
    }

    if (eval_cmd->parsed()) {
      RunConfig rc = eval_flags.resolve();
      if (eval_checkpoint) rc.checkpoint = *eval_checkpoint;
      if (test_manifest) rc.test_manifest = *test_manifest;
      if (report_path) rc.report = *report_path;
      if (rc.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
      if (rc.test_manifest.empty()) throw ConfigError("eval needs --test-manifest");
      if (rc.report.empty()) rc.report = (fs::path(rc.out) / "report.json").string();

      const Checkpoint ck = load_checkpoint(rc.checkpoint);
      const Dataset data = load_manifest(rc.test_manifest);
      if (data.num_classes() != ck.params.classes())
        throw DataError("manifest has " + std::to_string(data.num_classes()) + " classes, model has " +
                        std::to_string(ck.params.classes()));
      const auto preds = predict_all(data, ck);
      const auto samples = data.samples();
      Matrix probs(preds.size(), data.num_classes());
      std::vector<std::size_t> labels;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        std::copy(preds[i].probs.begin(), preds[i].probs.end(), probs.row(i).begin());
        labels.push_back(samples[i].instance.label);
      }
      const EvalReport report = evaluate(probs, labels, data.num_classes());
      json doc = report_to_json(report, data.manifest.class_names);
      RunConfig echo = rc;
      echo.train = ck.config;
      doc["config"] = echo.to_json();
      doc["instances"] = labels.size();
      write_text(rc.report, doc.dump(1) + "\n");
      out << "mAP " << report.map << " accuracy " << report.overall_accuracy << '\n';
      out << "report " << rc.report << '\n';
      return 0;
    }

    if (predict_cmd->parsed()) {
      const Checkpoint ck = load_checkpoint(predict_checkpoint);
      const FeatureStore store = read_feature_matrix(predict_features);
      const Scene scene = load_scene(predict_scene, ck.params.classes());
      const auto [a, b] = parse_pair(predict_pair);
      RelationInstance inst{a, b, 0, std::nullopt};
      for (const auto& p : scene.pairs)
        if (p.person_a == a && p.person_b == b) inst.union_feature_ref = p.union_feature_ref;
      const Prediction p = predict(scene, inst, store, ck.params, ck.config);
      out << std::setprecision(6);
      for (std::size_t c = 0; c < p.probs.size(); ++c) out << class_name(ck.class_names, c) << ' ' << p.probs[c] << '\n';
      out << "predicted " << class_name(ck.class_names, p.predicted) << '\n';
      return 0;
    }

    if (inspect->parsed()) {
      RunConfig rc = inspect_flags.resolve();
      if (inspect_dilation) rc.train.dilation = *inspect_dilation;
      if (inspect_min_conf) rc.train.min_keypoint_confidence = *inspect_min_conf;
      const FeatureStore store = read_feature_matrix(inspect_features);
      // Labels are irrelevant for inspection; accept any class index.
      const Scene scene = load_scene(inspect_scene, std::numeric_limits<std::size_t>::max());
      const auto [a, b] = parse_pair(inspect_pair);
      RelationInstance inst{a, b, 0, std::nullopt};
      for (const auto& p : scene.pairs)
        if (p.person_a == a && p.person_b == b) inst.union_feature_ref = p.union_feature_ref;
      const GraphOptions opts = rc.train.graph_options();

      const RelationGraph pog = build_pog(scene, inst, store, opts);
      print_graph(out, "POG", pog);
      const RelationGraph ppg = build_ppg(scene, inst, opts);
      print_graph(out, "PPG", ppg);
      out << "inter-person edges:\n" << std::fixed << std::setprecision(4);
      for (std::size_t i = 0; i < kKeypointsPerPerson; ++i)
        for (std::size_t j = kKeypointsPerPerson; j < 2 * kKeypointsPerPerson; ++j)
          if (ppg.adjacency(i, j) != 0.0)
            out << "  " << ppg.nodes[i].label() << " - " << ppg.nodes[j].label() << " " << ppg.adjacency(i, j) << '\n';
      out << std::defaultfloat;
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace mgr

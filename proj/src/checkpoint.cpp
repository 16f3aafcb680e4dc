#include "mgr/checkpoint.hpp"

#include <map>

#include "mgr/error.hpp"
#include "mgr/feature_store.hpp"

namespace mgr {

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  std::string out = "MGRP";
  binio::put_u32(out, Checkpoint::kVersion);
  nlohmann::json echo = to_json(checkpoint.config);
  echo["class_names"] = checkpoint.class_names;
  const std::string config = echo.dump();
  binio::put_u32(out, static_cast<std::uint32_t>(config.size()));
  out += config;
  const auto named = checkpoint.params.named();
  binio::put_u32(out, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, m] : named) binio::put_named_matrix(out, name, *m);
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& context) {
  binio::Reader in(bytes, context);
  if (in.bytes(4) != "MGRP") throw FormatError(context + ": bad magic (expected MGRP)");
  const std::uint32_t version = in.u32();
  if (version != Checkpoint::kVersion)
    throw FormatError(context + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  const std::string config_text = in.bytes(in.u32());
  try {
    nlohmann::json echo = nlohmann::json::parse(config_text);
    if (echo.contains("class_names")) {
      ck.class_names = echo.at("class_names").get<std::vector<std::string>>();
      echo.erase("class_names");
    }
    ck.config = train_config_from_json(echo);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(context + ": config echo is not valid JSON: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(context + ": bad config echo: " + e.what());
  }

  std::map<std::string, Matrix> tensors;
  const std::uint32_t count = in.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, m] = binio::read_named_matrix(in);
    if (!tensors.emplace(name, std::move(m)).second) throw FormatError(context + ": duplicate tensor " + name);
  }
  if (!in.at_end()) throw FormatError(context + ": trailing bytes");

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError(context + ": missing tensor " + name);
    Matrix m = std::move(it->second);
    tensors.erase(it);
    return m;
  };
  const Variant& v = ck.config.variant;
  if (v.use_pog)
    for (std::size_t l = 0; l < ck.config.pog_hidden.size(); ++l) ck.params.pog_layers.push_back(take("pog." + std::to_string(l)));
  if (v.use_ppg)
    for (std::size_t l = 0; l < ck.config.ppg_hidden.size(); ++l) ck.params.ppg_layers.push_back(take("ppg." + std::to_string(l)));
  if (v.has_graph_head()) {
    ck.params.classifier = take("classifier.weight");
    ck.params.classifier_bias = take("classifier.bias");
  }
  if (v.use_global) {
    ck.params.global_classifier = take("global.weight");
    ck.params.global_bias = take("global.bias");
  }
  if (!tensors.empty()) throw FormatError(context + ": unexpected tensor " + tensors.begin()->first);
  ck.params.seed = ck.config.seed;
  if (!ck.class_names.empty() && ck.class_names.size() != ck.params.classes())
    throw FormatError(context + ": class_names length does not match the classifier width");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  binio::write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(binio::read_file(path), path.string());
}

}  // namespace mgr

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgr/feature_store.hpp"
#include "mgr/scene.hpp"
#include "mgr/trainer.hpp"

namespace mgr {

struct DatasetManifest {
  std::vector<std::string> class_names;
  std::vector<std::string> scenes;  ///< paths as written, relative to the manifest directory
  std::string feature_store;
  std::string split;  ///< train | val | test
};

/// A manifest with every scene and the feature store loaded and cross-checked.
struct Dataset {
  std::filesystem::path manifest_path;
  DatasetManifest manifest;
  std::vector<Scene> scenes;
  FeatureStore features;

  std::size_t num_classes() const { return manifest.class_names.size(); }
  /// One Sample per labeled pair, in scene then pair order. Pointers refer into `scenes`.
  std::vector<Sample> samples() const;
};

Scene scene_from_json(const nlohmann::json& j, const std::string& context);
nlohmann::json scene_to_json(const Scene& scene);

/// Parses and structurally validates one scene file. Labels are checked against num_classes.
Scene load_scene(const std::filesystem::path& path, std::size_t num_classes,
                 std::size_t max_objects = kDefaultMaxObjects);
void save_scene(const std::filesystem::path& path, const Scene& scene);

DatasetManifest manifest_from_json(const nlohmann::json& j, const std::string& context);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Loads the manifest, its scenes and its feature store. Every feature ref must
/// resolve; person/object/union rows must share one width and global rows another.
Dataset load_manifest(const std::filesystem::path& path, std::size_t max_objects = kDefaultMaxObjects);

}  // namespace mgr

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mgr/scene.hpp"

namespace mgr {

/// Synthetic scenes whose labels are a deterministic function of planted cues:
///   - person A's right wrist rests inside an object whose category is linked
///     to the label (only visible through pose-gated person-object edges),
///   - the two noses are close for even labels and far for odd labels,
///   - the global feature points along a direction shared by labels 2g, 2g+1.
/// Distractor objects sit in a band above the persons and are never touched.
struct SyntheticConfig {
  std::size_t classes = 6;
  std::uint64_t seed = 0;
  /// Probability that a scene's label is replaced by a different random class.
  double rule_noise = 0.0;
  std::vector<std::pair<std::string, std::size_t>> splits{{"train", 600}, {"val", 200}, {"test", 200}};
  std::size_t region_dim = 32;
  std::size_t global_dim = 16;
  std::size_t objects_per_scene = 4;
  double feature_noise = 0.3;
  double image_width = 640.0;
  double image_height = 480.0;

  void validate() const;
};

/// Class names used by the generator: six fine-grained social relations when
/// classes == 6, otherwise "class_0", "class_1", ...
std::vector<std::string> synthetic_class_names(std::size_t classes);

/// Object category linked to class `label`.
std::string synthetic_category(std::size_t label);

/// Writes, per split, `<split>.json` (manifest), `<split>_features.fmat` and
/// `<split>/scene_NNNNN.json` under out_dir. Returns the manifest paths in split order.
std::vector<std::filesystem::path> generate_synthetic(const SyntheticConfig& config,
                                                      const std::filesystem::path& out_dir);

}  // namespace mgr

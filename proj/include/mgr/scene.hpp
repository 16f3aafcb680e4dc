#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mgr/geometry.hpp"

namespace mgr {

inline constexpr std::size_t kKeypointsPerPerson = 17;
inline constexpr std::size_t kPeaksPerKeypoint = 10;
inline constexpr std::size_t kKeypointFeatureDim = 3 * kPeaksPerKeypoint;
inline constexpr std::size_t kDefaultMaxObjects = 5;

/// Row `row` of the matrix called `name` in a FeatureStore.
struct FeatureRef {
  std::string name;
  std::size_t row = 0;

  friend bool operator==(const FeatureRef&, const FeatureRef&) = default;
};

/// One local maximum of a keypoint heatmap.
struct HeatmapPeak {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
};

struct PersonAnnotation {
  Box box;
  std::array<Keypoint, kKeypointsPerPerson> keypoints{};
  /// Per keypoint, peaks sorted by descending score.
  std::array<std::vector<HeatmapPeak>, kKeypointsPerPerson> heatmap_peaks{};
  FeatureRef feature_ref;
};

struct ObjectAnnotation {
  Box box;
  std::string category;
  double confidence = 0.0;
  FeatureRef feature_ref;
};

/// A labeled person pair. The union feature is optional; without it the
/// union node uses the mean of the two person features.
struct RelationInstance {
  std::size_t person_a = 0;
  std::size_t person_b = 1;
  std::size_t label = 0;
  std::optional<FeatureRef> union_feature_ref;
};

struct Scene {
  std::string image_id;
  double width = 0.0;
  double height = 0.0;
  std::vector<PersonAnnotation> persons;
  std::vector<ObjectAnnotation> objects;
  FeatureRef global_feature_ref;
  std::vector<RelationInstance> pairs;

  /// Structural checks that need no feature store: pair indices, object
  /// count, keypoint slots, box validity, peak ordering. Throws DataError.
  void validate(std::size_t num_classes, std::size_t max_objects = kDefaultMaxObjects) const;
};

}  // namespace mgr

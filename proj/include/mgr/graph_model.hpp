#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mgr/feature_store.hpp"
#include "mgr/numerics.hpp"
#include "mgr/scene.hpp"

namespace mgr {

/// Knobs that shape graph construction.
struct GraphOptions {
  /// Half-side of the square a keypoint is grown into before the box test.
  double dilation = 0.0;
  /// Keypoints below this confidence neither gate person-object edges nor
  /// take part in inter-person pose edges. They keep their PPG node.
  double min_keypoint_confidence = 0.0;
  /// When false every person node is wired to every object node.
  bool pose_gating = true;
};

struct NodeKind {
  enum class Kind { PersonA, PersonB, Union, Object, Pose };
  Kind kind = Kind::PersonA;
  /// Object position in the scene list (Object) or 0/1 for person A/B (Pose).
  std::size_t index = 0;
  /// COCO keypoint slot, Pose nodes only.
  std::size_t keypoint = 0;

  std::string label() const;
  friend bool operator==(const NodeKind&, const NodeKind&) = default;
};

struct RelationGraph {
  std::vector<NodeKind> nodes;
  Matrix adjacency;  ///< symmetric, zero diagonal, non-negative
  Matrix features;   ///< one row per node

  std::size_t node_count() const { return nodes.size(); }
  /// Checks the structural invariants; throws DataError on violation.
  void validate() const;
};

/// Nose, wrists, ankles: {0, 9, 10, 15, 16}.
const std::array<std::size_t, 5>& active_keypoint_indices();
bool is_active_keypoint(std::size_t index);

/// The 19 MS-COCO bones, 0-based keypoint indices.
const std::array<std::pair<std::size_t, std::size_t>, 19>& coco_skeleton_edges();

struct KeypointFeature {
  std::array<double, kKeypointFeatureDim> values{};
  /// Set when the heatmap had fewer than ten peaks and zeros were appended.
  bool padded = false;
};

/// Top-10 heatmap peaks as (x / w, y / h, score) triples, highest score first.
KeypointFeature keypoint_feature_vector(const PersonAnnotation& person, std::size_t keypoint_index,
                                        double image_w, double image_h);

/// Person-Object Graph: nodes PersonA, PersonB, Union, then the scene's objects
/// in order. Person-person and object-object edges are 1. A person-object edge
/// is 1 iff one of the person's keypoints lies in the object box; the union node
/// takes the OR of both persons.
RelationGraph build_pog(const Scene& scene, const RelationInstance& instance, const FeatureStore& store,
                        const GraphOptions& options = {});

/// Person-Pose Graph over 2 x 17 keypoints (A first, then B). Skeleton bones get
/// weight 1; each active keypoint is linked to every keypoint of the other
/// person with weight 2 - normalized_distance.
RelationGraph build_ppg(const Scene& scene, const RelationInstance& instance,
                        const GraphOptions& options = {});

/// Fraction of off-diagonal entries that are non-zero.
double adjacency_density(const Matrix& adjacency);

}  // namespace mgr

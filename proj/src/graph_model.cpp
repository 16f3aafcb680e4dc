#include "mgr/graph_model.hpp"

#include <algorithm>
#include <cmath>

#include "mgr/error.hpp"

namespace mgr {

namespace {

constexpr std::array<std::size_t, 5> kActive = {0, 9, 10, 15, 16};

// MS-COCO person skeleton, converted from the dataset's 1-based indices.
constexpr std::array<std::pair<std::size_t, std::size_t>, 19> kSkeleton = {{
    {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
    {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
    {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6},
}};

void connect(Matrix& adj, std::size_t i, std::size_t j, double w) {
  adj(i, j) = w;
  adj(j, i) = w;
}

bool person_touches(const PersonAnnotation& person, const Box& box, const GraphOptions& options) {
  for (const Keypoint& k : person.keypoints) {
    if (k.confidence < options.min_keypoint_confidence) continue;
    if (keypoint_hits_box(k, box, options.dilation)) return true;
  }
  return false;
}

void check_instance(const Scene& scene, const RelationInstance& instance) {
  if (instance.person_a >= scene.persons.size() || instance.person_b >= scene.persons.size())
    throw DataError("scene '" + scene.image_id + "': pair index out of range");
  if (instance.person_a == instance.person_b)
    throw DataError("scene '" + scene.image_id + "': pair needs two distinct persons");
}

void copy_row(Matrix& dst, std::size_t r, std::span<const double> src, const std::string& what) {
  if (src.size() != dst.cols())
    throw DataError(what + ": feature dimension " + std::to_string(src.size()) + " != " +
                    std::to_string(dst.cols()));
  std::copy(src.begin(), src.end(), dst.row(r).begin());
}

}  // namespace

std::string NodeKind::label() const {
  switch (kind) {
    case Kind::PersonA: return "PersonA";
    case Kind::PersonB: return "PersonB";
    case Kind::Union: return "Union";
    case Kind::Object: return "Object(" + std::to_string(index) + ")";
    case Kind::Pose: return std::string("Pose(") + (index == 0 ? "A" : "B") + "," + std::to_string(keypoint) + ")";
  }
  return "?";
}

void RelationGraph::validate() const {
  const std::size_t n = nodes.size();
  if (adjacency.rows() != n || adjacency.cols() != n) throw DataError("adjacency side != node count");
  if (features.rows() != n) throw DataError("feature rows != node count");
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw DataError("non-zero adjacency diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacency(i, j) != adjacency(j, i)) throw DataError("asymmetric adjacency");
      if (!(adjacency(i, j) >= 0.0)) throw DataError("negative adjacency weight");
    }
  }
}

const std::array<std::size_t, 5>& active_keypoint_indices() { return kActive; }

bool is_active_keypoint(std::size_t index) {
  return std::find(kActive.begin(), kActive.end(), index) != kActive.end();
}

const std::array<std::pair<std::size_t, std::size_t>, 19>& coco_skeleton_edges() { return kSkeleton; }

KeypointFeature keypoint_feature_vector(const PersonAnnotation& person, std::size_t keypoint_index,
                                        double image_w, double image_h) {
  if (keypoint_index >= kKeypointsPerPerson) throw InvalidInput("keypoint index outside [0,16]");
  if (!(image_w > 0.0) || !(image_h > 0.0)) throw InvalidInput("image dimensions must be positive");

  std::vector<HeatmapPeak> peaks = person.heatmap_peaks[keypoint_index];
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const HeatmapPeak& a, const HeatmapPeak& b) { return a.score > b.score; });

  KeypointFeature out;
  const std::size_t used = std::min(peaks.size(), kPeaksPerKeypoint);
  for (std::size_t i = 0; i < used; ++i) {
    out.values[3 * i + 0] = std::clamp(peaks[i].x / image_w, 0.0, 1.0);
    out.values[3 * i + 1] = std::clamp(peaks[i].y / image_h, 0.0, 1.0);
    out.values[3 * i + 2] = peaks[i].score;
  }
  out.padded = used < kPeaksPerKeypoint;
  return out;
}

RelationGraph build_pog(const Scene& scene, const RelationInstance& instance, const FeatureStore& store,
                        const GraphOptions& options) {
  check_instance(scene, instance);
  const PersonAnnotation& pa = scene.persons[instance.person_a];
  const PersonAnnotation& pb = scene.persons[instance.person_b];
  const std::size_t m = scene.objects.size();
  const std::size_t n = 3 + m;

  RelationGraph g;
  g.nodes.reserve(n);
  g.nodes.push_back({NodeKind::Kind::PersonA});
  g.nodes.push_back({NodeKind::Kind::PersonB});
  g.nodes.push_back({NodeKind::Kind::Union});
  for (std::size_t o = 0; o < m; ++o) g.nodes.push_back({NodeKind::Kind::Object, o});

  g.adjacency = Matrix(n, n);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) connect(g.adjacency, i, j, 1.0);
  for (std::size_t i = 3; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) connect(g.adjacency, i, j, 1.0);

  for (std::size_t o = 0; o < m; ++o) {
    const Box& box = scene.objects[o].box;
    const bool a_hit = !options.pose_gating || person_touches(pa, box, options);
    const bool b_hit = !options.pose_gating || person_touches(pb, box, options);
    if (a_hit) connect(g.adjacency, 0, 3 + o, 1.0);
    if (b_hit) connect(g.adjacency, 1, 3 + o, 1.0);
    if (a_hit || b_hit) connect(g.adjacency, 2, 3 + o, 1.0);
  }

  const auto a_row = store.row(pa.feature_ref);
  const auto b_row = store.row(pb.feature_ref);
  g.features = Matrix(n, a_row.size());
  copy_row(g.features, 0, a_row, "person A");
  copy_row(g.features, 1, b_row, "person B");
  if (instance.union_feature_ref) {
    copy_row(g.features, 2, store.row(*instance.union_feature_ref), "union");
  } else {
    for (std::size_t c = 0; c < a_row.size(); ++c) g.features(2, c) = 0.5 * (a_row[c] + b_row[c]);
  }
  for (std::size_t o = 0; o < m; ++o)
    copy_row(g.features, 3 + o, store.row(scene.objects[o].feature_ref), "object " + std::to_string(o));
  return g;
}

RelationGraph build_ppg(const Scene& scene, const RelationInstance& instance, const GraphOptions& options) {
  check_instance(scene, instance);
  const std::array<const PersonAnnotation*, 2> people = {&scene.persons[instance.person_a],
                                                         &scene.persons[instance.person_b]};
  constexpr std::size_t K = kKeypointsPerPerson;
  constexpr std::size_t n = 2 * K;

  RelationGraph g;
  g.nodes.reserve(n);
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t k = 0; k < K; ++k) g.nodes.push_back({NodeKind::Kind::Pose, p, k});

  g.adjacency = Matrix(n, n);
  for (std::size_t p = 0; p < 2; ++p)
    for (const auto& [u, v] : kSkeleton) connect(g.adjacency, p * K + u, p * K + v, 1.0);

  auto usable = [&](const Keypoint& k) { return k.confidence >= options.min_keypoint_confidence; };
  for (std::size_t p = 0; p < 2; ++p) {
    const std::size_t q = 1 - p;
    for (std::size_t u : kActive) {
      const Keypoint& ku = people[p]->keypoints[u];
      if (!usable(ku)) continue;
      for (std::size_t v = 0; v < K; ++v) {
        const Keypoint& kv = people[q]->keypoints[v];
        if (!usable(kv)) continue;
        // Both directions produce the same value when u and v are both active;
        // the entry is overwritten, never summed.
        const double w = 2.0 - normalized_distance(ku, kv, scene.width, scene.height);
        connect(g.adjacency, p * K + u, q * K + v, w);
      }
    }
  }

  g.features = Matrix(n, kKeypointFeatureDim);
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto f = keypoint_feature_vector(*people[p], k, scene.width, scene.height);
      std::copy(f.values.begin(), f.values.end(), g.features.row(p * K + k).begin());
    }
  }
  return g;
}

double adjacency_density(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (n < 2) return 0.0;
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && adjacency(i, j) != 0.0) ++nonzero;
  return static_cast<double>(nonzero) / static_cast<double>(n * (n - 1));
}

}  // namespace mgr

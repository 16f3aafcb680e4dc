#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "mgr/error.hpp"
#include "mgr/graph_model.hpp"
#include "support.hpp"

using namespace mgr;
using mgr::testing::random_scene;

namespace {

// Moves every keypoint of every person far from the objects.
void park_keypoints(Scene& s) {
  for (auto& p : s.persons)
    for (auto& k : p.keypoints) {
      k.x = 1.0;
      k.y = 1.0;
    }
  for (auto& o : s.objects) o.box = Box{50, 50, 60, 60};
}

std::size_t count_nonzero_upper(const Matrix& m, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  std::size_t n = 0;
  for (std::size_t i = r0; i < r1; ++i)
    for (std::size_t j = c0; j < c1; ++j)
      if (j > i && m(i, j) != 0.0) ++n;
  return n;
}

}  // namespace

TEST_CASE("active keypoints and skeleton") {
  const auto& active = active_keypoint_indices();
  CHECK(std::set<std::size_t>(active.begin(), active.end()) == std::set<std::size_t>{0, 9, 10, 15, 16});
  CHECK(active.size() == 5);
  for (std::size_t i : active) CHECK(i < 17);

  const auto& bones = coco_skeleton_edges();
  CHECK(bones.size() == 19);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [u, v] : bones) {
    CHECK(u < 17);
    CHECK(v < 17);
    CHECK(u != v);
    CHECK(seen.insert({std::min(u, v), std::max(u, v)}).second);
  }
  CHECK(seen.count({5, 7}) == 1);
  CHECK(seen.count({7, 9}) == 1);
  // Same set as the 1-based list shipped with the COCO annotations.
  std::set<std::pair<std::size_t, std::size_t>> published;
  for (auto [u, v] : mgr::testing::coco_skeleton_one_based())
    published.insert({std::min(u, v) - 1, std::max(u, v) - 1});
  CHECK(seen == published);
}

TEST_CASE("keypoint feature vector") {
  PersonAnnotation p;
  for (auto& peaks : p.heatmap_peaks) peaks.assign(10, HeatmapPeak{0, 0, 0});

  SUBCASE("degenerate heatmap gives zeros") {
    const auto f = keypoint_feature_vector(p, 3, 100, 50);
    CHECK(f.values.size() == 30);
    CHECK(std::all_of(f.values.begin(), f.values.end(), [](double v) { return v == 0.0; }));
    CHECK_FALSE(f.padded);
  }
  SUBCASE("single peak normalized by image size") {
    p.heatmap_peaks[4][0] = HeatmapPeak{50, 25, 1.0};
    const auto f = keypoint_feature_vector(p, 4, 100, 50);
    CHECK(f.values[0] == 0.5);
    CHECK(f.values[1] == 0.5);
    CHECK(f.values[2] == 1.0);
    CHECK(std::all_of(f.values.begin() + 3, f.values.end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("short heatmap is padded and flagged") {
    p.heatmap_peaks[0] = {HeatmapPeak{10, 10, 0.9}, HeatmapPeak{20, 20, 0.5}};
    const auto f = keypoint_feature_vector(p, 0, 100, 100);
    CHECK(f.padded);
    CHECK(f.values[3] == doctest::Approx(0.2));
    CHECK(std::all_of(f.values.begin() + 6, f.values.end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("only the ten best peaks are used, best first") {
    p.heatmap_peaks[1].clear();
    for (int i = 0; i < 14; ++i) p.heatmap_peaks[1].push_back(HeatmapPeak{double(i), 0, 1.0 - 0.05 * i});
    const auto f = keypoint_feature_vector(p, 1, 100, 100);
    CHECK(f.values[2] == 1.0);
    CHECK(f.values[27] == doctest::Approx(0.09));
    CHECK(f.values[29] == doctest::Approx(1.0 - 0.45));
  }
  CHECK_THROWS_AS(keypoint_feature_vector(p, 17, 100, 100), InvalidInput);
}

TEST_CASE("POG without objects is the person clique") {
  std::mt19937_64 rng(1);
  auto rs = random_scene(rng, 0);
  const RelationGraph g = build_pog(rs.scene, rs.scene.pairs[0], rs.store);
  CHECK(g.node_count() == 3);
  CHECK(g.adjacency == Matrix{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  CHECK(g.nodes[2].kind == NodeKind::Kind::Union);
}

TEST_CASE("POG wrist inside object connects person A") {
  std::mt19937_64 rng(2);
  auto rs = random_scene(rng, 2);
  park_keypoints(rs.scene);
  auto& wrist = rs.scene.persons[0].keypoints[9];
  wrist.x = 55;
  wrist.y = 55;
  rs.scene.objects[1].box = Box{100, 100, 110, 110};
  const RelationGraph g = build_pog(rs.scene, rs.scene.pairs[0], rs.store);
  CHECK(g.adjacency(0, 3) == 1.0);
  CHECK(g.adjacency(1, 3) == 0.0);
  CHECK(g.adjacency(2, 3) == 1.0);  // union follows A
  CHECK(g.adjacency(0, 4) == 0.0);
  CHECK(g.adjacency(3, 4) == 1.0);
}

TEST_CASE("POG with no contact keeps only clique edges") {
  std::mt19937_64 rng(3);
  auto rs = random_scene(rng, 3);
  park_keypoints(rs.scene);
  const RelationGraph g = build_pog(rs.scene, rs.scene.pairs[0], rs.store);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t o = 3; o < 6; ++o) CHECK(g.adjacency(i, o) == 0.0);
  for (std::size_t o = 3; o < 6; ++o)
    for (std::size_t q = 3; q < 6; ++q) CHECK(g.adjacency(o, q) == (o == q ? 0.0 : 1.0));

  SUBCASE("gating off wires every person to every object") {
    GraphOptions opts;
    opts.pose_gating = false;
    const RelationGraph dense = build_pog(rs.scene, rs.scene.pairs[0], rs.store, opts);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t o = 3; o < 6; ++o) CHECK(dense.adjacency(i, o) == 1.0);
    CHECK(adjacency_density(dense.adjacency) > adjacency_density(g.adjacency));
  }
  SUBCASE("dilation reaches a nearby object") {
    GraphOptions opts;
    opts.dilation = 60.0;  // keypoint (1,1) grown to [-59,61]^2 overlaps the box at (50,50)
    const RelationGraph grown = build_pog(rs.scene, rs.scene.pairs[0], rs.store, opts);
    CHECK(grown.adjacency(0, 3) == 1.0);
  }
  SUBCASE("low-confidence keypoints do not gate") {
    auto& k = rs.scene.persons[1].keypoints[4];
    k.x = 55;
    k.y = 55;
    k.confidence = 0.2;
    CHECK(build_pog(rs.scene, rs.scene.pairs[0], rs.store).adjacency(1, 3) == 1.0);
    GraphOptions opts;
    opts.min_keypoint_confidence = 0.5;
    CHECK(build_pog(rs.scene, rs.scene.pairs[0], rs.store, opts).adjacency(1, 3) == 0.0);
  }
}

TEST_CASE("POG node features") {
  std::mt19937_64 rng(4);
  auto rs = random_scene(rng, 2);
  const RelationGraph g = build_pog(rs.scene, rs.scene.pairs[0], rs.store);
  const Matrix& persons = rs.store.matrix("person");
  for (std::size_t c = 0; c < persons.cols(); ++c) {
    CHECK(g.features(0, c) == persons(0, c));
    CHECK(g.features(1, c) == persons(1, c));
    CHECK(g.features(2, c) == 0.5 * (persons(0, c) + persons(1, c)));
    CHECK(g.features(4, c) == rs.store.matrix("object")(1, c));
  }

  SUBCASE("explicit union feature") {
    rs.store.put("union", Matrix{{9, 8, 7, 6}});
    RelationInstance inst = rs.scene.pairs[0];
    inst.union_feature_ref = FeatureRef{"union", 0};
    const RelationGraph gu = build_pog(rs.scene, inst, rs.store);
    CHECK(gu.features(2, 0) == 9);
    CHECK(gu.features(2, 3) == 6);
  }
  SUBCASE("dangling ref") {
    rs.scene.objects[0].feature_ref = FeatureRef{"object", 99};
    CHECK_THROWS_AS(build_pog(rs.scene, rs.scene.pairs[0], rs.store), DataError);
  }
  SUBCASE("bad pair") {
    CHECK_THROWS_AS(build_pog(rs.scene, RelationInstance{0, 0, 0, std::nullopt}, rs.store), DataError);
    CHECK_THROWS_AS(build_pog(rs.scene, RelationInstance{0, 5, 0, std::nullopt}, rs.store), DataError);
  }
}

TEST_CASE("PPG structure") {
  std::mt19937_64 rng(5);
  auto rs = random_scene(rng, 1);
  const RelationGraph g = build_ppg(rs.scene, rs.scene.pairs[0]);
  CHECK(g.node_count() == 34);
  CHECK(g.features.cols() == 30);
  CHECK(count_nonzero_upper(g.adjacency, 0, 17, 0, 17) == 19);
  CHECK(count_nonzero_upper(g.adjacency, 17, 34, 17, 34) == 19);
  g.validate();

  // Inter-person entries are 2 - dist, so they lie in [1, 2]; none between two passive keypoints.
  for (std::size_t i = 0; i < 17; ++i)
    for (std::size_t j = 17; j < 34; ++j) {
      const double w = g.adjacency(i, j);
      if (is_active_keypoint(i) || is_active_keypoint(j - 17)) {
        CHECK(w >= 1.0);
        CHECK(w <= 2.0);
      } else {
        CHECK(w == 0.0);
      }
    }
}

TEST_CASE("PPG weights at the extremes") {
  std::mt19937_64 rng(6);
  auto rs = random_scene(rng, 0);
  Scene& s = rs.scene;
  // A's nose coincides with B's knee.
  s.persons[1].keypoints[13].x = s.persons[0].keypoints[0].x;
  s.persons[1].keypoints[13].y = s.persons[0].keypoints[0].y;
  CHECK(build_ppg(s, s.pairs[0]).adjacency(0, 17 + 13) == 2.0);

  // A's nose at the origin, B's hip at the far corner.
  s.persons[0].keypoints[0].x = 0;
  s.persons[0].keypoints[0].y = 0;
  s.persons[1].keypoints[11].x = s.width;
  s.persons[1].keypoints[11].y = s.height;
  CHECK(build_ppg(s, s.pairs[0]).adjacency(0, 17 + 11) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("PPG confidence gate drops inter-person edges but keeps nodes and bones") {
  std::mt19937_64 rng(7);
  auto rs = random_scene(rng, 0);
  for (auto& k : rs.scene.persons[0].keypoints) k.confidence = 0.1;
  GraphOptions opts;
  opts.min_keypoint_confidence = 0.5;
  const RelationGraph g = build_ppg(rs.scene, rs.scene.pairs[0], opts);
  CHECK(g.node_count() == 34);
  CHECK(count_nonzero_upper(g.adjacency, 0, 17, 0, 17) == 19);
  CHECK(count_nonzero_upper(g.adjacency, 0, 17, 17, 34) == 0);
}

TEST_CASE("graph invariants on random scenes") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto rs = random_scene(rng, trial % 6);
    const auto& inst = rs.scene.pairs[0];
    const RelationGraph pog = build_pog(rs.scene, inst, rs.store);
    const RelationGraph ppg = build_ppg(rs.scene, inst);
    pog.validate();
    ppg.validate();
    CHECK(pog.node_count() == 3 + rs.scene.objects.size());
    CHECK(ppg.node_count() == 34);
    for (double v : pog.adjacency.data()) CHECK((v == 0.0 || v == 1.0));
    for (double v : ppg.adjacency.data()) CHECK((v == 0.0 || (v >= 1.0 && v <= 2.0)));

    // Brute-force equivalence and bitwise determinism.
    CHECK(pog.adjacency == mgr::testing::oracle_pog(rs.scene, inst.person_a, inst.person_b));
    const Matrix ppg_ref = mgr::testing::oracle_ppg(rs.scene, inst.person_a, inst.person_b);
    double worst = 0.0;
    for (std::size_t i = 0; i < ppg_ref.size(); ++i)
      worst = std::max(worst, std::abs(ppg.adjacency.data()[i] - ppg_ref.data()[i]));
    CHECK(worst < 1e-12);
    CHECK(build_pog(rs.scene, inst, rs.store).adjacency == pog.adjacency);
    CHECK(build_ppg(rs.scene, inst).adjacency == ppg.adjacency);
  }
}

TEST_CASE("POG is equivariant under object permutation") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    auto rs = random_scene(rng, 5);
    const RelationGraph g = build_pog(rs.scene, rs.scene.pairs[0], rs.store);

    std::vector<std::size_t> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Scene permuted = rs.scene;
    for (std::size_t i = 0; i < 5; ++i) permuted.objects[i] = rs.scene.objects[perm[i]];
    const RelationGraph h = build_pog(permuted, permuted.pairs[0], rs.store);

    auto node = [&](std::size_t i) { return i < 3 ? i : 3 + perm[i - 3]; };
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) CHECK(h.adjacency(i, j) == g.adjacency(node(i), node(j)));
      for (std::size_t c = 0; c < h.features.cols(); ++c) CHECK(h.features(i, c) == g.features(node(i), c));
    }
  }
}

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mgr/dataset.hpp"
#include "mgr/error.hpp"
#include "mgr/feature_store.hpp"
#include "mgr/synthetic.hpp"
#include "support.hpp"

using namespace mgr;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

// Label implied by the planted cues: the category of the object under person
// A's right wrist, with the nose gap picking the parity.
std::size_t rule_label(const Scene& s, std::size_t classes) {
  const Keypoint& wrist = s.persons[0].keypoints[10];
  std::string category;
  for (const auto& o : s.objects)
    if (mgr::testing::oracle_point_in_box(wrist.x, wrist.y, o.box)) category = o.category;
  const Keypoint& na = s.persons[0].keypoints[0];
  const Keypoint& nb = s.persons[1].keypoints[0];
  const bool close = std::abs(na.x - nb.x) < 210.0;
  for (std::size_t c = 0; c < classes; ++c)
    if (synthetic_category(c) == category && (c % 2 == 0) == close) return c;
  return classes;
}

struct SmallSynth {
  mgr::testing::TempDir dir{"io"};
  std::vector<std::filesystem::path> manifests;
  SmallSynth() {
    SyntheticConfig c;
    c.seed = 5;
    c.splits = {{"train", 12}, {"test", 6}};
    c.region_dim = 4;
    c.global_dim = 3;
    manifests = generate_synthetic(c, dir.path());
  }
};

}  // namespace

TEST_CASE("feature store round trip") {
  mgr::testing::TempDir dir("fmat");
  FeatureStore s;
  s.put("zeta", Matrix{{1.5, -2.0}, {3.25, 1e-300}});
  s.put("alpha", Matrix{{0.1, 0.2, 0.3}});
  s.put("empty", Matrix(0, 4));
  write_feature_matrix(dir.path() / "f.fmat", s);
  const FeatureStore back = read_feature_matrix(dir.path() / "f.fmat");
  CHECK(back.size() == 3);
  CHECK(back.matrix("zeta") == s.matrix("zeta"));
  CHECK(back.matrix("alpha") == s.matrix("alpha"));
  CHECK(back.matrix("empty").cols() == 4);

  const std::string bytes = slurp(dir.path() / "f.fmat");
  CHECK(bytes.substr(0, 4) == "FMAT");
  write_feature_matrix(dir.path() / "g.fmat", back);
  CHECK(slurp(dir.path() / "g.fmat") == bytes);

  CHECK(back.row({"zeta", 1})[0] == 3.25);
  CHECK_THROWS_AS(back.row({"zeta", 2}), DataError);
  CHECK_THROWS_AS(back.row({"missing", 0}), DataError);
  CHECK_FALSE(back.resolves({"alpha", 1}));

  SUBCASE("empty store") {
    write_feature_matrix(dir.path() / "e.fmat", FeatureStore{});
    CHECK(read_feature_matrix(dir.path() / "e.fmat").size() == 0);
  }
  SUBCASE("wrong magic") {
    std::string bad = bytes;
    bad[1] = 'N';
    spit(dir.path() / "bad.fmat", bad);
    CHECK_THROWS_AS(read_feature_matrix(dir.path() / "bad.fmat"), FormatError);
  }
  SUBCASE("truncated at every length") {
    for (std::size_t n = 0; n < bytes.size(); ++n) {
      spit(dir.path() / "t.fmat", bytes.substr(0, n));
      CHECK_THROWS_AS(read_feature_matrix(dir.path() / "t.fmat"), FormatError);
    }
  }
  SUBCASE("trailing bytes") {
    spit(dir.path() / "x.fmat", bytes + "junk");
    CHECK_THROWS_AS(read_feature_matrix(dir.path() / "x.fmat"), FormatError);
  }
  SUBCASE("unknown version") {
    std::string bad = bytes;
    bad[4] = 2;
    spit(dir.path() / "v.fmat", bad);
    CHECK_THROWS_AS(read_feature_matrix(dir.path() / "v.fmat"), FormatError);
  }
  SUBCASE("non-finite values") {
    std::string bad = bytes;
    // First f64 of the first entry ("alpha") lives after the header and entry header.
    const std::size_t offset = 4 + 4 + 4 + 2 + 5 + 4 + 4;
    const double nan = std::nan("");
    std::memcpy(bad.data() + offset, &nan, sizeof nan);
    spit(dir.path() / "n.fmat", bad);
    CHECK_THROWS_AS(read_feature_matrix(dir.path() / "n.fmat"), FormatError);
  }
  CHECK_THROWS_AS(read_feature_matrix(dir.path() / "nowhere.fmat"), Error);
}

TEST_CASE("scene JSON round trip") {
  std::mt19937_64 rng(31);
  auto rs = mgr::testing::random_scene(rng, 3);
  rs.scene.pairs[0].union_feature_ref = FeatureRef{"person", 1};
  const Scene back = scene_from_json(scene_to_json(rs.scene), "mem");
  CHECK(scene_to_json(back) == scene_to_json(rs.scene));
  CHECK(back.pairs[0].union_feature_ref->row == 1);
}

TEST_CASE("loading a generated dataset") {
  SmallSynth synth;
  const Dataset d = load_manifest(synth.manifests[0]);
  CHECK(d.manifest.split == "train");
  CHECK(d.scenes.size() == 12);
  CHECK(d.num_classes() == 6);
  CHECK(d.samples().size() == 12);
  CHECK(d.manifest.class_names == synthetic_class_names(6));

  const auto scene_path = synth.manifests[0].parent_path() / d.manifest.scenes[0];
  json scene = json::parse(slurp(scene_path));

  SUBCASE("a person with 16 keypoints is rejected with its location") {
    scene["persons"][1]["keypoints"].erase(16);
    spit(scene_path, scene.dump());
    try {
      load_manifest(synth.manifests[0]);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(scene_path.filename().string()) != std::string::npos);
      CHECK(msg.find("/persons/1/keypoints") != std::string::npos);
      CHECK(msg.find("16") != std::string::npos);
    }
  }
  SUBCASE("label out of range") {
    scene["pairs"][0]["label"] = 6;
    spit(scene_path, scene.dump());
    CHECK_THROWS_AS(load_manifest(synth.manifests[0]), DataError);
  }
  SUBCASE("dangling feature ref") {
    scene["objects"][0]["feature_ref"]["row"] = 100000;
    spit(scene_path, scene.dump());
    CHECK_THROWS_AS(load_manifest(synth.manifests[0]), DataError);
  }
  SUBCASE("too many objects") {
    for (int i = 0; i < 2; ++i) scene["objects"].push_back(scene["objects"][0]);
    spit(scene_path, scene.dump());
    CHECK_THROWS_AS(load_manifest(synth.manifests[0]), DataError);
  }
  SUBCASE("keypoint outside the image") {
    scene["persons"][0]["keypoints"][3][0] = -40.0;
    spit(scene_path, scene.dump());
    CHECK_THROWS_AS(load_manifest(synth.manifests[0]), DataError);
  }
  SUBCASE("malformed JSON") {
    spit(scene_path, "{\"image_id\": ");
    CHECK_THROWS_AS(load_manifest(synth.manifests[0]), FormatError);
  }
  SUBCASE("bad manifest split and duplicate class names") {
    json m = json::parse(slurp(synth.manifests[0]));
    m["split"] = "holdout";
    CHECK_THROWS_AS(manifest_from_json(m, "m"), DataError);
    m["split"] = "val";
    m["class_names"][1] = m["class_names"][0];
    CHECK_THROWS_AS(manifest_from_json(m, "m"), DataError);
  }
}

TEST_CASE("random mutations never crash the loader") {
  SmallSynth synth;
  const Dataset d = load_manifest(synth.manifests[1]);
  const auto scene_path = synth.manifests[1].parent_path() / d.manifest.scenes[0];
  const std::string original = slurp(scene_path);
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> byte(0, 255);
  int rejected = 0;
  for (int t = 0; t < 150; ++t) {
    std::string mutated = original;
    std::uniform_int_distribution<std::size_t> pos(0, mutated.size() - 1);
    const int edits = 1 + t % 4;
    for (int e = 0; e < edits; ++e) {
      const std::size_t at = pos(rng);
      switch (t % 3) {
        case 0: mutated[at] = static_cast<char>(byte(rng)); break;
        case 1: mutated.erase(at, 1); break;
        default: mutated.resize(at); break;
      }
      if (mutated.empty()) break;
      pos = std::uniform_int_distribution<std::size_t>(0, mutated.size() - 1);
    }
    spit(scene_path, mutated);
    try {
      load_manifest(synth.manifests[1]);
    } catch (const Error&) {
      ++rejected;
    }
  }
  CHECK(rejected > 0);
}

TEST_CASE("synthetic generator") {
  SyntheticConfig c;
  c.seed = 8;
  c.splits = {{"train", 300}};
  c.region_dim = 4;
  c.global_dim = 3;

  mgr::testing::TempDir a("gen_a"), b("gen_b");
  const auto pa = generate_synthetic(c, a.path());
  const auto pb = generate_synthetic(c, b.path());
  REQUIRE(pa.size() == 1);
  CHECK(slurp(pa[0]) == slurp(pb[0]));
  CHECK(slurp(a.path() / "train_features.fmat") == slurp(b.path() / "train_features.fmat"));
  CHECK(slurp(a.path() / "train" / "scene_00017.json") == slurp(b.path() / "train" / "scene_00017.json"));

  const Dataset d = load_manifest(pa[0]);
  std::map<std::size_t, int> counts;
  for (const Scene& s : d.scenes) {
    REQUIRE(s.pairs.size() == 1);
    CHECK(rule_label(s, 6) == s.pairs[0].label);
    ++counts[s.pairs[0].label];
  }
  CHECK(counts.size() == 6);
  for (auto [label, n] : counts) CHECK(std::abs(n / 300.0 - 1.0 / 6.0) <= 0.05);

  SUBCASE("label noise flips roughly the configured share") {
    SyntheticConfig noisy = c;
    noisy.rule_noise = 0.3;
    mgr::testing::TempDir n("gen_noise");
    const Dataset dn = load_manifest(generate_synthetic(noisy, n.path())[0]);
    int flipped = 0;
    for (const Scene& s : dn.scenes) flipped += rule_label(s, 6) != s.pairs[0].label;
    CHECK(flipped > 50);
    CHECK(flipped < 130);
  }
  SUBCASE("other class counts") {
    SyntheticConfig three = c;
    three.classes = 3;
    three.objects_per_scene = 3;
    three.splits = {{"val", 30}};
    mgr::testing::TempDir t("gen_three");
    const Dataset d3 = load_manifest(generate_synthetic(three, t.path())[0]);
    CHECK(d3.manifest.class_names == std::vector<std::string>{"class_0", "class_1", "class_2"});
    for (const Scene& s : d3.scenes) CHECK(rule_label(s, 3) == s.pairs[0].label);
  }
  SyntheticConfig bad = c;
  bad.classes = 1;
  CHECK_THROWS_AS(generate_synthetic(bad, a.path()), InvalidInput);
}

#include "mgr/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mgr/error.hpp"

namespace mgr {

using nlohmann::json;

namespace {

// Walks a JSON document, tracking a JSON-pointer style location for errors.
class Cursor {
 public:
  Cursor(const json& j, std::string where) : j_(j), where_(std::move(where)) {}

  [[noreturn]] void fail(const std::string& msg) const { throw DataError(where_ + ": " + msg); }

  Cursor at(const std::string& key) const {
    if (!j_.is_object()) fail("expected an object");
    auto it = j_.find(key);
    if (it == j_.end()) fail("missing key '" + key + "'");
    return Cursor(*it, where_ + "/" + key);
  }
  Cursor at(std::size_t i) const {
    if (!j_.is_array() || i >= j_.size()) fail("missing element " + std::to_string(i));
    return Cursor(j_[i], where_ + "/" + std::to_string(i));
  }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  std::size_t array_size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }
  std::size_t array_size(std::size_t expected, const std::string& what) const {
    const std::size_t n = array_size();
    if (n != expected) fail(what + " " + std::to_string(n) + ", expected " + std::to_string(expected));
    return n;
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("non-finite number");
    return v;
  }
  std::size_t index() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long long>() >= 0))
      fail("expected a non-negative integer");
    return j_.get<std::size_t>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
};

Box parse_box(const Cursor& c) {
  c.array_size(4, "box length");
  Box b{c.at(0).number(), c.at(1).number(), c.at(2).number(), c.at(3).number()};
  try {
    b.validate();
  } catch (const InvalidInput& e) {
    c.fail(e.what());
  }
  return b;
}

FeatureRef parse_ref(const Cursor& c) {
  return FeatureRef{c.at("name").string(), c.at("row").index()};
}

json ref_json(const FeatureRef& r) { return json{{"name", r.name}, {"row", r.row}}; }
json box_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

Scene scene_from_json(const json& j, const std::string& context) {
  const Cursor root(j, context);
  Scene s;
  s.image_id = root.at("image_id").string();
  s.width = root.at("width").number();
  s.height = root.at("height").number();
  s.global_feature_ref = parse_ref(root.at("global_feature_ref"));

  const Cursor persons = root.at("persons");
  for (std::size_t p = 0; p < persons.array_size(); ++p) {
    const Cursor pc = persons.at(p);
    PersonAnnotation person;
    person.box = parse_box(pc.at("box"));
    const Cursor kps = pc.at("keypoints");
    kps.array_size(kKeypointsPerPerson, "keypoint count");
    for (std::size_t k = 0; k < kKeypointsPerPerson; ++k) {
      const Cursor kc = kps.at(k);
      kc.array_size(3, "keypoint entry length");
      Keypoint kp{kc.at(0).number(), kc.at(1).number(), kc.at(2).number(), static_cast<int>(k)};
      try {
        kp.validate();
      } catch (const InvalidInput& e) {
        kc.fail(e.what());
      }
      person.keypoints[k] = kp;
    }
    const Cursor heat = pc.at("heatmap_peaks");
    heat.array_size(kKeypointsPerPerson, "heatmap keypoint count");
    for (std::size_t k = 0; k < kKeypointsPerPerson; ++k) {
      const Cursor hk = heat.at(k);
      const std::size_t n = hk.array_size();
      if (n < kPeaksPerKeypoint)
        hk.fail("heatmap peak count " + std::to_string(n) + ", need at least " + std::to_string(kPeaksPerKeypoint));
      for (std::size_t i = 0; i < n; ++i) {
        const Cursor pk = hk.at(i);
        pk.array_size(3, "heatmap peak length");
        HeatmapPeak peak{pk.at(0).number(), pk.at(1).number(), pk.at(2).number()};
        if (!person.heatmap_peaks[k].empty() && peak.score > person.heatmap_peaks[k].back().score)
          pk.fail("heatmap peaks not sorted by descending score");
        person.heatmap_peaks[k].push_back(peak);
      }
    }
    person.feature_ref = parse_ref(pc.at("feature_ref"));
    s.persons.push_back(std::move(person));
  }

  const Cursor objects = root.at("objects");
  for (std::size_t o = 0; o < objects.array_size(); ++o) {
    const Cursor oc = objects.at(o);
    ObjectAnnotation obj;
    obj.box = parse_box(oc.at("box"));
    obj.category = oc.at("category").string();
    obj.confidence = oc.at("confidence").number();
    if (!(obj.confidence >= 0.0 && obj.confidence <= 1.0)) oc.at("confidence").fail("confidence outside [0,1]");
    obj.feature_ref = parse_ref(oc.at("feature_ref"));
    s.objects.push_back(std::move(obj));
  }

  const Cursor pairs = root.at("pairs");
  for (std::size_t i = 0; i < pairs.array_size(); ++i) {
    const Cursor pc = pairs.at(i);
    RelationInstance r;
    r.person_a = pc.at("a").index();
    r.person_b = pc.at("b").index();
    r.label = pc.at("label").index();
    if (pc.has("union_feature_ref")) r.union_feature_ref = parse_ref(pc.at("union_feature_ref"));
    s.pairs.push_back(std::move(r));
  }
  return s;
}

json scene_to_json(const Scene& s) {
  json persons = json::array();
  for (const auto& p : s.persons) {
    json kps = json::array();
    for (const auto& k : p.keypoints) kps.push_back(json::array({k.x, k.y, k.confidence}));
    json heat = json::array();
    for (const auto& peaks : p.heatmap_peaks) {
      json arr = json::array();
      for (const auto& pk : peaks) arr.push_back(json::array({pk.x, pk.y, pk.score}));
      heat.push_back(std::move(arr));
    }
    persons.push_back(json{{"box", box_json(p.box)},
                           {"keypoints", std::move(kps)},
                           {"heatmap_peaks", std::move(heat)},
                           {"feature_ref", ref_json(p.feature_ref)}});
  }
  json objects = json::array();
  for (const auto& o : s.objects)
    objects.push_back(json{{"box", box_json(o.box)},
                           {"category", o.category},
                           {"confidence", o.confidence},
                           {"feature_ref", ref_json(o.feature_ref)}});
  json pairs = json::array();
  for (const auto& r : s.pairs) {
    json pj{{"a", r.person_a}, {"b", r.person_b}, {"label", r.label}};
    if (r.union_feature_ref) pj["union_feature_ref"] = ref_json(*r.union_feature_ref);
    pairs.push_back(std::move(pj));
  }
  return json{{"image_id", s.image_id},
              {"width", s.width},
              {"height", s.height},
              {"persons", std::move(persons)},
              {"objects", std::move(objects)},
              {"global_feature_ref", ref_json(s.global_feature_ref)},
              {"pairs", std::move(pairs)}};
}

Scene load_scene(const std::filesystem::path& path, std::size_t num_classes, std::size_t max_objects) {
  Scene s = scene_from_json(parse_file(path), path.string());
  try {
    s.validate(num_classes, max_objects);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return s;
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << scene_to_json(scene).dump() << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

DatasetManifest manifest_from_json(const json& j, const std::string& context) {
  const Cursor root(j, context);
  DatasetManifest m;
  const Cursor names = root.at("class_names");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names.array_size(); ++i) {
    std::string name = names.at(i).string();
    if (!seen.insert(name).second) names.at(i).fail("duplicate class name '" + name + "'");
    m.class_names.push_back(std::move(name));
  }
  if (m.class_names.empty()) names.fail("class_names must not be empty");
  const Cursor scenes = root.at("scenes");
  for (std::size_t i = 0; i < scenes.array_size(); ++i) m.scenes.push_back(scenes.at(i).string());
  m.feature_store = root.at("feature_store").string();
  m.split = root.at("split").string();
  if (m.split != "train" && m.split != "val" && m.split != "test")
    root.at("split").fail("split must be train, val or test");
  return m;
}

json manifest_to_json(const DatasetManifest& m) {
  return json{{"class_names", m.class_names},
              {"scenes", m.scenes},
              {"feature_store", m.feature_store},
              {"split", m.split}};
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  write_json(path, manifest_to_json(manifest));
}

std::vector<Sample> Dataset::samples() const {
  std::vector<Sample> out;
  for (const Scene& s : scenes)
    for (const RelationInstance& r : s.pairs) out.push_back(Sample{&s, r});
  return out;
}

Dataset load_manifest(const std::filesystem::path& path, std::size_t max_objects) {
  Dataset d;
  d.manifest_path = path;
  d.manifest = manifest_from_json(parse_file(path), path.string());
  const auto base = path.parent_path();
  d.features = read_feature_matrix(base / d.manifest.feature_store);

  std::size_t region_dim = 0;
  std::size_t global_dim = 0;
  auto check = [&](const std::filesystem::path& file, const FeatureRef& ref, std::size_t& dim, const std::string& what) {
    if (!d.features.resolves(ref))
      throw DataError(file.string() + ": dangling " + what + " feature ref " + ref.name + "[" +
                      std::to_string(ref.row) + "]");
    const std::size_t cols = d.features.matrix(ref.name).cols();
    if (dim == 0) dim = cols;
    if (cols != dim)
      throw DataError(file.string() + ": " + what + " feature width " + std::to_string(cols) + " != " +
                      std::to_string(dim));
  };

  d.scenes.reserve(d.manifest.scenes.size());
  for (const std::string& rel : d.manifest.scenes) {
    const auto file = base / rel;
    Scene s = load_scene(file, d.num_classes(), max_objects);
    for (const auto& p : s.persons) check(file, p.feature_ref, region_dim, "person");
    for (const auto& o : s.objects) check(file, o.feature_ref, region_dim, "object");
    for (const auto& r : s.pairs)
      if (r.union_feature_ref) check(file, *r.union_feature_ref, region_dim, "union");
    check(file, s.global_feature_ref, global_dim, "global");
    d.scenes.push_back(std::move(s));
  }
  return d;
}

}  // namespace mgr

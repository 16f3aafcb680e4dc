#include "mgr/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "mgr/dataset.hpp"
#include "mgr/error.hpp"
#include "mgr/feature_store.hpp"

namespace mgr {

namespace {

// Upright person facing the camera, keypoints in box-relative coordinates.
constexpr std::array<std::array<double, 2>, kKeypointsPerPerson> kTemplate = {{
    {0.50, 0.07}, {0.54, 0.05}, {0.46, 0.05}, {0.58, 0.07}, {0.42, 0.07}, {0.68, 0.20},
    {0.32, 0.20}, {0.75, 0.36}, {0.25, 0.36}, {0.80, 0.50}, {0.20, 0.50}, {0.62, 0.55},
    {0.38, 0.55}, {0.62, 0.75}, {0.38, 0.75}, {0.62, 0.94}, {0.38, 0.94},
}};

constexpr std::size_t kContactWrist = 10;
constexpr std::size_t kPeaksWritten = 12;
constexpr double kPersonTop = 200.0;
constexpr double kDistractorBottom = 190.0;

const std::array<const char*, 16> kCategories = {
    "wine_glass", "dining_table", "teddy_bear", "laptop",   "handbag", "bench",
    "cup",        "book",         "sports_ball", "cell_phone", "umbrella", "bicycle",
    "tie",        "cake",         "dog",        "clock",
};

struct World {
  std::vector<std::vector<double>> category_embedding;
  std::vector<std::vector<double>> person_group_embedding;
  std::vector<std::vector<double>> global_direction;
};

std::vector<double> gaussian_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

std::size_t group_count(std::size_t classes) { return (classes + 1) / 2; }

World make_world(const SyntheticConfig& c) {
  std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  World w;
  for (std::size_t k = 0; k < c.classes; ++k) w.category_embedding.push_back(gaussian_vector(c.region_dim, rng));
  for (std::size_t g = 0; g < group_count(c.classes); ++g)
    w.person_group_embedding.push_back(gaussian_vector(c.region_dim, rng));
  for (std::size_t g = 0; g < group_count(c.classes); ++g) {
    auto v = gaussian_vector(c.global_dim, rng);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    // Unit direction scaled so its projection dominates per-entry noise.
    for (double& x : v) x *= 2.0 / norm;
    w.global_direction.push_back(std::move(v));
  }
  return w;
}

class SplitWriter {
 public:
  SplitWriter(const SyntheticConfig& c, const World& w, std::mt19937_64& rng)
      : c_(c), w_(w), rng_(rng), noise_(0.0, c.feature_noise) {}

  Scene make_scene(std::size_t index, std::size_t label) {
    Scene s;
    s.image_id = "synthetic_" + std::to_string(index);
    s.width = c_.image_width;
    s.height = c_.image_height;

    const bool close = label % 2 == 0;
    const Box box_a = person_box(uniform(20.0, 100.0));
    const double gap = close ? uniform(0.0, 30.0) : uniform(200.0, 280.0);
    const Box box_b = person_box(box_a.x2 + gap);
    s.persons.push_back(make_person(box_a, label));
    s.persons.push_back(make_person(box_b, label));

    std::vector<std::size_t> categories{label};
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < c_.classes; ++k)
      if (k != label) others.push_back(k);
    std::shuffle(others.begin(), others.end(), rng_);
    const std::size_t m = std::min(c_.objects_per_scene, c_.classes);
    categories.insert(categories.end(), others.begin(), others.begin() + static_cast<std::ptrdiff_t>(m - 1));

    const Keypoint& wrist = s.persons[0].keypoints[kContactWrist];
    std::vector<ObjectAnnotation> objects;
    for (std::size_t i = 0; i < categories.size(); ++i) {
      ObjectAnnotation o;
      o.category = synthetic_category(categories[i]);
      o.confidence = uniform(0.5, 1.0);
      o.box = i == 0 ? contact_box(wrist) : distractor_box();
      o.feature_ref = {"object", objects_.size()};
      objects_.push_back(feature(w_.category_embedding[categories[i]], 1.0));
      objects.push_back(std::move(o));
    }
    std::shuffle(objects.begin(), objects.end(), rng_);
    s.objects = std::move(objects);

    s.global_feature_ref = {"global", globals_.size()};
    globals_.push_back(feature(w_.global_direction[label / 2], 1.0));

    std::size_t observed = label;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng_) < c_.rule_noise) observed = (label + 1 + rng_() % (c_.classes - 1)) % c_.classes;
    s.pairs.push_back(RelationInstance{0, 1, observed, std::nullopt});
    return s;
  }

  void fill_store(FeatureStore& store) const {
    store.put("person", stack(persons_, c_.region_dim));
    store.put("object", stack(objects_, c_.region_dim));
    store.put("global", stack(globals_, c_.global_dim));
  }

 private:
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  Box person_box(double x1) {
    const double w = uniform(80.0, 110.0);
    const double h = uniform(200.0, 240.0);
    const double y1 = uniform(kPersonTop + 5.0, c_.image_height - 5.0 - h);
    return Box{x1, y1, x1 + w, y1 + h};
  }

  PersonAnnotation make_person(const Box& box, std::size_t label) {
    PersonAnnotation p;
    p.box = box;
    std::normal_distribution<double> jitter(0.0, 0.01);
    std::normal_distribution<double> spread(0.0, 6.0);
    for (std::size_t k = 0; k < kKeypointsPerPerson; ++k) {
      const double fx = std::clamp(kTemplate[k][0] + jitter(rng_), 0.02, 0.98);
      const double fy = std::clamp(kTemplate[k][1] + jitter(rng_), 0.02, 0.98);
      Keypoint kp{box.x1 + fx * box.width(), box.y1 + fy * box.height(), uniform(0.6, 1.0), static_cast<int>(k)};
      p.keypoints[k] = kp;

      auto& peaks = p.heatmap_peaks[k];
      peaks.push_back({kp.x, kp.y, kp.confidence});
      for (std::size_t i = 1; i < kPeaksWritten; ++i) {
        peaks.push_back({std::clamp(kp.x + spread(rng_), 0.0, c_.image_width),
                         std::clamp(kp.y + spread(rng_), 0.0, c_.image_height),
                         kp.confidence * uniform(0.05, 0.9)});
      }
      std::stable_sort(peaks.begin(), peaks.end(),
                       [](const HeatmapPeak& a, const HeatmapPeak& b) { return a.score > b.score; });
    }
    p.feature_ref = {"person", persons_.size()};
    persons_.push_back(feature(w_.person_group_embedding[label / 2], 0.5));
    return p;
  }

  Box contact_box(const Keypoint& wrist) {
    const double half = uniform(15.0, 25.0);
    return Box{std::max(0.0, wrist.x - half), std::max(0.0, wrist.y - half),
               std::min(c_.image_width, wrist.x + half), std::min(c_.image_height, wrist.y + half)};
  }

  Box distractor_box() {
    const double w = uniform(40.0, 100.0);
    const double h = uniform(30.0, 80.0);
    const double x1 = uniform(0.0, c_.image_width - w);
    const double y1 = uniform(5.0, kDistractorBottom - h);
    return Box{x1, y1, x1 + w, y1 + h};
  }

  std::vector<double> feature(const std::vector<double>& signal, double strength) {
    std::vector<double> v(signal.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = strength * signal[i] + noise_(rng_);
    return v;
  }

  static Matrix stack(const std::vector<std::vector<double>>& rows, std::size_t dim) {
    Matrix m(rows.size(), dim);
    for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    return m;
  }

  const SyntheticConfig& c_;
  const World& w_;
  std::mt19937_64& rng_;
  std::normal_distribution<double> noise_;
  std::vector<std::vector<double>> persons_;
  std::vector<std::vector<double>> objects_;
  std::vector<std::vector<double>> globals_;
};

}  // namespace

void SyntheticConfig::validate() const {
  if (classes < 2) throw InvalidInput("synthetic data needs at least 2 classes");
  if (!(rule_noise >= 0.0 && rule_noise < 1.0)) throw InvalidInput("rule_noise must lie in [0,1)");
  if (objects_per_scene == 0 || objects_per_scene > kDefaultMaxObjects)
    throw InvalidInput("objects_per_scene must lie in [1," + std::to_string(kDefaultMaxObjects) + "]");
  if (region_dim == 0 || global_dim == 0) throw InvalidInput("feature dimensions must be positive");
  if (!(feature_noise >= 0.0)) throw InvalidInput("feature_noise must be non-negative");
  if (image_width < 640.0 || image_height < 480.0) throw InvalidInput("synthetic images must be at least 640x480");
  for (const auto& [name, count] : splits) {
    if (name != "train" && name != "val" && name != "test") throw InvalidInput("unknown split '" + name + "'");
    if (count == 0) throw InvalidInput("split '" + name + "' is empty");
  }
}

std::vector<std::string> synthetic_class_names(std::size_t classes) {
  if (classes == 6) return {"friend", "family", "couple", "professional", "commercial", "no_relation"};
  std::vector<std::string> names;
  for (std::size_t k = 0; k < classes; ++k) names.push_back("class_" + std::to_string(k));
  return names;
}

std::string synthetic_category(std::size_t label) {
  if (label < kCategories.size()) return kCategories[label];
  return "category_" + std::to_string(label);
}

std::vector<std::filesystem::path> generate_synthetic(const SyntheticConfig& config,
                                                      const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const World world = make_world(config);

  std::vector<std::filesystem::path> manifests;
  for (std::size_t split_index = 0; split_index < config.splits.size(); ++split_index) {
    const auto& [split, count] = config.splits[split_index];
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(split_index + 1)};
    std::mt19937_64 rng(seq);

    // Stratified labels: every class appears floor(count / C) or ceil(count / C) times.
    std::vector<std::size_t> labels(count);
    for (std::size_t i = 0; i < count; ++i) labels[i] = i % config.classes;
    std::shuffle(labels.begin(), labels.end(), rng);

    const auto scene_dir = out_dir / split;
    std::filesystem::create_directories(scene_dir);
    SplitWriter writer(config, world, rng);
    DatasetManifest manifest;
    manifest.class_names = synthetic_class_names(config.classes);
    manifest.feature_store = split + "_features.fmat";
    manifest.split = split;
    for (std::size_t i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "scene_%05zu.json", i);
      Scene scene = writer.make_scene(i, labels[i]);
      save_scene(scene_dir / name, scene);
      manifest.scenes.push_back(split + "/" + name);
    }

    FeatureStore store;
    writer.fill_store(store);
    write_feature_matrix(out_dir / manifest.feature_store, store);
    const auto manifest_path = out_dir / (split + ".json");
    save_manifest(manifest_path, manifest);
    manifests.push_back(manifest_path);
  }
  return manifests;
}

}  // namespace mgr

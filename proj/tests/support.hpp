#pragma once

// Test-only helpers: random scene builders and brute-force reference
// implementations that do not call into the code paths they check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mgr/feature_store.hpp"
#include "mgr/numerics.hpp"
#include "mgr/scene.hpp"

namespace mgr::testing {

struct RandomScene {
  Scene scene;
  FeatureStore store;
};

/// Two (or more) persons with keypoints inside their boxes and `objects`
/// boxes scattered so that some keypoints land inside them.
inline RandomScene random_scene(std::mt19937_64& rng, std::size_t objects, std::size_t region_dim = 4,
                                std::size_t global_dim = 3, std::size_t persons = 2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomScene rs;
  Scene& s = rs.scene;
  s.image_id = "random";
  s.width = 200.0 + 200.0 * u(rng);
  s.height = 150.0 + 150.0 * u(rng);

  auto rand_box = [&](double min_side, double max_side) {
    const double w = min_side + (max_side - min_side) * u(rng);
    const double h = min_side + (max_side - min_side) * u(rng);
    const double x1 = (s.width - w) * u(rng);
    const double y1 = (s.height - h) * u(rng);
    return Box{x1, y1, x1 + w, y1 + h};
  };

  Matrix person_rows(persons, region_dim), object_rows(objects, region_dim), global_row(1, global_dim);
  for (double& v : person_rows.data()) v = u(rng) * 2.0 - 1.0;
  for (double& v : object_rows.data()) v = u(rng) * 2.0 - 1.0;
  for (double& v : global_row.data()) v = u(rng) * 2.0 - 1.0;

  for (std::size_t p = 0; p < persons; ++p) {
    PersonAnnotation person;
    person.box = rand_box(30.0, 120.0);
    for (std::size_t k = 0; k < kKeypointsPerPerson; ++k) {
      Keypoint kp{person.box.x1 + u(rng) * person.box.width(), person.box.y1 + u(rng) * person.box.height(),
                  u(rng), static_cast<int>(k)};
      person.keypoints[k] = kp;
      double score = 1.0;
      for (std::size_t i = 0; i < kPeaksPerKeypoint + 2; ++i) {
        person.heatmap_peaks[k].push_back({u(rng) * s.width, u(rng) * s.height, score});
        score *= 0.5 + 0.5 * u(rng);
      }
    }
    person.feature_ref = {"person", p};
    s.persons.push_back(std::move(person));
  }
  for (std::size_t o = 0; o < objects; ++o) {
    ObjectAnnotation obj;
    obj.box = rand_box(10.0, 90.0);
    obj.category = "thing_" + std::to_string(o);
    obj.confidence = u(rng);
    obj.feature_ref = {"object", o};
    s.objects.push_back(std::move(obj));
  }
  s.global_feature_ref = {"global", 0};
  s.pairs.push_back(RelationInstance{0, 1, 0, std::nullopt});

  rs.store.put("person", person_rows);
  if (objects > 0) rs.store.put("object", object_rows);
  rs.store.put("global", global_row);
  return rs;
}

/// Literal MS-COCO skeleton, 1-based as published with the dataset annotations.
inline const std::vector<std::pair<int, int>>& coco_skeleton_one_based() {
  static const std::vector<std::pair<int, int>> kBones = {
      {16, 14}, {14, 12}, {17, 15}, {15, 13}, {12, 13}, {6, 12}, {7, 13}, {6, 7}, {6, 8}, {7, 9},
      {8, 10},  {9, 11},  {2, 3},   {1, 2},   {1, 3},   {2, 4},  {3, 5},  {4, 6}, {5, 7},
  };
  return kBones;
}

inline bool oracle_point_in_box(double x, double y, const Box& b) {
  return b.x1 <= x && x < b.x2 && b.y1 <= y && y < b.y2;
}

/// Person-object block of the POG (rows: A, B, union; cols: objects) by direct
/// enumeration of (keypoint, object) pairs.
inline std::vector<std::vector<double>> oracle_pog_person_object(const Scene& s, std::size_t a, std::size_t b,
                                                                 double min_conf = 0.0) {
  std::vector<std::vector<double>> out(3, std::vector<double>(s.objects.size(), 0.0));
  const std::size_t who[2] = {a, b};
  for (int p = 0; p < 2; ++p)
    for (std::size_t o = 0; o < s.objects.size(); ++o)
      for (const Keypoint& k : s.persons[who[p]].keypoints)
        if (k.confidence >= min_conf && oracle_point_in_box(k.x, k.y, s.objects[o].box)) out[p][o] = 1.0;
  for (std::size_t o = 0; o < s.objects.size(); ++o) out[2][o] = (out[0][o] > 0 || out[1][o] > 0) ? 1.0 : 0.0;
  return out;
}

/// Full POG adjacency from the construction rules, entry by entry.
inline Matrix oracle_pog(const Scene& s, std::size_t a, std::size_t b) {
  const auto po = oracle_pog_person_object(s, a, b);
  const std::size_t n = 3 + s.objects.size();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool pi = i < 3, pj = j < 3;
      if (pi && pj) m(i, j) = 1.0;
      else if (!pi && !pj) m(i, j) = 1.0;
      else if (pi) m(i, j) = po[i][j - 3];
      else m(i, j) = po[j][i - 3];
    }
  return m;
}

/// Full PPG adjacency from the construction rules, entry by entry.
inline Matrix oracle_ppg(const Scene& s, std::size_t a, std::size_t b) {
  const std::vector<int> active = {0, 9, 10, 15, 16};  // nose, left/right wrist, left/right ankle
  auto is_active = [&](int k) { return std::find(active.begin(), active.end(), k) != active.end(); };
  auto is_bone = [&](int u, int v) {
    for (auto [x, y] : coco_skeleton_one_based())
      if ((x - 1 == u && y - 1 == v) || (x - 1 == v && y - 1 == u)) return true;
    return false;
  };
  const std::size_t who[2] = {a, b};
  Matrix m(34, 34);
  const double diag = std::sqrt(s.width * s.width + s.height * s.height);
  for (int i = 0; i < 34; ++i)
    for (int j = 0; j < 34; ++j) {
      if (i == j) continue;
      const int pi = i / 17, pj = j / 17, ki = i % 17, kj = j % 17;
      if (pi == pj) {
        m(i, j) = is_bone(ki, kj) ? 1.0 : 0.0;
      } else if (is_active(ki) || is_active(kj)) {
        const Keypoint& u = s.persons[who[pi]].keypoints[ki];
        const Keypoint& v = s.persons[who[pj]].keypoints[kj];
        double d = std::sqrt((u.x - v.x) * (u.x - v.x) + (u.y - v.y) * (u.y - v.y)) / diag;
        if (d > 1.0) d = 1.0;
        m(i, j) = 2.0 - d;
      }
    }
  return m;
}

/// D^-1/2 (A + I) D^-1/2 through explicit diagonal matrices and triple loops.
inline Matrix oracle_normalize(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix at(n, n), dinv(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) at(i, j) = a(i, j) + (i == j ? 1.0 : 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += at(i, j);
    dinv(i, i) = 1.0 / std::sqrt(deg);
  }
  auto mul = [n](const Matrix& x, const Matrix& y) {
    Matrix z(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += x(i, k) * y(k, j);
        z(i, j) = acc;
      }
    return z;
  };
  return mul(mul(dinv, at), dinv);
}

/// AP by direct counting: for each positive i, precision over the instances
/// ranked at or above it (higher score, or equal score and not later index).
inline double oracle_average_precision(const std::vector<double>& scores, const std::vector<bool>& positives) {
  double sum = 0.0;
  int npos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positives[i]) continue;
    ++npos;
    int above = 0, above_pos = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] > scores[i] || (scores[j] == scores[i] && j <= i)) {
        ++above;
        if (positives[j]) ++above_pos;
      }
    }
    sum += static_cast<double>(above_pos) / above;
  }
  return npos == 0 ? -1.0 : sum / npos;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mgr_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace mgr::testing

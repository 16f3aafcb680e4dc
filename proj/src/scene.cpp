#include "mgr/scene.hpp"

#include <cmath>
#include <string>

#include "mgr/error.hpp"

namespace mgr {

void Scene::validate(std::size_t num_classes, std::size_t max_objects) const {
  const std::string where = "scene '" + image_id + "': ";
  if (!(width > 0.0) || !(height > 0.0)) throw DataError(where + "image size must be positive");
  if (!pairs.empty() && persons.size() < 2) throw DataError(where + "pairs need at least two persons");
  if (objects.size() > max_objects)
    throw DataError(where + "object count " + std::to_string(objects.size()) + " exceeds max_objects " +
                    std::to_string(max_objects));

  for (std::size_t p = 0; p < persons.size(); ++p) {
    const auto& person = persons[p];
    const std::string pw = where + "person " + std::to_string(p) + ": ";
    try {
      person.box.validate();
    } catch (const InvalidInput& e) {
      throw DataError(pw + e.what());
    }
    for (std::size_t k = 0; k < kKeypointsPerPerson; ++k) {
      const Keypoint& kp = person.keypoints[k];
      if (kp.index != static_cast<int>(k)) throw DataError(pw + "keypoint slot mismatch at " + std::to_string(k));
      try {
        kp.validate();
      } catch (const InvalidInput& e) {
        throw DataError(pw + "keypoint " + std::to_string(k) + ": " + e.what());
      }
      if (kp.x < 0.0 || kp.x > width || kp.y < 0.0 || kp.y > height)
        throw DataError(pw + "keypoint " + std::to_string(k) + " lies outside the image");
      const auto& peaks = person.heatmap_peaks[k];
      if (peaks.size() < kPeaksPerKeypoint)
        throw DataError(pw + "keypoint " + std::to_string(k) + " has " + std::to_string(peaks.size()) +
                        " heatmap peaks, need at least " + std::to_string(kPeaksPerKeypoint));
      for (std::size_t i = 0; i < peaks.size(); ++i) {
        if (!std::isfinite(peaks[i].x) || !std::isfinite(peaks[i].y) || !std::isfinite(peaks[i].score))
          throw DataError(pw + "non-finite heatmap peak");
        if (i > 0 && peaks[i].score > peaks[i - 1].score)
          throw DataError(pw + "heatmap peaks of keypoint " + std::to_string(k) + " not sorted by descending score");
      }
    }
  }

  for (std::size_t o = 0; o < objects.size(); ++o) {
    const std::string ow = where + "object " + std::to_string(o) + ": ";
    try {
      objects[o].box.validate();
    } catch (const InvalidInput& e) {
      throw DataError(ow + e.what());
    }
    if (!(objects[o].confidence >= 0.0 && objects[o].confidence <= 1.0))
      throw DataError(ow + "confidence outside [0,1]");
  }

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    const std::string pw = where + "pair " + std::to_string(i) + ": ";
    if (pair.person_a >= persons.size() || pair.person_b >= persons.size())
      throw DataError(pw + "person index out of range");
    if (pair.person_a == pair.person_b) throw DataError(pw + "a pair needs two distinct persons");
    if (pair.label >= num_classes)
      throw DataError(pw + "label " + std::to_string(pair.label) + " >= class count " + std::to_string(num_classes));
  }
}

}  // namespace mgr

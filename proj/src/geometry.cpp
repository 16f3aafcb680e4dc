#include "mgr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mgr/error.hpp"

namespace mgr {

void Box::validate() const {
  const bool finite = std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
  if (!finite || x1 < 0.0 || y1 < 0.0 || !(x1 < x2) || !(y1 < y2)) {
    std::ostringstream os;
    os << "invalid box (" << x1 << ", " << y1 << ", " << x2 << ", " << y2 << ")";
    throw InvalidInput(os.str());
  }
}

void Keypoint::validate() const {
  if (!std::isfinite(x) || !std::isfinite(y)) throw InvalidInput("keypoint coordinates must be finite");
  if (!(confidence >= 0.0 && confidence <= 1.0)) throw InvalidInput("keypoint confidence outside [0,1]");
  if (index < 0 || index > 16) throw InvalidInput("keypoint index outside [0,16]");
}

double iou(const Box& a, const Box& b) {
  a.validate();
  b.validate();
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  // Symmetric in a and b: the sum is commutative and exact for the identity case.
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

bool keypoint_hits_box(const Keypoint& k, const Box& b, double dilation) {
  b.validate();
  if (!(dilation >= 0.0)) throw InvalidInput("dilation must be non-negative");
  return k.x + dilation >= b.x1 && k.x - dilation < b.x2 && k.y + dilation >= b.y1 &&
         k.y - dilation < b.y2;
}

double normalized_distance(const Keypoint& a, const Keypoint& b, double image_w, double image_h) {
  if (!(image_w > 0.0) || !(image_h > 0.0)) throw InvalidInput("image dimensions must be positive");
  const double d = std::hypot(a.x - b.x, a.y - b.y);
  const double diag = std::hypot(image_w, image_h);
  return std::clamp(d / diag, 0.0, 1.0);
}

Box union_box(const Box& a, const Box& b) {
  return Box{std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
}

}  // namespace mgr

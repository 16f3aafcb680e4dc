#pragma once

namespace mgr {

/// Axis-aligned box in image pixels, inclusive-exclusive: [x1, x2) x [y1, y2).
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  /// Throws InvalidInput unless coordinates are finite, non-negative and x1 < x2, y1 < y2.
  void validate() const;

  bool contains(const Box& other) const {
    return x1 <= other.x1 && y1 <= other.y1 && x2 >= other.x2 && y2 >= other.y2;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

/// One COCO keypoint slot (index 0..16).
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
  int index = 0;

  void validate() const;
};

double iou(const Box& a, const Box& b);

/// Point-in-box test. With a positive dilation the point becomes a square of
/// half-side `dilation` and the test is square/box overlap. Points on the
/// right or bottom edge of the box are outside.
bool keypoint_hits_box(const Keypoint& k, const Box& b, double dilation = 0.0);

/// Euclidean distance divided by the image diagonal, clamped to [0, 1].
double normalized_distance(const Keypoint& a, const Keypoint& b, double image_w, double image_h);

Box union_box(const Box& a, const Box& b);

}  // namespace mgr

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace s3fd {

// Axis-aligned box in corner form with continuous coordinates.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  static Box from_xywh(double x, double y, double w, double h) {
    return {x, y, x + w, y + h};
  }
  static Box centered(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  }

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }
  bool valid() const { return x2 > x1 && y2 > y1; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct ScoredBox {
  Box box;
  double score = 0.0;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

// Regression target relative to an anchor: center offsets scaled by the
// anchor size, log size ratios.
struct BoxDelta {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;

  friend bool operator==(const BoxDelta&, const BoxDelta&) = default;
};

// Jaccard overlap. Zero for disjoint or touching boxes.
double iou(const Box& a, const Box& b);

BoxDelta encode_box(const Box& gt, const Box& anchor);

// Inverse of encode_box. Throws NumericError when the decoded box is not
// finite (e.g. exp overflow on a huge log-scale delta).
Box decode_box(const BoxDelta& delta, const Box& anchor);

// Intersection with the image rectangle [0,width]x[0,height]. The result may
// be degenerate when the box lies entirely outside.
Box clip_box(const Box& box, double width, double height);

struct NmsConfig {
  double iou_threshold = 0.3;
  std::size_t pre_top = 400;
  std::size_t post_top = 200;
  double conf_threshold = 0.05;
};

// Greedy hard NMS. Returns indices into `boxes` of the survivors, ordered by
// descending score; equal scores keep input order.
std::vector<std::size_t> nms_indices(std::span<const ScoredBox> boxes,
                                     const NmsConfig& config = {});

std::vector<ScoredBox> nms(std::span<const ScoredBox> boxes,
                           const NmsConfig& config = {});

}  // namespace s3fd

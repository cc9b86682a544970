#include "s3fd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "s3fd/errors.hpp"

namespace s3fd {

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

BoxDelta encode_box(const Box& gt, const Box& anchor) {
  const double wa = anchor.width();
  const double ha = anchor.height();
  return {(gt.center_x() - anchor.center_x()) / wa,
          (gt.center_y() - anchor.center_y()) / ha,
          std::log(gt.width() / wa), std::log(gt.height() / ha)};
}

Box decode_box(const BoxDelta& delta, const Box& anchor) {
  const double wa = anchor.width();
  const double ha = anchor.height();
  const double cx = anchor.center_x() + delta.dx * wa;
  const double cy = anchor.center_y() + delta.dy * ha;
  const double w = wa * std::exp(delta.dw);
  const double h = ha * std::exp(delta.dh);
  const Box out = Box::centered(cx, cy, w, h);
  if (!std::isfinite(out.x1) || !std::isfinite(out.y1) ||
      !std::isfinite(out.x2) || !std::isfinite(out.y2)) {
    throw NumericError("decode_box: non-finite box");
  }
  return out;
}

Box clip_box(const Box& box, double width, double height) {
  return {std::clamp(box.x1, 0.0, width), std::clamp(box.y1, 0.0, height),
          std::clamp(box.x2, 0.0, width), std::clamp(box.y2, 0.0, height)};
}

std::vector<std::size_t> nms_indices(std::span<const ScoredBox> boxes,
                                     const NmsConfig& config) {
  std::vector<std::size_t> order;
  order.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (boxes[i].score >= config.conf_threshold) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return boxes[a].score > boxes[b].score;
                   });
  if (order.size() > config.pre_top) order.resize(config.pre_top);

  std::vector<std::size_t> keep;
  std::vector<bool> suppressed(order.size(), false);
  for (std::size_t i = 0; i < order.size() && keep.size() < config.post_top;
       ++i) {
    if (suppressed[i]) continue;
    const Box& kept = boxes[order[i]].box;
    keep.push_back(order[i]);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (!suppressed[j] && iou(kept, boxes[order[j]].box) > config.iou_threshold) {
        suppressed[j] = true;
      }
    }
  }
  return keep;
}

std::vector<ScoredBox> nms(std::span<const ScoredBox> boxes,
                           const NmsConfig& config) {
  std::vector<ScoredBox> out;
  for (std::size_t i : nms_indices(boxes, config)) out.push_back(boxes[i]);
  return out;
}

}  // namespace s3fd

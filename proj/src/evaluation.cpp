#include "s3fd/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>

#include "s3fd/errors.hpp"

namespace s3fd {

std::vector<EvalImage> to_eval_images(const std::vector<ImageRecord>& records,
                                      const EvalConfig& config) {
  std::vector<EvalImage> out;
  out.reserve(records.size());
  for (const ImageRecord& r : records) {
    EvalImage image{r.path, {}};
    for (const FaceAnnotation& f : r.faces) {
      const bool ignored =
          (config.ignore_invalid && f.invalid != 0) || !f.box.valid();
      image.faces.push_back({f.box, ignored});
    }
    out.push_back(std::move(image));
  }
  return out;
}

SubsetList parse_subset_list(std::string_view text) {
  SubsetList out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.remove_suffix(1);
    }
    if (line.empty()) continue;
    const std::size_t split = line.find_last_of(" \t");
    if (split == std::string_view::npos) {
      throw ParseError(line_no, "expected 'filename face_index'");
    }
    std::string_view index_text = line.substr(split + 1);
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(index_text.data(),
                                     index_text.data() + index_text.size(), index);
    if (ec != std::errc() || ptr != index_text.data() + index_text.size()) {
      throw ParseError(line_no, "bad face index '" + std::string(index_text) + "'");
    }
    std::string_view name = line.substr(0, split);
    while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) {
      name.remove_suffix(1);
    }
    out.emplace(std::string(name), index);
  }
  return out;
}

std::vector<EvalImage> subset_filter(const std::vector<ImageRecord>& records,
                                     const SubsetList& subset,
                                     const EvalConfig& config) {
  std::map<std::string, std::size_t> by_path;
  for (std::size_t i = 0; i < records.size(); ++i) by_path.emplace(records[i].path, i);
  for (const auto& [path, face] : subset) {
    auto it = by_path.find(path);
    if (it == by_path.end()) {
      throw InputError("subset references unknown image '" + path + "'");
    }
    if (face >= records[it->second].faces.size()) {
      throw InputError("subset references face " + std::to_string(face) +
                       " of '" + path + "', which has only " +
                       std::to_string(records[it->second].faces.size()));
    }
  }

  std::vector<EvalImage> out = to_eval_images(records, config);
  for (EvalImage& image : out) {
    for (std::size_t f = 0; f < image.faces.size(); ++f) {
      if (!subset.contains({image.path, f})) image.faces[f].ignored = true;
    }
  }
  return out;
}

std::vector<MatchFlag> assign_tp_fp(std::span<const ScoredBox> dets,
                                    std::span<const GroundTruthFace> gts,
                                    double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<MatchFlag> flags(dets.size(), MatchFlag::kFalsePositive);
  std::vector<bool> consumed(gts.size(), false);
  for (std::size_t d : order) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (consumed[g]) continue;
      const double overlap = iou(dets[d].box, gts[g].box);
      if (overlap > best) {
        best = overlap;
        best_gt = g;
      }
    }
    if (best_gt == gts.size() || best < iou_threshold) continue;
    if (gts[best_gt].ignored) {
      flags[d] = MatchFlag::kIgnored;
    } else {
      flags[d] = MatchFlag::kTruePositive;
      consumed[best_gt] = true;
    }
  }
  return flags;
}

PRCurve pr_curve(std::span<const RankedFlag> flags, std::size_t num_gt) {
  std::vector<RankedFlag> ranked;
  for (const RankedFlag& f : flags) {
    if (f.flag != MatchFlag::kIgnored) ranked.push_back(f);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedFlag& a, const RankedFlag& b) {
                     return a.score > b.score;
                   });

  PRCurve curve;
  curve.num_gt = num_gt;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].flag == MatchFlag::kTruePositive) ++tp;
    const double recall = num_gt == 0 ? 0.0 : double(tp) / double(num_gt);
    const double precision = double(tp) / double(i + 1);
    curve.points.push_back({recall, precision, ranked[i].score});
  }
  curve.tp = tp;
  curve.fp = ranked.size() - tp;
  return curve;
}

APResult average_precision(const PRCurve& curve) {
  APResult result;
  result.num_gt = curve.num_gt;
  result.tp = curve.tp;
  result.fp = curve.fp;
  if (curve.num_gt == 0) return result;

  // Envelope: precision at each rank replaced by the best precision at any
  // later rank, then summed over the ranks where recall increases.
  const auto& pts = curve.points;
  std::vector<double> envelope(pts.size());
  double running = 0.0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].recall > prev_recall) {
      ap += (pts[i].recall - prev_recall) * envelope[i];
      prev_recall = pts[i].recall;
    }
  }
  result.ap = std::clamp(ap, 0.0, 1.0);
  return result;
}

Evaluation evaluate(const std::vector<EvalImage>& ground_truth,
                    const std::vector<ImageDetections>& detections,
                    double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw InputError("evaluate: iou threshold must lie in (0, 1)");
  }
  std::map<std::string, std::size_t> by_path;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    by_path.emplace(ground_truth[i].path, i);
  }

  std::size_t num_gt = 0;
  for (const EvalImage& image : ground_truth) {
    num_gt += std::size_t(std::count_if(image.faces.begin(), image.faces.end(),
                                        [](const GroundTruthFace& f) { return !f.ignored; }));
  }

  std::vector<RankedFlag> flags;
  for (const ImageDetections& image : detections) {
    auto it = by_path.find(image.path);
    if (it == by_path.end()) {
      throw InputError("detections for unannotated image '" + image.path + "'");
    }
    const auto per_image = assign_tp_fp(image.detections,
                                        ground_truth[it->second].faces, iou_threshold);
    for (std::size_t d = 0; d < per_image.size(); ++d) {
      flags.push_back({image.detections[d].score, per_image[d]});
    }
  }

  Evaluation out;
  out.curve = pr_curve(flags, num_gt);
  out.result = average_precision(out.curve);
  return out;
}

}  // namespace s3fd

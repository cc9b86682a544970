#include "s3fd/matching.hpp"

#include <algorithm>
#include <cmath>

#include "s3fd/errors.hpp"

namespace s3fd {

void MatchConfig::validate() const {
  if (!(0.0 < stage2_floor && stage2_floor < stage1_threshold &&
        stage1_threshold <= baseline_threshold && baseline_threshold < 1.0)) {
    throw InputError(
        "match config: need 0 < stage2_floor < stage1_threshold <= "
        "baseline_threshold < 1");
  }
  if (fixed_n && *fixed_n < 1) throw InputError("match config: fixed N < 1");
}

namespace {

// overlaps[f][a] = iou(face f, anchor a)
std::vector<std::vector<double>> overlap_matrix(std::span<const Box> faces,
                                                std::span<const Box> anchors) {
  std::vector<std::vector<double>> out(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    out[f].resize(anchors.size());
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      out[f][a] = iou(faces[f], anchors[a]);
    }
  }
  return out;
}

MatchResult baseline_from_overlaps(
    const std::vector<std::vector<double>>& overlaps, std::size_t num_anchors,
    double threshold) {
  const std::size_t num_faces = overlaps.size();
  MatchResult result;
  result.anchor_assignment.assign(num_anchors, kBackground);
  result.per_face_anchors.resize(num_faces);

  for (std::size_t f = 0; f < num_faces; ++f) {
    double best = 0.0;
    std::size_t best_anchor = num_anchors;
    for (std::size_t a = 0; a < num_anchors; ++a) {
      if (result.anchor_assignment[a] != kBackground) continue;
      if (overlaps[f][a] > best) {
        best = overlaps[f][a];
        best_anchor = a;
      }
    }
    if (best_anchor != num_anchors) {
      result.anchor_assignment[best_anchor] = int(f);
    }
  }

  for (std::size_t a = 0; a < num_anchors; ++a) {
    if (result.anchor_assignment[a] != kBackground) continue;
    double best = -1.0;
    int best_face = kBackground;
    for (std::size_t f = 0; f < num_faces; ++f) {
      if (overlaps[f][a] > best) {
        best = overlaps[f][a];
        best_face = int(f);
      }
    }
    if (best_face != kBackground && best > threshold) {
      result.anchor_assignment[a] = best_face;
    }
  }

  for (std::size_t a = 0; a < num_anchors; ++a) {
    if (result.anchor_assignment[a] != kBackground) {
      result.per_face_anchors[std::size_t(result.anchor_assignment[a])].push_back(a);
    }
  }
  return result;
}

}  // namespace

MatchResult match_baseline(std::span<const Box> faces,
                           std::span<const Box> anchors, double threshold) {
  return baseline_from_overlaps(overlap_matrix(faces, anchors), anchors.size(),
                                threshold);
}

MatchResult match_baseline(std::span<const Box> faces, const AnchorGrid& grid,
                           double threshold) {
  const auto boxes = grid.boxes();
  return match_baseline(faces, boxes, threshold);
}

MatchResult match_scale_compensated(std::span<const Box> faces,
                                    std::span<const Box> anchors,
                                    const MatchConfig& config) {
  config.validate();
  const auto overlaps = overlap_matrix(faces, anchors);
  MatchResult result =
      baseline_from_overlaps(overlaps, anchors.size(), config.stage1_threshold);
  if (faces.empty()) return result;

  if (config.fixed_n) {
    result.n_used = *config.fixed_n;
  } else {
    std::size_t total = 0;
    for (const auto& list : result.per_face_anchors) total += list.size();
    const std::size_t num_faces = faces.size();
    const auto rounded = (2 * total + num_faces) / (2 * num_faces);
    result.n_used = std::max(1, int(rounded));
  }
  const auto quota = std::size_t(result.n_used);

  std::vector<std::size_t> candidates;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    auto& matched = result.per_face_anchors[f];
    if (matched.size() >= quota) continue;

    candidates.clear();
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      if (result.anchor_assignment[a] == kBackground &&
          overlaps[f][a] > config.stage2_floor) {
        candidates.push_back(a);
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) {
                       return overlaps[f][a] > overlaps[f][b];
                     });
    const std::size_t take = std::min(quota - matched.size(), candidates.size());
    for (std::size_t k = 0; k < take; ++k) {
      result.anchor_assignment[candidates[k]] = int(f);
      matched.push_back(candidates[k]);
    }
    std::sort(matched.begin(), matched.end());
  }
  return result;
}

MatchResult match_scale_compensated(std::span<const Box> faces,
                                    const AnchorGrid& grid,
                                    const MatchConfig& config) {
  const auto boxes = grid.boxes();
  return match_scale_compensated(faces, boxes, config);
}

MatchStatsAccumulator::MatchStatsAccumulator(std::vector<ScaleBin> bins)
    : bins_(std::move(bins)), sums_(bins_.size(), 0.0), counts_(bins_.size(), 0) {
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (!(bins_[i].lo < bins_[i].hi) ||
        (i > 0 && bins_[i].lo < bins_[i - 1].hi)) {
      throw InputError("match stats: bins must be non-empty and ordered");
    }
  }
}

void MatchStatsAccumulator::add_face(const Box& face, std::size_t matched) {
  const double scale = std::sqrt(face.area());
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (scale >= bins_[i].lo && scale < bins_[i].hi) {
      sums_[i] += double(matched);
      ++counts_[i];
      return;
    }
  }
}

void MatchStatsAccumulator::add(std::span<const Box> faces,
                                const MatchResult& result) {
  if (result.per_face_anchors.size() != faces.size()) {
    throw InputError("match stats: result does not belong to these faces");
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    add_face(faces[f], result.per_face_anchors[f].size());
  }
}

MatchStats MatchStatsAccumulator::finish() const {
  MatchStats stats;
  stats.bins = bins_;
  stats.face_count = counts_;
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (counts_[i] == 0) {
      stats.mean_matched.push_back(std::nullopt);
    } else {
      stats.mean_matched.push_back(sums_[i] / double(counts_[i]));
    }
  }
  return stats;
}

MatchStats matched_count_stats(std::span<const Box> faces,
                               const MatchResult& result,
                               std::vector<ScaleBin> bins) {
  MatchStatsAccumulator acc(std::move(bins));
  acc.add(faces, result);
  return acc.finish();
}

std::vector<ScaleBin> bins_from_edges(std::span<const double> edges) {
  std::vector<ScaleBin> bins;
  for (std::size_t i = 1; i < edges.size(); ++i) {
    bins.push_back({edges[i - 1], edges[i]});
  }
  return bins;
}

}  // namespace s3fd

#pragma once

// Anchor-to-face assignment: the conventional two-phase matcher and the
// two-stage scale compensation matcher built on top of it.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "s3fd/anchors.hpp"
#include "s3fd/geometry.hpp"

namespace s3fd {

inline constexpr int kBackground = -1;

struct MatchConfig {
  double stage1_threshold = 0.35;
  double stage2_floor = 0.1;
  double baseline_threshold = 0.5;
  // Stage-two quota. Empty means the per-image mean of the stage-one counts,
  // rounded half-up and at least 1.
  std::optional<int> fixed_n;

  // Throws InputError unless 0 < floor < stage1 <= baseline < 1 and any fixed
  // quota is >= 1.
  void validate() const;
};

struct MatchResult {
  std::vector<int> anchor_assignment;  // face index or kBackground
  std::vector<std::vector<std::size_t>> per_face_anchors;  // ascending ids
  int n_used = 0;
};

// Phase A: faces in input order each claim their best-overlap anchor (lowest
// index on ties, skipping anchors claimed earlier, only if the overlap is
// positive). Phase B: every other anchor whose best overlap exceeds
// `threshold` goes to that face (lowest face index on ties).
MatchResult match_baseline(std::span<const Box> faces,
                           std::span<const Box> anchors, double threshold);
MatchResult match_baseline(std::span<const Box> faces, const AnchorGrid& grid,
                           double threshold);

// Stage one is match_baseline at stage1_threshold. Stage two tops up, in face
// order, every face holding fewer than N anchors with the still-unassigned
// anchors of highest overlap above stage2_floor. Stage-one assignments are
// never removed.
MatchResult match_scale_compensated(std::span<const Box> faces,
                                    std::span<const Box> anchors,
                                    const MatchConfig& config = {});
MatchResult match_scale_compensated(std::span<const Box> faces,
                                    const AnchorGrid& grid,
                                    const MatchConfig& config = {});

// Half-open face-scale interval [lo, hi), scale = sqrt(w * h).
struct ScaleBin {
  double lo = 0.0;
  double hi = 0.0;
};

struct MatchStats {
  std::vector<ScaleBin> bins;
  std::vector<std::optional<double>> mean_matched;  // empty bin -> nullopt
  std::vector<std::size_t> face_count;
};

// Accumulates per-bin matched counts over any number of images.
class MatchStatsAccumulator {
 public:
  explicit MatchStatsAccumulator(std::vector<ScaleBin> bins);

  void add(std::span<const Box> faces, const MatchResult& result);
  void add_face(const Box& face, std::size_t matched);
  MatchStats finish() const;

 private:
  std::vector<ScaleBin> bins_;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
};

MatchStats matched_count_stats(std::span<const Box> faces,
                               const MatchResult& result,
                               std::vector<ScaleBin> bins);

// Contiguous bins from consecutive edges.
std::vector<ScaleBin> bins_from_edges(std::span<const double> edges);

}  // namespace s3fd

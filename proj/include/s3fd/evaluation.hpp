#pragma once

// Detection scoring: greedy TP/FP assignment per image, a global
// precision-recall curve and all-points interpolated average precision.

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "s3fd/dataio.hpp"
#include "s3fd/geometry.hpp"

namespace s3fd {

struct EvalConfig {
  double iou_threshold = 0.5;
  bool ignore_invalid = true;
};

struct GroundTruthFace {
  Box box;
  bool ignored = false;  // matches against it are neither TP nor FP
};

struct EvalImage {
  std::string path;
  std::vector<GroundTruthFace> faces;
};

// Faces flagged invalid (when config.ignore_invalid) and zero-area faces are
// marked ignored.
std::vector<EvalImage> to_eval_images(const std::vector<ImageRecord>& records,
                                      const EvalConfig& config = {});

using SubsetList = std::set<std::pair<std::string, std::size_t>>;

// "filename face_index" per line. Throws ParseError.
SubsetList parse_subset_list(std::string_view text);

// Like to_eval_images, but faces outside the subset are also ignored. Throws
// InputError for a pair naming an unknown image or face index.
std::vector<EvalImage> subset_filter(const std::vector<ImageRecord>& records,
                                     const SubsetList& subset,
                                     const EvalConfig& config = {});

enum class MatchFlag { kTruePositive, kFalsePositive, kIgnored };

// Flags aligned with `dets`. Detections are visited by descending score
// (input order on ties); each takes the highest-overlap ground truth not yet
// consumed (lowest index on ties). Overlap >= iou_threshold gives TP and
// consumes the face, or IGNORED when that face is ignored; otherwise FP.
std::vector<MatchFlag> assign_tp_fp(std::span<const ScoredBox> dets,
                                    std::span<const GroundTruthFace> gts,
                                    double iou_threshold);

struct RankedFlag {
  double score = 0.0;
  MatchFlag flag = MatchFlag::kFalsePositive;
};

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double score = 0.0;  // threshold at which this point is reached
};

struct PRCurve {
  std::vector<PRPoint> points;
  std::size_t num_gt = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
};

// Ranks the non-ignored flags by descending score (stable) and emits one
// point per rank.
PRCurve pr_curve(std::span<const RankedFlag> flags, std::size_t num_gt);

struct APResult {
  std::optional<double> ap;  // empty when there is no ground truth
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t num_gt = 0;
};

// Area under the monotone precision envelope, integrated over every recall
// step.
APResult average_precision(const PRCurve& curve);

struct Evaluation {
  PRCurve curve;
  APResult result;
};

// Pairs detections with ground truth by path; images without detections
// contribute only their ground truth. Throws InputError for detections naming
// an image that has no annotation record.
Evaluation evaluate(const std::vector<EvalImage>& ground_truth,
                    const std::vector<ImageDetections>& detections,
                    double iou_threshold);

}  // namespace s3fd

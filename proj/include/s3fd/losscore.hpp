#pragma once

// Training objective: two-way softmax with max-out background on the lowest
// layer, smooth-L1 box regression, hard negative mining and the analytic
// gradients of the normalised sum.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "s3fd/geometry.hpp"

namespace s3fd {

struct LossConfig {
  double lambda = 4.0;
  int n_m = 3;
  double neg_pos_ratio = 3.0;

  void validate() const;
};

// (background, face)
using BinaryLogits = std::array<double, 2>;

// `scores` is (bg_1 .. bg_nm, face). Throws InputError unless it holds
// exactly n_m + 1 values.
BinaryLogits maxout_background(std::span<const double> scores, int n_m);

// -log softmax(logits)[label], label 1 = face.
double softmax_ce(const BinaryLogits& logits, int label);

double smooth_l1(const BoxDelta& pred, const BoxDelta& target);

// Indices of the k highest losses, k = min(#neg, floor(ratio * num_pos)),
// ordered by descending loss with ties to the lower index.
std::vector<std::size_t> hard_negative_mine(std::span<const double> neg_losses,
                                            std::size_t num_pos, double ratio);

struct AnchorSample {
  int label = 0;               // 1 face, 0 background
  std::vector<double> logits;  // 2 values, or n_m + 1 on the max-out layer
  BoxDelta pred;
  std::optional<BoxDelta> target;  // present exactly for positives
};

struct SampleBatch {
  std::vector<AnchorSample> anchors;
};

// Throws InputError when labels, targets and logit widths disagree.
void validate(const SampleBatch& batch, const LossConfig& config);

// Reduces logits of either width to (background, face).
BinaryLogits binary_logits(const AnchorSample& sample, int n_m);

// Keeps every positive and the hardest negatives by classification loss.
SampleBatch mine_batch(const SampleBatch& batch, const LossConfig& config);

struct LossTerms {
  double total = 0.0;
  double cls = 0.0;
  double reg = 0.0;
};

// Normalised objective over a batch whose negatives are already mined:
// cls = lambda / (#pos + #neg) * sum CE, reg = 1 / #pos * sum smooth-L1 over
// positives (zero when there are no positives).
LossTerms multitask_loss(const SampleBatch& batch, const LossConfig& config);

struct AnchorGradient {
  std::vector<double> d_logits;  // same width as the sample's logits
  BoxDelta d_pred;
};

std::vector<AnchorGradient> loss_gradients(const SampleBatch& batch,
                                           const LossConfig& config);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Central differences of multitask_loss against loss_gradients. Relative
// error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
GradCheckReport finite_difference_check(const SampleBatch& batch,
                                        const LossConfig& config,
                                        double step = 1e-5);

LossConfig loss_config_from_json(const nlohmann::json& doc);
SampleBatch sample_batch_from_json(const nlohmann::json& doc);

}  // namespace s3fd

#include "s3fd/losscore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "s3fd/errors.hpp"

namespace s3fd {

void LossConfig::validate() const {
  if (!(lambda > 0.0)) throw InputError("loss config: lambda must be > 0");
  if (n_m < 1) throw InputError("loss config: n_m must be >= 1");
  if (!(neg_pos_ratio >= 1.0)) {
    throw InputError("loss config: neg_pos_ratio must be >= 1");
  }
}

namespace {

// Lowest index among the maxima of the background scores.
std::size_t argmax_background(std::span<const double> scores, int n_m) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < std::size_t(n_m); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

double smooth_l1_scalar(double x) {
  const double ax = std::abs(x);
  return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

double smooth_l1_grad(double x) {
  if (std::abs(x) < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}

std::array<double, 2> softmax(const BinaryLogits& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

std::array<double*, 4> coords(BoxDelta& d) { return {&d.dx, &d.dy, &d.dw, &d.dh}; }
std::array<double, 4> coords(const BoxDelta& d) { return {d.dx, d.dy, d.dw, d.dh}; }

}  // namespace

BinaryLogits maxout_background(std::span<const double> scores, int n_m) {
  if (n_m < 1 || scores.size() != std::size_t(n_m) + 1) {
    throw InputError("maxout_background: expected n_m + 1 scores");
  }
  return {scores[argmax_background(scores, n_m)], scores[std::size_t(n_m)]};
}

double softmax_ce(const BinaryLogits& logits, int label) {
  const double m = std::max(logits[0], logits[1]);
  const double lse =
      m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  return lse - logits[label == 1 ? 1 : 0];
}

double smooth_l1(const BoxDelta& pred, const BoxDelta& target) {
  const auto p = coords(pred);
  const auto t = coords(target);
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) sum += smooth_l1_scalar(p[i] - t[i]);
  return sum;
}

std::vector<std::size_t> hard_negative_mine(std::span<const double> neg_losses,
                                            std::size_t num_pos, double ratio) {
  const auto cap = std::size_t(std::floor(ratio * double(num_pos)));
  const std::size_t k = std::min(neg_losses.size(), cap);
  std::vector<std::size_t> order(neg_losses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return neg_losses[a] > neg_losses[b];
  });
  order.resize(k);
  return order;
}

void validate(const SampleBatch& batch, const LossConfig& config) {
  config.validate();
  for (const AnchorSample& s : batch.anchors) {
    if (s.label != 0 && s.label != 1) throw InputError("sample label must be 0 or 1");
    if (s.target.has_value() != (s.label == 1)) {
      throw InputError("regression target must be present exactly for positives");
    }
    if (s.logits.size() != 2 && s.logits.size() != std::size_t(config.n_m) + 1) {
      throw InputError("sample logits must have 2 or n_m + 1 values");
    }
  }
}

BinaryLogits binary_logits(const AnchorSample& sample, int n_m) {
  if (sample.logits.size() == 2) return {sample.logits[0], sample.logits[1]};
  return maxout_background(sample.logits, n_m);
}

SampleBatch mine_batch(const SampleBatch& batch, const LossConfig& config) {
  validate(batch, config);
  SampleBatch out;
  std::vector<std::size_t> negatives;
  std::vector<double> neg_losses;
  for (std::size_t i = 0; i < batch.anchors.size(); ++i) {
    const AnchorSample& s = batch.anchors[i];
    if (s.label == 1) {
      out.anchors.push_back(s);
    } else {
      negatives.push_back(i);
      neg_losses.push_back(softmax_ce(binary_logits(s, config.n_m), 0));
    }
  }
  const std::size_t num_pos = out.anchors.size();
  for (std::size_t k : hard_negative_mine(neg_losses, num_pos, config.neg_pos_ratio)) {
    out.anchors.push_back(batch.anchors[negatives[k]]);
  }
  return out;
}

LossTerms multitask_loss(const SampleBatch& batch, const LossConfig& config) {
  validate(batch, config);
  double cls_sum = 0.0;
  double reg_sum = 0.0;
  std::size_t num_pos = 0;
  for (const AnchorSample& s : batch.anchors) {
    cls_sum += softmax_ce(binary_logits(s, config.n_m), s.label);
    if (s.label == 1) {
      reg_sum += smooth_l1(s.pred, *s.target);
      ++num_pos;
    }
  }
  LossTerms terms;
  if (!batch.anchors.empty()) {
    terms.cls = config.lambda / double(batch.anchors.size()) * cls_sum;
  }
  if (num_pos > 0) terms.reg = reg_sum / double(num_pos);
  terms.total = terms.cls + terms.reg;
  return terms;
}

std::vector<AnchorGradient> loss_gradients(const SampleBatch& batch,
                                           const LossConfig& config) {
  validate(batch, config);
  const std::size_t num_pos = std::size_t(std::count_if(
      batch.anchors.begin(), batch.anchors.end(),
      [](const AnchorSample& s) { return s.label == 1; }));
  const double cls_scale =
      batch.anchors.empty() ? 0.0 : config.lambda / double(batch.anchors.size());
  const double reg_scale = num_pos == 0 ? 0.0 : 1.0 / double(num_pos);

  std::vector<AnchorGradient> grads;
  grads.reserve(batch.anchors.size());
  for (const AnchorSample& s : batch.anchors) {
    AnchorGradient g;
    g.d_logits.assign(s.logits.size(), 0.0);

    const auto p = softmax(binary_logits(s, config.n_m));
    const double d_bg = cls_scale * (p[0] - (s.label == 0 ? 1.0 : 0.0));
    const double d_face = cls_scale * (p[1] - (s.label == 1 ? 1.0 : 0.0));
    if (s.logits.size() == 2) {
      g.d_logits[0] = d_bg;
      g.d_logits[1] = d_face;
    } else {
      g.d_logits[argmax_background(s.logits, config.n_m)] = d_bg;
      g.d_logits[std::size_t(config.n_m)] = d_face;
    }

    if (s.label == 1) {
      const auto pred = coords(s.pred);
      const auto target = coords(*s.target);
      auto out = coords(g.d_pred);
      for (std::size_t i = 0; i < 4; ++i) {
        *out[i] = reg_scale * smooth_l1_grad(pred[i] - target[i]);
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

GradCheckReport finite_difference_check(const SampleBatch& batch,
                                        const LossConfig& config, double step) {
  const auto analytic = loss_gradients(batch, config);
  GradCheckReport report;
  SampleBatch probe = batch;

  auto compare = [&](double a, double* param) {
    const double saved = *param;
    *param = saved + step;
    const double up = multitask_loss(probe, config).total;
    *param = saved - step;
    const double down = multitask_loss(probe, config).total;
    *param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(a - numeric) / denom);
    ++report.checked;
  };

  for (std::size_t i = 0; i < probe.anchors.size(); ++i) {
    AnchorSample& s = probe.anchors[i];
    for (std::size_t j = 0; j < s.logits.size(); ++j) {
      compare(analytic[i].d_logits[j], &s.logits[j]);
    }
    const auto d = coords(analytic[i].d_pred);
    const auto params = coords(s.pred);
    for (std::size_t j = 0; j < 4; ++j) compare(d[j], params[j]);
  }
  return report;
}

namespace {

BoxDelta delta_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw InputError("box delta must have 4 values");
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

LossConfig loss_config_from_json(const nlohmann::json& doc) {
  LossConfig config;
  try {
    config.lambda = doc.value("lambda", config.lambda);
    config.n_m = doc.value("n_m", config.n_m);
    config.neg_pos_ratio = doc.value("neg_pos_ratio", config.neg_pos_ratio);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("loss config json: ") + e.what());
  }
  config.validate();
  return config;
}

SampleBatch sample_batch_from_json(const nlohmann::json& doc) {
  SampleBatch batch;
  try {
    for (const auto& item : doc.at("anchors")) {
      AnchorSample s;
      s.label = item.at("label").get<int>();
      s.logits = item.at("logits").get<std::vector<double>>();
      s.pred = delta_from_json(item.at("delta"));
      if (item.contains("target") && !item.at("target").is_null()) {
        s.target = delta_from_json(item.at("target"));
      }
      batch.anchors.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("sample batch json: ") + e.what());
  }
  return batch;
}

}  // namespace s3fd

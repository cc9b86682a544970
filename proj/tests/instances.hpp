#pragma once

// Random problem generators shared by unit and acceptance tests.

#include <algorithm>
#include <random>
#include <vector>

#include "s3fd/anchors.hpp"
#include "s3fd/geometry.hpp"
#include "s3fd/losscore.hpp"

namespace s3fd::testing {

struct MatchInstance {
  std::vector<Box> faces;
  std::vector<Box> anchors;
};

// Integer-aligned faces over a small tiled grid (<= max_anchors anchors), so
// exact overlap ties occur regularly.
inline MatchInstance random_match_instance(std::mt19937_64& rng,
                                           std::size_t max_faces = 10,
                                           std::size_t max_anchors = 500) {
  MatchInstance inst;
  const AnchorConfig config{{{"a", 4, 16}, {"b", 8, 32}, {"c", 16, 64}}};
  std::uniform_int_distribution<int> size(16, 80);
  AnchorGrid grid;
  do {
    grid = tile_anchors(size(rng), size(rng), config);
  } while (grid.anchors.size() > max_anchors);
  inst.anchors = grid.boxes();

  std::uniform_int_distribution<std::size_t> nfaces(0, max_faces);
  std::uniform_int_distribution<int> pos(-8, grid.width);
  std::uniform_int_distribution<int> side(4, 48);
  const std::size_t n = nfaces(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const int s = side(rng);
    const int x = pos(rng);
    const int y = pos(rng);
    const int w = (rng() % 4 == 0) ? s + int(rng() % 8) : s;
    inst.faces.push_back(Box::from_xywh(x, y, w, s));
  }
  return inst;
}

struct BatchOptions {
  std::size_t anchors = 20;
  int n_m = 3;
  double logit_range = 3.0;
  double delta_range = 2.5;
};

// Random batch mixing 2-wide and (n_m+1)-wide logits. Regression residuals
// stay at least 1e-3 away from the smooth-L1 kink and background maxima are
// separated by at least 1e-3 so central differences do not straddle a
// non-smooth point.
inline SampleBatch random_batch(std::mt19937_64& rng, const BatchOptions& opt = {}) {
  std::uniform_real_distribution<double> logit(-opt.logit_range, opt.logit_range);
  std::uniform_real_distribution<double> delta(-opt.delta_range, opt.delta_range);
  SampleBatch batch;
  for (std::size_t i = 0; i < opt.anchors; ++i) {
    AnchorSample s;
    s.label = (rng() % 3 == 0) ? 1 : 0;
    const bool maxout = rng() % 2 == 0;
    const std::size_t width = maxout ? std::size_t(opt.n_m) + 1 : 2;
    for (;;) {
      s.logits.clear();
      for (std::size_t k = 0; k < width; ++k) s.logits.push_back(logit(rng));
      if (!maxout) break;
      std::vector<double> bg(s.logits.begin(), s.logits.end() - 1);
      std::sort(bg.rbegin(), bg.rend());
      if (bg.size() < 2 || bg[0] - bg[1] > 1e-3) break;
    }
    s.pred = {delta(rng), delta(rng), delta(rng), delta(rng)};
    if (s.label == 1) {
      for (;;) {
        BoxDelta t{delta(rng), delta(rng), delta(rng), delta(rng)};
        const double diffs[4] = {s.pred.dx - t.dx, s.pred.dy - t.dy, s.pred.dw - t.dw,
                                 s.pred.dh - t.dh};
        bool near_kink = false;
        for (double x : diffs) near_kink |= std::abs(std::abs(x) - 1.0) < 1e-3;
        if (!near_kink) {
          s.target = t;
          break;
        }
      }
    }
    batch.anchors.push_back(std::move(s));
  }
  return batch;
}

}  // namespace s3fd::testing

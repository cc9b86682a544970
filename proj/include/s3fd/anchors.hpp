#pragma once

// Square anchor tiling, one scale per detection layer.

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s3fd/geometry.hpp"

namespace s3fd {

struct AnchorLayerConfig {
  std::string layer;
  int stride = 1;
  int scale = 1;  // anchor side length
};

struct AnchorConfig {
  std::vector<AnchorLayerConfig> layers;
};

// conv3_3 .. conv7_2 with strides 4..128 and scales 16..512.
AnchorConfig builtin_anchor_config();

// Throws InputError for an empty config, stride/scale < 1 or strides that are
// not strictly increasing.
void validate(const AnchorConfig& config);

AnchorConfig anchor_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const AnchorConfig& config);

struct Anchor {
  Box box;
  int layer = 0;  // index into AnchorConfig::layers
  int row = 0;
  int col = 0;
};

struct AnchorLayerSpan {
  std::string layer;
  int stride = 0;
  int scale = 0;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;  // first anchor of this layer in AnchorGrid::anchors
  std::size_t count() const { return std::size_t(rows) * std::size_t(cols); }
};

// Anchors of all layers, flattened in layer order then row-major cells. The
// flat index is the anchor id used by matching.
struct AnchorGrid {
  int width = 0;
  int height = 0;
  std::vector<AnchorLayerSpan> layers;
  std::vector<Anchor> anchors;

  std::vector<Box> boxes() const;
};

// One anchor of side `scale` centred at ((col + 0.5) * stride,
// (row + 0.5) * stride) per cell of a ceil(W/stride) x ceil(H/stride) grid.
// Anchors are not clipped to the image.
AnchorGrid tile_anchors(int width, int height, const AnchorConfig& config);

struct CensusRow {
  std::string layer;
  int scale = 0;
  std::size_t count = 0;
  long percent_hundredths = 0;  // share of total, in units of 0.01%
  double percentage() const { return double(percent_hundredths) / 100.0; }
};

// Per-layer anchor counts and shares. Shares are rounded to two decimals with
// the largest-remainder rule, so they always sum to exactly 100.00.
std::vector<CensusRow> anchor_census(int width, int height,
                                     const AnchorConfig& config);

struct ProportionCheck {
  std::string layer;
  bool holds = false;
};

// scale == 4 * stride, per layer.
std::vector<ProportionCheck> check_equal_proportion(const AnchorConfig& config);

}  // namespace s3fd

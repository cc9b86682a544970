#include "s3fd/anchors.hpp"

#include <algorithm>
#include <numeric>

#include "s3fd/errors.hpp"

namespace s3fd {

AnchorConfig builtin_anchor_config() {
  return {{{"conv3_3", 4, 16},
           {"conv4_3", 8, 32},
           {"conv5_3", 16, 64},
           {"conv_fc7", 32, 128},
           {"conv6_2", 64, 256},
           {"conv7_2", 128, 512}}};
}

void validate(const AnchorConfig& config) {
  if (config.layers.empty()) throw InputError("anchor config: no layers");
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const AnchorLayerConfig& l = config.layers[i];
    if (l.stride < 1 || l.scale < 1) {
      throw InputError("anchor config: stride and scale must be >= 1 in '" +
                       l.layer + "'");
    }
    if (i > 0 && l.stride <= config.layers[i - 1].stride) {
      throw InputError("anchor config: strides must strictly increase at '" +
                       l.layer + "'");
    }
  }
}

AnchorConfig anchor_config_from_json(const nlohmann::json& doc) {
  AnchorConfig config;
  try {
    for (const auto& item : doc) {
      config.layers.push_back({item.at("layer").get<std::string>(),
                               item.at("stride").get<int>(),
                               item.at("scale").get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("anchor config json: ") + e.what());
  }
  validate(config);
  return config;
}

nlohmann::json to_json(const AnchorConfig& config) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& l : config.layers) {
    out.push_back({{"layer", l.layer}, {"stride", l.stride}, {"scale", l.scale}});
  }
  return out;
}

std::vector<Box> AnchorGrid::boxes() const {
  std::vector<Box> out;
  out.reserve(anchors.size());
  for (const Anchor& a : anchors) out.push_back(a.box);
  return out;
}

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

AnchorGrid tile_anchors(int width, int height, const AnchorConfig& config) {
  validate(config);
  const int min_stride = config.layers.front().stride;
  if (width < min_stride || height < min_stride) {
    throw InputError("tile_anchors: image smaller than the finest stride");
  }

  AnchorGrid grid;
  grid.width = width;
  grid.height = height;
  for (std::size_t li = 0; li < config.layers.size(); ++li) {
    const AnchorLayerConfig& l = config.layers[li];
    AnchorLayerSpan span{l.layer,
                         l.stride,
                         l.scale,
                         ceil_div(height, l.stride),
                         ceil_div(width, l.stride),
                         grid.anchors.size()};
    grid.anchors.reserve(grid.anchors.size() + span.count());
    for (int r = 0; r < span.rows; ++r) {
      for (int c = 0; c < span.cols; ++c) {
        const double cx = (c + 0.5) * l.stride;
        const double cy = (r + 0.5) * l.stride;
        grid.anchors.push_back(
            {Box::centered(cx, cy, l.scale, l.scale), int(li), r, c});
      }
    }
    grid.layers.push_back(std::move(span));
  }
  return grid;
}

std::vector<CensusRow> anchor_census(int width, int height,
                                     const AnchorConfig& config) {
  const AnchorGrid grid = tile_anchors(width, height, config);
  std::size_t total = 0;
  for (const auto& span : grid.layers) total += span.count();

  constexpr long kUnits = 10000;  // 100.00% in hundredths
  std::vector<CensusRow> rows;
  std::vector<long> remainders;
  long assigned = 0;
  for (const auto& span : grid.layers) {
    const long scaled = long(span.count()) * kUnits;
    const long floor_units = scaled / long(total);
    rows.push_back({span.layer, span.scale, span.count(), floor_units});
    remainders.push_back(scaled % long(total));
    assigned += floor_units;
  }

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (long k = 0; k < kUnits - assigned; ++k) {
    ++rows[order[std::size_t(k)]].percent_hundredths;
  }
  return rows;
}

std::vector<ProportionCheck> check_equal_proportion(const AnchorConfig& config) {
  std::vector<ProportionCheck> out;
  for (const auto& l : config.layers) {
    out.push_back({l.layer, l.scale == 4 * l.stride});
  }
  return out;
}

}  // namespace s3fd

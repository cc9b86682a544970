#pragma once

// Receptive-field arithmetic over a chain of conv/pool layers.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace s3fd {

struct AnchorConfig;

enum class LayerKind { kConv, kPool };

LayerKind parse_layer_kind(std::string_view text);
std::string_view to_string(LayerKind kind);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

struct LayerChain {
  std::vector<LayerSpec> layers;
  std::vector<std::string> detection_layers;
};

struct GeomSummary {
  std::string layer;
  long jump = 1;        // cumulative stride
  long trf_single = 1;  // theoretical receptive field of one unit
  long trf_block = 1;   // TRF of a block x block patch of units
};

// One summary per layer, in chain order. Throws InputError on an empty chain
// or a layer violating kernel/stride/dilation >= 1, padding >= 0.
std::vector<GeomSummary> trace_geometry(const LayerChain& chain, int block = 3);

// Throws InputError when `layer` is not in `summaries`.
const GeomSummary& find_summary(const std::vector<GeomSummary>& summaries,
                                std::string_view layer);

// VGG16 conv1_1..pool5 followed by the fc6/fc7 conversions and two extra
// stride-2 blocks, with the six detection layers conv3_3 .. conv7_2.
LayerChain builtin_s3fd_chain();

LayerChain layer_chain_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const LayerChain& chain);

struct Table1Row {
  std::string layer;
  long jump = 0;
  int configured_stride = 0;
  int anchor_scale = 0;
  long trf_block = 0;
  bool stride_matches = false;
  bool anchor_inside_rf = false;  // anchor scale strictly below trf_block
  bool equal_proportion = false;  // anchor scale == 4 * stride
};

struct Table1Report {
  std::vector<Table1Row> rows;
  bool all_pass() const;
};

// Cross-checks the anchor design against the traced geometry, one row per
// detection layer. Throws InputError when the detection layer names of the
// chain and the anchor config differ.
Table1Report verify_table1(const LayerChain& chain, const AnchorConfig& anchors);

}  // namespace s3fd

#include "s3fd/netgeom.hpp"

#include <algorithm>

#include "s3fd/anchors.hpp"
#include "s3fd/errors.hpp"

namespace s3fd {

LayerKind parse_layer_kind(std::string_view text) {
  if (text == "conv") return LayerKind::kConv;
  if (text == "pool") return LayerKind::kPool;
  throw InputError("unknown layer kind '" + std::string(text) + "'");
}

std::string_view to_string(LayerKind kind) {
  return kind == LayerKind::kConv ? "conv" : "pool";
}

std::vector<GeomSummary> trace_geometry(const LayerChain& chain, int block) {
  if (chain.layers.empty()) throw InputError("trace_geometry: empty chain");
  if (block < 1) throw InputError("trace_geometry: block must be >= 1");

  std::vector<GeomSummary> out;
  out.reserve(chain.layers.size());
  long jump = 1;
  long trf = 1;
  for (const LayerSpec& layer : chain.layers) {
    if (layer.kernel < 1 || layer.stride < 1 || layer.dilation < 1 ||
        layer.padding < 0) {
      throw InputError("trace_geometry: invalid parameters for layer '" +
                       layer.name + "'");
    }
    if (layer.kind == LayerKind::kPool && layer.dilation != 1) {
      throw InputError("trace_geometry: dilated pooling in '" + layer.name + "'");
    }
    const long effective_kernel = long{layer.dilation} * (layer.kernel - 1) + 1;
    trf += (effective_kernel - 1) * jump;
    jump *= layer.stride;
    out.push_back({layer.name, jump, trf, trf + (block - 1) * jump});
  }
  return out;
}

const GeomSummary& find_summary(const std::vector<GeomSummary>& summaries,
                                std::string_view layer) {
  auto it = std::find_if(summaries.begin(), summaries.end(),
                         [&](const GeomSummary& s) { return s.layer == layer; });
  if (it == summaries.end()) {
    throw InputError("no layer named '" + std::string(layer) + "'");
  }
  return *it;
}

LayerChain builtin_s3fd_chain() {
  LayerChain chain;
  auto conv = [&](std::string name, int kernel, int stride) {
    chain.layers.push_back(
        {std::move(name), LayerKind::kConv, kernel, stride, kernel / 2, 1});
  };
  auto pool = [&](std::string name) {
    chain.layers.push_back({std::move(name), LayerKind::kPool, 2, 2, 0, 1});
  };

  conv("conv1_1", 3, 1);
  conv("conv1_2", 3, 1);
  pool("pool1");
  conv("conv2_1", 3, 1);
  conv("conv2_2", 3, 1);
  pool("pool2");
  conv("conv3_1", 3, 1);
  conv("conv3_2", 3, 1);
  conv("conv3_3", 3, 1);
  pool("pool3");
  conv("conv4_1", 3, 1);
  conv("conv4_2", 3, 1);
  conv("conv4_3", 3, 1);
  pool("pool4");
  conv("conv5_1", 3, 1);
  conv("conv5_2", 3, 1);
  conv("conv5_3", 3, 1);
  pool("pool5");
  conv("conv_fc6", 3, 1);
  conv("conv_fc7", 1, 1);
  conv("conv6_1", 1, 1);
  conv("conv6_2", 3, 2);
  conv("conv7_1", 1, 1);
  conv("conv7_2", 3, 2);

  chain.detection_layers = {"conv3_3",  "conv4_3", "conv5_3",
                            "conv_fc7", "conv6_2", "conv7_2"};
  return chain;
}

LayerChain layer_chain_from_json(const nlohmann::json& doc) {
  LayerChain chain;
  try {
    for (const auto& item : doc.at("layers")) {
      LayerSpec layer;
      layer.name = item.at("name").get<std::string>();
      layer.kind = parse_layer_kind(item.at("kind").get<std::string>());
      layer.kernel = item.at("kernel").get<int>();
      layer.stride = item.at("stride").get<int>();
      layer.padding = item.value("padding", 0);
      layer.dilation = item.value("dilation", 1);
      chain.layers.push_back(std::move(layer));
    }
    chain.detection_layers =
        doc.at("detection_layers").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("layer chain json: ") + e.what());
  }
  for (const std::string& name : chain.detection_layers) {
    const bool known =
        std::any_of(chain.layers.begin(), chain.layers.end(),
                    [&](const LayerSpec& l) { return l.name == name; });
    if (!known) throw InputError("detection layer '" + name + "' not in chain");
  }
  return chain;
}

nlohmann::json to_json(const LayerChain& chain) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& l : chain.layers) {
    layers.push_back({{"name", l.name},
                      {"kind", std::string(to_string(l.kind))},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"padding", l.padding},
                      {"dilation", l.dilation}});
  }
  return {{"layers", layers}, {"detection_layers", chain.detection_layers}};
}

bool Table1Report::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const Table1Row& r) {
    return r.stride_matches && r.anchor_inside_rf && r.equal_proportion;
  });
}

Table1Report verify_table1(const LayerChain& chain, const AnchorConfig& anchors) {
  if (chain.detection_layers.size() != anchors.layers.size()) {
    throw InputError("verify_table1: detection layer count mismatch");
  }
  const auto summaries = trace_geometry(chain);
  const auto proportion = check_equal_proportion(anchors);

  Table1Report report;
  for (std::size_t i = 0; i < anchors.layers.size(); ++i) {
    const AnchorLayerConfig& a = anchors.layers[i];
    if (a.layer != chain.detection_layers[i]) {
      throw InputError("verify_table1: expected detection layer '" +
                       chain.detection_layers[i] + "', anchors name '" +
                       a.layer + "'");
    }
    const GeomSummary& g = find_summary(summaries, a.layer);
    Table1Row row;
    row.layer = a.layer;
    row.jump = g.jump;
    row.configured_stride = a.stride;
    row.anchor_scale = a.scale;
    row.trf_block = g.trf_block;
    row.stride_matches = g.jump == a.stride;
    row.anchor_inside_rf = a.scale < g.trf_block;
    row.equal_proportion = proportion[i].holds;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace s3fd

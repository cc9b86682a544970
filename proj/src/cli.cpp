#include "s3fd/cli.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "s3fd/dataio.hpp"
#include "s3fd/errors.hpp"
#include "s3fd/evaluation.hpp"
#include "s3fd/losscore.hpp"
#include "s3fd/matching.hpp"

namespace s3fd::cli {

namespace {

struct ReferenceRow {
  const char* layer;
  int stride;
  int anchor;
  long rf;
  std::size_t count_640;
  long percent_hundredths_640;
};

// Reference six-layer design: stride, anchor scale, 3x3-unit receptive field,
// and the 640x640 anchor census.
constexpr std::array<ReferenceRow, 6> kReference{{
    {"conv3_3", 4, 16, 48, 25600, 7502},
    {"conv4_3", 8, 32, 108, 6400, 1876},
    {"conv5_3", 16, 64, 228, 1600, 469},
    {"conv_fc7", 32, 128, 340, 400, 117},
    {"conv6_2", 64, 256, 468, 100, 29},
    {"conv7_2", 128, 512, 724, 25, 7},
}};
constexpr std::size_t kReferenceTotal640 = 34125;

std::string percent_text(long hundredths) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%ld.%02ld", hundredths / 100, hundredths % 100);
  return buf;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

struct Design {
  LayerChain chain = builtin_s3fd_chain();
  AnchorConfig anchors = builtin_anchor_config();
};

Design load_design(const std::string& config_path) {
  Design design;
  if (config_path.empty()) return design;
  const nlohmann::json doc = read_json(config_path);
  if (doc.contains("chain")) design.chain = layer_chain_from_json(doc.at("chain"));
  if (doc.contains("anchors")) design.anchors = anchor_config_from_json(doc.at("anchors"));
  return design;
}

std::string rf_table_csv(const Design& design) {
  const auto report = verify_table1(design.chain, design.anchors);
  std::string csv = "layer,stride,anchor,rf\n";
  for (const Table1Row& row : report.rows) {
    csv += row.layer + "," + std::to_string(row.jump) + "," +
           std::to_string(row.anchor_scale) + "," + std::to_string(row.trf_block) +
           "\n";
  }
  return csv;
}

std::string census_csv(int width, int height, const AnchorConfig& anchors) {
  std::string csv = "layer,scale,number,percentage\n";
  for (const CensusRow& row : anchor_census(width, height, anchors)) {
    csv += row.layer + "," + std::to_string(row.scale) + "," +
           std::to_string(row.count) + "," + percent_text(row.percent_hundredths) +
           "\n";
  }
  return csv;
}

std::vector<ScaleBin> default_stat_bins() {
  std::vector<double> edges;
  for (int k = 0; k <= 16; ++k) edges.push_back(4.0 * std::pow(2.0, k / 2.0));
  return bins_from_edges(edges);
}

std::string match_stats_csv(const std::vector<ImageRecord>& records, int width,
                            int height, const AnchorConfig& anchors,
                            const std::string& strategy) {
  const AnchorGrid grid = tile_anchors(width, height, anchors);
  const std::vector<Box> anchor_boxes = grid.boxes();
  MatchStatsAccumulator acc(default_stat_bins());
  const MatchConfig config;
  for (const ImageRecord& record : records) {
    std::vector<Box> faces;
    for (const FaceAnnotation& f : record.faces) {
      if (f.invalid == 0 && f.box.valid()) faces.push_back(f.box);
    }
    const MatchResult result =
        strategy == "baseline"
            ? match_baseline(faces, anchor_boxes, config.baseline_threshold)
            : match_scale_compensated(faces, anchor_boxes, config);
    acc.add(faces, result);
  }
  const MatchStats stats = acc.finish();
  std::string csv = "scale_bin,mean_matched,face_count\n";
  for (std::size_t i = 0; i < stats.bins.size(); ++i) {
    csv += fixed2(stats.bins[i].lo) + "-" + fixed2(stats.bins[i].hi) + ",";
    if (stats.mean_matched[i]) csv += format_number(*stats.mean_matched[i]);
    csv += "," + std::to_string(stats.face_count[i]) + "\n";
  }
  return csv;
}

std::string augment_text(const std::vector<ImageRecord>& records, int width,
                         int height, int target, std::uint64_t seed) {
  std::vector<ImageRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const CropSpec crop = sample_crop(width, height, seed + i, target);
    ImageRecord transformed = records[i];
    transformed.faces = apply_crop_to_boxes(crop, records[i].faces);
    out.push_back(std::move(transformed));
  }
  return serialize_wider_annotations(out);
}

std::string loss_json(const std::string& batch_path, bool mine, bool grad_check) {
  const nlohmann::json doc = read_json(batch_path);
  const LossConfig config =
      loss_config_from_json(doc.value("config", nlohmann::json::object()));
  SampleBatch batch = sample_batch_from_json(doc);
  if (mine) batch = mine_batch(batch, config);
  const LossTerms terms = multitask_loss(batch, config);
  nlohmann::json out = {{"total", terms.total}, {"cls", terms.cls}, {"reg", terms.reg}};
  if (grad_check) {
    const GradCheckReport report = finite_difference_check(batch, config);
    out["grad_check"] = {{"max_rel_error", report.max_rel_error},
                         {"checked", report.checked}};
  }
  return out.dump(2) + "\n";
}

std::string eval_json(const std::string& annotations, const std::string& detections,
                      const std::string& subset, double iou_threshold,
                      bool keep_invalid, const std::string& curve_path) {
  const auto records = parse_wider_annotations(read_file(annotations));
  const auto dets = read_detections(read_file(detections));
  EvalConfig config;
  config.iou_threshold = iou_threshold;
  config.ignore_invalid = !keep_invalid;
  const auto gt = subset.empty()
                      ? to_eval_images(records, config)
                      : subset_filter(records, parse_subset_list(read_file(subset)), config);
  const Evaluation evaluation = evaluate(gt, dets, iou_threshold);

  if (!curve_path.empty()) {
    std::string csv = "recall,precision,score_threshold\n";
    for (const PRPoint& p : evaluation.curve.points) {
      csv += format_number(p.recall) + "," + format_number(p.precision) + "," +
             format_number(p.score) + "\n";
    }
    write_file(curve_path, csv);
  }

  const APResult& r = evaluation.result;
  nlohmann::json out = {{"ap", nullptr},
                        {"tp", r.tp},
                        {"fp", r.fp},
                        {"num_gt", r.num_gt}};
  if (r.ap) out["ap"] = *r.ap;
  return out.dump(2) + "\n";
}

std::string nms_text(const std::string& path, const NmsConfig& config) {
  auto images = read_detections(read_file(path));
  for (ImageDetections& image : images) image.detections = nms(image.detections, config);
  return write_detections(images);
}

}  // namespace

SelfCheckReport selfcheck(const LayerChain& chain, const AnchorConfig& anchors) {
  SelfCheckReport report;
  std::ostringstream text;
  auto mark = [](bool ok) { return ok ? "ok" : "FAIL"; };

  const Table1Report t1 = verify_table1(chain, anchors);
  const auto proportion = check_equal_proportion(anchors);
  const bool rows_match = t1.rows.size() == kReference.size();
  for (std::size_t i = 0; i < kReference.size(); ++i) {
    const ReferenceRow& ref = kReference[i];
    const Table1Row* row = rows_match ? &t1.rows[i] : nullptr;
    const bool named = row && row->layer == ref.layer;
    const bool stride_ok = named && row->stride_matches && row->jump == ref.stride;
    const bool anchor_ok = named && row->anchor_scale == ref.anchor &&
                           row->anchor_inside_rf && row->equal_proportion;
    const bool rf_ok = named && row->trf_block == ref.rf;
    report.table1_passed += int(stride_ok) + int(anchor_ok) + int(rf_ok);
    report.table1_total += 3;
    text << "table1 " << ref.layer << " stride " << (row ? row->jump : 0) << "/"
         << ref.stride << " " << mark(stride_ok) << ", anchor "
         << (row ? row->anchor_scale : 0) << "/" << ref.anchor << " "
         << mark(anchor_ok) << ", rf " << (row ? row->trf_block : 0) << "/"
         << ref.rf << " " << mark(rf_ok) << "\n";
  }

  for (const ProportionCheck& p : proportion) {
    report.proportion_passed += int(p.holds);
    ++report.proportion_total;
    text << "equal-proportion " << p.layer << " " << mark(p.holds) << "\n";
  }

  const auto census = anchor_census(640, 640, anchors);
  std::size_t total = 0;
  for (std::size_t i = 0; i < kReference.size(); ++i) {
    const ReferenceRow& ref = kReference[i];
    const CensusRow* row = census.size() == kReference.size() ? &census[i] : nullptr;
    const bool ok = row && row->layer == ref.layer && row->count == ref.count_640 &&
                    row->percent_hundredths == ref.percent_hundredths_640;
    report.table2_passed += int(ok);
    ++report.table2_total;
    text << "table2 " << ref.layer << " count " << (row ? row->count : 0) << "/"
         << ref.count_640 << " share "
         << (row ? percent_text(row->percent_hundredths) : "-") << "/"
         << percent_text(ref.percent_hundredths_640) << " " << mark(ok) << "\n";
  }
  for (const CensusRow& row : census) total += row.count;
  const bool total_ok = total == kReferenceTotal640;
  report.table2_passed += int(total_ok);
  ++report.table2_total;
  text << "table2 total " << total << "/" << kReferenceTotal640 << " "
       << mark(total_ok) << "\n";

  text << report.table1_passed << "/" << report.table1_total << " Table-1 checks, "
       << report.table2_passed << "/" << report.table2_total << " Table-2 checks\n";
  text << report.proportion_passed << "/" << report.proportion_total
       << " equal-proportion checks\n";
  text << (report.ok() ? "selfcheck passed" : "selfcheck FAILED") << "\n";
  report.text = text.str();
  return report;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anchor design, matching, loss and evaluation tools for single-shot face detection",
               "s3fd"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::string output_path;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON with optional 'chain' and 'anchors'")
      ->check(CLI::ExistingFile);
  app.add_option("--output", output_path, "Write results here instead of stdout");
  app.add_option("--seed", seed, "Base random seed");

  auto* rf_table = app.add_subcommand("rf-table", "Stride, anchor scale and receptive field per detection layer (CSV)");

  int width = 640;
  int height = 640;
  auto* anchors_cmd = app.add_subcommand("anchors", "Anchor census per detection layer (CSV)");
  anchors_cmd->add_option("--width", width)->check(CLI::PositiveNumber);
  anchors_cmd->add_option("--height", height)->check(CLI::PositiveNumber);

  std::string annotations;
  std::string strategy = "compensated";
  auto* match_cmd = app.add_subcommand("match-stats", "Mean matched anchors per face-scale bin (CSV)");
  match_cmd->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);
  match_cmd->add_option("--width", width)->check(CLI::PositiveNumber);
  match_cmd->add_option("--height", height)->check(CLI::PositiveNumber);
  match_cmd->add_option("--strategy", strategy)
      ->check(CLI::IsMember({"baseline", "compensated"}));

  std::string detections;
  NmsConfig nms_config;
  auto* nms_cmd = app.add_subcommand("nms", "Confidence filter and greedy NMS on a detection file");
  nms_cmd->add_option("--detections", detections)->required()->check(CLI::ExistingFile);
  nms_cmd->add_option("--iou", nms_config.iou_threshold)->check(CLI::Range(0.0, 1.0));
  nms_cmd->add_option("--pre-top", nms_config.pre_top);
  nms_cmd->add_option("--post-top", nms_config.post_top);
  nms_cmd->add_option("--conf", nms_config.conf_threshold)->check(CLI::Range(0.0, 1.0));

  std::string batch_path;
  bool mine = false;
  bool grad_check = false;
  auto* loss_cmd = app.add_subcommand("loss", "Multi-task loss of a JSON batch");
  loss_cmd->add_option("--batch", batch_path)->required()->check(CLI::ExistingFile);
  loss_cmd->add_flag("--mine", mine, "Apply hard negative mining first");
  loss_cmd->add_flag("--grad-check", grad_check, "Report finite-difference gradient error");

  int target = 640;
  auto* augment_cmd = app.add_subcommand("augment", "Random square crop and flip of annotations");
  augment_cmd->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);
  augment_cmd->add_option("--width", width, "Source image width")->required()->check(CLI::PositiveNumber);
  augment_cmd->add_option("--height", height, "Source image height")->required()->check(CLI::PositiveNumber);
  augment_cmd->add_option("--target", target)->check(CLI::PositiveNumber);

  std::string subset;
  std::string curve_path;
  double eval_iou = 0.5;
  bool keep_invalid = false;
  auto* eval_cmd = app.add_subcommand("eval", "Average precision of detections against annotations");
  eval_cmd->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--detections", detections)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--subset", subset)->check(CLI::ExistingFile);
  eval_cmd->add_option("--iou", eval_iou)->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--curve", curve_path, "Write the PR curve CSV here");
  eval_cmd->add_flag("--keep-invalid", keep_invalid, "Count invalid-flagged faces as ground truth");

  auto* selfcheck_cmd = app.add_subcommand("selfcheck", "Verify the anchor design against the reference tables");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  int status = kExitOk;
  std::string result;
  try {
    const Design design = load_design(config_path);
    if (rf_table->parsed()) {
      result = rf_table_csv(design);
    } else if (anchors_cmd->parsed()) {
      result = census_csv(width, height, design.anchors);
    } else if (match_cmd->parsed()) {
      result = match_stats_csv(parse_wider_annotations(read_file(annotations)), width,
                               height, design.anchors, strategy);
    } else if (nms_cmd->parsed()) {
      result = nms_text(detections, nms_config);
    } else if (loss_cmd->parsed()) {
      result = loss_json(batch_path, mine, grad_check);
    } else if (augment_cmd->parsed()) {
      result = augment_text(parse_wider_annotations(read_file(annotations)), width,
                            height, target, seed);
    } else if (eval_cmd->parsed()) {
      result = eval_json(annotations, detections, subset, eval_iou, keep_invalid,
                         curve_path);
    } else if (selfcheck_cmd->parsed()) {
      const SelfCheckReport report = selfcheck(design.chain, design.anchors);
      result = report.text;
      if (!report.ok()) status = kExitDataError;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitDataError;
  }

  try {
    if (output_path.empty()) {
      out << result;
    } else {
      write_file(output_path, result);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return status;
}

}  // namespace s3fd::cli

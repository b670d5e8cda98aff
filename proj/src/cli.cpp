#include "mason/cli.hpp"

#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mason/array_io.hpp"
#include "mason/metrics.hpp"
#include "mason/objectness.hpp"
#include "mason/pipeline.hpp"

namespace mason::cli {

namespace {

using nlohmann::ordered_json;

struct Options {
  std::vector<std::string> features;
  std::string image;
  std::string annotations;
  std::string out;
  std::optional<int> width;
  std::optional<int> height;
  std::uint64_t seed = 42;
  int gmm_k = 5;
  double gamma = 50.0;
  int iters = 5;
  double drop_threshold = kDefaultDropThreshold;
  std::vector<double> scales{std::begin(kDefaultProposalScales), std::end(kDefaultProposalScales)};
  double iou_threshold = 0.9;
  std::vector<std::string> pairs;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

GrabCutParams grabcut_params(const Options& o) {
  GrabCutParams p;
  p.components = o.gmm_k;
  p.gamma = o.gamma;
  p.max_iters = o.iters;
  p.rng_seed = o.seed;
  return p;
}

const std::string& single_features(const Options& o) {
  if (o.features.size() != 1) throw UsageError("--features takes exactly one file for this subcommand");
  return o.features.front();
}

// Output size: --width/--height when both are given, otherwise the --image size.
std::pair<int, int> target_size(const Options& o) {
  if (o.width || o.height) {
    if (!o.width || !o.height) throw UsageError("--width and --height must be given together");
    return {*o.height, *o.width};
  }
  if (o.image.empty()) throw UsageError("either --image or --width/--height is required");
  const RasterImage img = read_image(o.image);
  return {img.height(), img.width()};
}

std::string image_ref(const Options& o, const FeatureMapStack& stack) {
  if (!o.image.empty()) return o.image;
  if (!stack.source_image.empty()) return stack.source_image;
  return o.features.front();
}

std::filesystem::path table_path(const std::filesystem::path& pgm) {
  auto p = pgm;
  p.replace_extension(".json");
  return p;
}

void cmd_heatmap(const Options& o, std::ostream&) {
  const FeatureMapStack stack = read_feature_stack(single_features(o));
  const auto [h, w] = target_size(o);
  write_heatmap(objectness(stack, h, w), o.out);
}

void cmd_trimap(const Options& o, std::ostream&) {
  const FeatureMapStack stack = read_feature_stack(single_features(o));
  const auto [h, w] = target_size(o);
  write_trimap(stratify(objectness(stack, h, w)), o.out);
}

void cmd_segment(const Options& o, std::ostream&) {
  const FeatureMapStack stack = read_feature_stack(single_features(o));
  const RasterImage image = read_image(o.image);
  Mask mask = localize(image, stack, grabcut_params(o));
  for (auto& v : mask.values()) v = v ? 255 : 0;
  write_mask(mask, o.out);
}

void cmd_instances(const Options& o, std::ostream& out) {
  if (o.features.empty()) throw UsageError("--features is required");
  const RasterImage image = read_image(o.image);
  const AnnotationSet detections = read_annotations(o.annotations);
  InstanceMap map;
  if (o.features.size() == 1) {
    map = segment_instances(image, read_feature_stack(o.features.front()), detections, grabcut_params(o));
  } else {
    if (o.features.size() != detections.boxes.size()) {
      throw UsageError("give one --features file, or one per detection in annotation order");
    }
    std::vector<FeatureMapStack> stacks;
    for (const auto& f : o.features) stacks.push_back(read_feature_stack(f));
    map = segment_instances(image, std::span<const FeatureMapStack>(stacks), detections, grabcut_params(o));
  }
  write_instance_map(map, o.image, o.out, table_path(o.out));
  out << ordered_json{{"instances", map.instances.size()}}.dump() << "\n";
}

void cmd_clean(const Options& o, std::ostream& out) {
  const FeatureMapStack stack = read_feature_stack(single_features(o));
  const AnnotationSet annotations = read_annotations(o.annotations);
  const auto [h, w] = target_size(o);
  validate_annotations(annotations, std::pair{h, w});
  const Heatmap full = objectness(stack, h, w);
  std::vector<Heatmap> crops;
  crops.reserve(annotations.boxes.size());
  for (const auto& a : annotations.boxes) crops.push_back(crop_heatmap(full, a.box));
  const CleansingReport report = clean_annotations(crops, annotations, o.drop_threshold);
  write_annotations(report.kept, o.out);
  out << ordered_json{{"kept", report.kept.boxes.size()},
                      {"dropped", report.dropped.boxes.size()},
                      {"tightened", report.tightened_count}}
             .dump()
      << "\n";
}

void cmd_propose(const Options& o, std::ostream& out) {
  const FeatureMapStack stack = read_feature_stack(single_features(o));
  const auto [h, w] = target_size(o);
  const auto boxes = generate_proposals(objectness(stack, h, w), o.scales);
  AnnotationSet set{image_ref(o, stack), {}};
  for (const auto& b : boxes) set.boxes.push_back({b, "proposal", std::nullopt});
  write_annotations(set, o.out);
  out << ordered_json{{"proposals", boxes.size()}}.dump() << "\n";
}

void check_pairs(const Options& o) {
  if (o.pairs.empty() || o.pairs.size() % 2 != 0) {
    throw UsageError("expected one or more PREDICTION GROUND_TRUTH file pairs");
  }
}

void cmd_eval_iou(const Options& o, std::ostream& out) {
  check_pairs(o);
  std::vector<std::pair<Mask, Mask>> masks;
  for (std::size_t i = 0; i < o.pairs.size(); i += 2) {
    masks.emplace_back(read_mask(o.pairs[i]), read_mask(o.pairs[i + 1]));
  }
  out << ordered_json{{"mean_iou", mean_iou(masks)}, {"pairs", masks.size()}}.dump() << "\n";
}

void cmd_eval_recall(const Options& o, std::ostream& out) {
  check_pairs(o);
  RecallReport report;
  for (std::size_t i = 0; i < o.pairs.size(); i += 2) {
    const AnnotationSet proposals = read_annotations(o.pairs[i]);
    const AnnotationSet truth = read_annotations(o.pairs[i + 1]);
    std::vector<BoundingBox> boxes;
    for (const auto& a : proposals.boxes) boxes.push_back(a.box);
    accumulate_recall(boxes, truth, o.iou_threshold, report);
  }
  ordered_json per_label = ordered_json::object();
  for (const auto& [label, tally] : report.per_label) per_label[label] = tally.recall();
  out << ordered_json{{"recall", report.overall.recall()},
                      {"matched", report.overall.matched},
                      {"total", report.overall.total},
                      {"per_label", per_label}}
             .dump()
      << "\n";
}

void add_features(CLI::App* sub, Options& o, bool repeatable = false) {
  auto* opt = sub->add_option("--features", o.features,
                              repeatable ? "Feature stack (.npy); repeat once per detection for per-box stacks"
                                         : "Feature stack (.npy)")
                  ->required();
  if (!repeatable) opt->expected(1);
}

void add_size(CLI::App* sub, Options& o) {
  sub->add_option("--width", o.width, "Output width in pixels")->check(CLI::PositiveNumber);
  sub->add_option("--height", o.height, "Output height in pixels")->check(CLI::PositiveNumber);
}

void add_grabcut(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  sub->add_option("--gmm-k", o.gmm_k, "Gaussian components per color model")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--gamma", o.gamma, "Smoothness weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  sub->add_option("--iters", o.iters, "Maximum GrabCut iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Objectness heatmaps and heatmap-seeded segmentation from CNN feature maps", "mason"};
  app.require_subcommand(1);

  auto* heatmap = app.add_subcommand("heatmap", "Write the objectness heatmap as an 8-bit PGM");
  add_features(heatmap, o);
  heatmap->add_option("--image", o.image, "Image (PPM) whose size the heatmap takes");
  add_size(heatmap, o);
  heatmap->add_option("--out", o.out, "Output PGM")->required();

  auto* trimap = app.add_subcommand("trimap", "Write the stratified trimap (labels 0-3) as a PGM");
  add_features(trimap, o);
  trimap->add_option("--image", o.image, "Image (PPM) whose size the trimap takes");
  add_size(trimap, o);
  trimap->add_option("--out", o.out, "Output PGM")->required();

  auto* segment = app.add_subcommand("segment", "Foreground mask of an image seeded by its heatmap");
  add_features(segment, o);
  segment->add_option("--image", o.image, "Input image (PPM)")->required();
  segment->add_option("--out", o.out, "Output mask PGM (0/255)")->required();
  add_grabcut(segment, o);

  auto* instances = app.add_subcommand("instances", "Instance id map from detections");
  add_features(instances, o, true);
  instances->add_option("--image", o.image, "Input image (PPM)")->required();
  instances->add_option("--annotations", o.annotations, "Detections (JSON)")->required();
  instances->add_option("--out", o.out, "Output 16-bit id PGM; the id table goes next to it as .json")->required();
  add_grabcut(instances, o);

  auto* clean = app.add_subcommand("clean", "Drop object-free boxes and tighten the rest");
  add_features(clean, o);
  clean->add_option("--annotations", o.annotations, "Annotations (JSON)")->required();
  clean->add_option("--image", o.image, "Image (PPM) the annotations refer to");
  add_size(clean, o);
  clean->add_option("--drop-threshold", o.drop_threshold, "Drop a box when its heatmap peak is below this")
      ->capture_default_str();
  clean->add_option("--out", o.out, "Output annotations (JSON)")->required();

  auto* propose = app.add_subcommand("propose", "Multi-scale boxes around heatmap blobs");
  add_features(propose, o);
  propose->add_option("--image", o.image, "Image (PPM) whose size the heatmap takes");
  add_size(propose, o);
  propose->add_option("--scales", o.scales, "Comma-separated scale factors")->delimiter(',')->capture_default_str();
  propose->add_option("--out", o.out, "Output proposals (JSON)")->required();

  auto* eval_iou = app.add_subcommand("eval-iou", "Mean mask IoU over PRED GT pairs");
  eval_iou->add_option("pairs", o.pairs, "PRED.pgm GT.pgm [PRED.pgm GT.pgm ...]")->required();

  auto* eval_recall = app.add_subcommand("eval-recall", "Proposal recall over PROPOSALS GT pairs");
  eval_recall->add_option("pairs", o.pairs, "PROPOSALS.json GT.json [...]")->required();
  eval_recall->add_option("--iou-threshold", o.iou_threshold, "Match threshold")->capture_default_str();

  if (argc <= 1) {
    err << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mason: " << e.what() << "\n";
    err << "Run with --help for usage.\n";
    return kExitUsage;
  }

  try {
    if (heatmap->parsed()) cmd_heatmap(o, out);
    else if (trimap->parsed()) cmd_trimap(o, out);
    else if (segment->parsed()) cmd_segment(o, out);
    else if (instances->parsed()) cmd_instances(o, out);
    else if (clean->parsed()) cmd_clean(o, out);
    else if (propose->parsed()) cmd_propose(o, out);
    else if (eval_iou->parsed()) cmd_eval_iou(o, out);
    else if (eval_recall->parsed()) cmd_eval_recall(o, out);
  } catch (const UsageError& e) {
    err << "mason: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "mason: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace mason::cli

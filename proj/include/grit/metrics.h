#ifndef GRIT_METRICS_H_
#define GRIT_METRICS_H_

// Scoring of generated location tokens against gold boxes.
//
// Every response is read with markup::extract_links; the boxes of all
// recovered groups, in surface order, are dequantized at the item's dims.
// A response with a malformed group or without any box is a decode failure
// and scores as a miss. A box matches when its IoU with a gold box is
// strictly greater than the threshold.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grit/geometry.h"
#include "grit/locgrid.h"

namespace grit::metrics {

struct GoldItem {
  std::string id;
  std::string phrase;
  std::vector<PixelBox> gold_boxes;  // non-empty
  ImageDims dims;
};

struct Prediction {
  std::string id;
  std::string output;  // raw model response
};

struct DecodedOutput {
  std::vector<PixelBox> boxes;  // generation order
  bool failed = false;
};

DecodedOutput decode_output(std::string_view output, const ImageDims& dims,
                            const GridSpec& grid);

// Whether any of the first min(k, available) boxes matches any gold box.
bool any_box_hit(const DecodedOutput& decoded, std::span<const PixelBox> gold,
                 int k, double iou_threshold);

// ANY-BOX recall over the top-k boxes of each response. Throws
// std::invalid_argument when an item has no prediction, ids repeat, or a
// prediction has no gold item.
double recall_at_k(std::span<const GoldItem> items,
                   std::span<const Prediction> preds, int k,
                   double iou_threshold, const GridSpec& grid);

// Accuracy of the first generated box. Every item needs exactly one gold box.
double rec_accuracy(std::span<const GoldItem> items,
                    std::span<const Prediction> preds, double iou_threshold,
                    const GridSpec& grid);

struct EvalConfig {
  double iou_threshold = 0.5;
  GridSpec grid;
  std::vector<int> ks{1, 5, 10};
  int workers = 1;
};

struct MetricsReport {
  std::map<int, double> recall_at;
  std::optional<double> accuracy;  // present when every item has one gold box
  std::size_t n_items = 0;
  std::size_t n_decode_failures = 0;
};

MetricsReport score(std::span<const GoldItem> items,
                    std::span<const Prediction> preds, const EvalConfig& config);

// Reads gold.jsonl and pred.jsonl and scores them. Gold lines without
// width/height, or every line when dims_override is set, use the fallback
// dims. Throws io::DataError on schema violations and id mismatches.
MetricsReport score_run(const std::filesystem::path& gold_path,
                        const std::filesystem::path& pred_path,
                        const EvalConfig& config, const ImageDims& fallback_dims,
                        bool dims_override = false);

}  // namespace grit::metrics

#endif  // GRIT_METRICS_H_

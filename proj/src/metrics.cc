#include "grit/metrics.h"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "grit/io.h"
#include "grit/markup.h"
#include "grit/parallel.h"

namespace grit::metrics {
namespace {

// Pairs every gold item with its prediction output.
std::vector<const std::string*> match_predictions(
    std::span<const GoldItem> items, std::span<const Prediction> preds) {
  std::unordered_map<std::string_view, const std::string*> by_id;
  for (const Prediction& p : preds) {
    if (!by_id.emplace(p.id, &p.output).second) {
      throw std::invalid_argument("duplicate prediction id " + p.id);
    }
  }
  std::vector<const std::string*> out;
  out.reserve(items.size());
  std::unordered_map<std::string_view, int> seen;
  for (const GoldItem& item : items) {
    if (seen[item.id]++ > 0) throw std::invalid_argument("duplicate gold id " + item.id);
    const auto it = by_id.find(item.id);
    if (it == by_id.end()) throw std::invalid_argument("no prediction for item " + item.id);
    out.push_back(it->second);
  }
  if (by_id.size() != items.size()) {
    for (const Prediction& p : preds) {
      if (!seen.contains(p.id)) {
        throw std::invalid_argument("prediction " + p.id + " has no gold item");
      }
    }
  }
  return out;
}

void check_threshold(double iou_threshold) {
  if (!(iou_threshold > 0 && iou_threshold < 1)) {
    throw std::invalid_argument("IoU threshold must be in (0, 1)");
  }
}

struct ItemScore {
  std::vector<char> hit_at;  // one entry per requested k
  bool first_hit = false;
  bool failed = false;
};

}  // namespace

DecodedOutput decode_output(std::string_view output, const ImageDims& dims,
                            const GridSpec& grid) {
  const markup::Extraction extraction = markup::extract_links(output, grid);
  DecodedOutput out;
  for (const markup::ExtractedLink& link : extraction.links) {
    for (const TokenBoxPair& pair : link.boxes) {
      out.boxes.push_back(dequantize_box(pair, dims, grid));
    }
  }
  out.failed = extraction.failed || out.boxes.empty();
  return out;
}

bool any_box_hit(const DecodedOutput& decoded, std::span<const PixelBox> gold,
                 int k, double iou_threshold) {
  if (decoded.failed || k < 1) return false;
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                 decoded.boxes.size());
  for (std::size_t i = 0; i < take; ++i) {
    for (const PixelBox& g : gold) {
      if (iou(decoded.boxes[i], g) > iou_threshold) return true;
    }
  }
  return false;
}

double recall_at_k(std::span<const GoldItem> items,
                   std::span<const Prediction> preds, int k,
                   double iou_threshold, const GridSpec& grid) {
  EvalConfig config;
  config.iou_threshold = iou_threshold;
  config.grid = grid;
  config.ks = {k};
  return score(items, preds, config).recall_at.at(k);
}

double rec_accuracy(std::span<const GoldItem> items,
                    std::span<const Prediction> preds, double iou_threshold,
                    const GridSpec& grid) {
  for (const GoldItem& item : items) {
    if (item.gold_boxes.size() != 1) {
      throw std::invalid_argument("item " + item.id +
                                  " needs exactly one gold box for accuracy");
    }
  }
  EvalConfig config;
  config.iou_threshold = iou_threshold;
  config.grid = grid;
  config.ks = {};
  return score(items, preds, config).accuracy.value_or(0.0);
}

MetricsReport score(std::span<const GoldItem> items,
                    std::span<const Prediction> preds, const EvalConfig& config) {
  check_threshold(config.iou_threshold);
  for (int k : config.ks) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
  }
  for (const GoldItem& item : items) {
    if (item.gold_boxes.empty()) {
      throw std::invalid_argument("item " + item.id + " has no gold boxes");
    }
  }
  const std::vector<const std::string*> outputs = match_predictions(items, preds);

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::vector<ItemScore> scores = parallel_map(
      std::span<const std::size_t>(order), config.workers, [&](std::size_t i) {
        const GoldItem& item = items[i];
        const DecodedOutput decoded =
            decode_output(*outputs[i], item.dims, config.grid);
        ItemScore s;
        s.failed = decoded.failed;
        for (int k : config.ks) {
          s.hit_at.push_back(any_box_hit(decoded, item.gold_boxes, k,
                                         config.iou_threshold));
        }
        s.first_hit = !decoded.failed && item.gold_boxes.size() == 1 &&
                      iou(decoded.boxes.front(), item.gold_boxes.front()) >
                          config.iou_threshold;
        return s;
      });

  MetricsReport report;
  report.n_items = items.size();
  const double n = items.empty() ? 1.0 : static_cast<double>(items.size());
  for (std::size_t j = 0; j < config.ks.size(); ++j) {
    std::size_t hits = 0;
    for (const ItemScore& s : scores) hits += s.hit_at[j];
    report.recall_at[config.ks[j]] = static_cast<double>(hits) / n;
  }
  const bool single_gold =
      std::all_of(items.begin(), items.end(),
                  [](const GoldItem& item) { return item.gold_boxes.size() == 1; });
  if (single_gold) {
    std::size_t hits = 0;
    for (const ItemScore& s : scores) hits += s.first_hit;
    report.accuracy = static_cast<double>(hits) / n;
  }
  for (const ItemScore& s : scores) report.n_decode_failures += s.failed;
  return report;
}

MetricsReport score_run(const std::filesystem::path& gold_path,
                        const std::filesystem::path& pred_path,
                        const EvalConfig& config, const ImageDims& fallback_dims,
                        bool dims_override) {
  std::vector<GoldItem> items;
  {
    io::LineReader reader(gold_path.string());
    std::string line;
    while (reader.next(line)) {
      if (line.empty()) continue;
      try {
        items.push_back(io::gold_from_json(io::parse_object(line), fallback_dims,
                                           dims_override));
      } catch (const io::SchemaError& e) {
        throw io::DataError(reader.path(), reader.line_number(), e.what());
      }
    }
  }
  std::vector<Prediction> preds;
  {
    io::LineReader reader(pred_path.string());
    std::string line;
    while (reader.next(line)) {
      if (line.empty()) continue;
      try {
        preds.push_back(io::prediction_from_json(io::parse_object(line)));
      } catch (const io::SchemaError& e) {
        throw io::DataError(reader.path(), reader.line_number(), e.what());
      }
    }
  }
  try {
    return score(items, preds, config);
  } catch (const std::invalid_argument& e) {
    throw io::DataError(pred_path.string(), 0, e.what());
  }
}

}  // namespace grit::metrics

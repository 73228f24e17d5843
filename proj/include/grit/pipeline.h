#ifndef GRIT_PIPELINE_H_
#define GRIT_PIPELINE_H_

// Construction of grounded image-text records from a dependency-parsed
// caption and the boxes a grounding detector produced for its noun chunks.
//
//   noun chunks -> drop abstract heads (stoplist)
//               -> NMS over all detections, keep score > threshold
//               -> discard the pair if no box survives
//               -> expand each chunk with boxes to its dependency subtree
//               -> keep expressions not contained in another one
//               -> give each expression the boxes of its source chunk
//               -> serialize with the <grounding> marker

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "grit/geometry.h"
#include "grit/locgrid.h"

namespace grit::pipeline {

struct ParseToken {
  std::string text;
  int head = 0;  // index of the governing token, own index for the root
  std::string dep;
};

// Token range [start, end) with its syntactic head.
struct NounChunk {
  int start = 0;
  int end = 0;
  int head = 0;

  friend bool operator==(const NounChunk&, const NounChunk&) = default;
};

struct ParseDoc {
  std::string image_id;
  ImageDims dims;
  std::string caption;
  std::vector<ParseToken> tokens;
  std::vector<NounChunk> chunks;
};

// Empty when the document is well formed, otherwise the first problem found:
// bad dims, head out of range, no root, cycles, tokens that
// cannot be located in order within the caption, bad or overlapping chunks.
std::string validate(const ParseDoc& doc);

// Byte range of every token inside the caption, located left to right.
// Throws std::invalid_argument when a token cannot be found.
std::vector<std::pair<std::size_t, std::size_t>> token_offsets(
    const ParseDoc& doc);

struct ExpressionSpan {
  int start = 0;  // token range [start, end)
  int end = 0;
  int source_chunk = 0;
  std::string text;

  friend bool operator==(const ExpressionSpan&, const ExpressionSpan&) = default;
};

struct GritRef {
  ExpressionSpan expression;
  std::vector<PixelBox> boxes;
};

struct GritRecord {
  std::string image_id;
  ImageDims dims;
  std::string caption;
  std::vector<GritRef> refs;
  std::string grounded_text;
};

struct Discarded {
  std::string reason;
};

using BuildOutcome = std::variant<GritRecord, Discarded>;

using Stoplist = std::unordered_set<std::string>;

struct BuildConfig {
  double score_threshold = 0.65;  // strict: kept iff score > threshold
  double nms_threshold = 0.7;
  GridSpec grid;
  // Apply the score cut before suppression instead of after it.
  bool threshold_before_nms = false;
};

// One lowercase lemma per line; blank lines and '#' comments are skipped.
Stoplist load_stoplist(const std::filesystem::path& path);

bool is_stoplisted(const ParseDoc& doc, const NounChunk& chunk,
                   const Stoplist& stoplist);

std::vector<NounChunk> filter_chunks(const ParseDoc& doc,
                                     const Stoplist& stoplist);

// Grows a chunk to the dependency subtree of its head. Chunks whose head has
// a conj/cc child, or whose subtree is not a contiguous token run, are
// returned as they are.
ExpressionSpan expand_chunk(const ParseDoc& doc, const NounChunk& chunk,
                            int chunk_index);

// Drops spans strictly contained in another span. Of several spans with the
// same range only the one with the lowest source chunk survives. Input order
// is preserved.
std::vector<ExpressionSpan> retain_maximal(std::span<const ExpressionSpan> spans);

// Surviving boxes grouped by chunk, each group in input order.
std::map<int, std::vector<PixelBox>> select_boxes(
    std::span<const ScoredBox> dets, double score_threshold,
    double nms_threshold, bool threshold_before_nms = false);

// Throws std::invalid_argument on detections that reference a missing chunk
// or carry an invalid box or score.
BuildOutcome build_record(const ParseDoc& doc, std::span<const ScoredBox> dets,
                          const Stoplist& stoplist, const BuildConfig& config);

std::size_t word_count(std::string_view text);

// Running totals; merge() is associative and commutative.
struct DatasetStats {
  std::uint64_t images = 0;
  std::uint64_t objects = 0;
  std::uint64_t text_spans = 0;
  std::uint64_t expression_words = 0;

  void add(const GritRecord& record);
  void merge(const DatasetStats& other);
  // Mean whitespace-delimited word count per text span; 0 with no spans.
  double avg_expression_length() const;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats compute_stats(std::span<const GritRecord> records);

}  // namespace grit::pipeline

#endif  // GRIT_PIPELINE_H_

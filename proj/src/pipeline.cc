#include "grit/pipeline.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "grit/markup.h"

namespace grit::pipeline {
namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::vector<int>> children_of(const ParseDoc& doc) {
  std::vector<std::vector<int>> children(doc.tokens.size());
  for (int i = 0; i < static_cast<int>(doc.tokens.size()); ++i) {
    const int head = doc.tokens[i].head;
    if (head != i) children[head].push_back(i);
  }
  return children;
}

// Surface text of tokens [start, end) without surrounding whitespace, with
// its byte range in the caption.
struct SurfaceText {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;
};

SurfaceText surface(const ParseDoc& doc,
                    const std::vector<std::pair<std::size_t, std::size_t>>& offsets,
                    int start, int end) {
  std::size_t begin = offsets[start].first;
  std::size_t stop = offsets[end - 1].second;
  while (begin < stop && is_space(doc.caption[begin])) ++begin;
  while (stop > begin && is_space(doc.caption[stop - 1])) --stop;
  return {begin, stop, doc.caption.substr(begin, stop - begin)};
}

ExpressionSpan expand_with(const ParseDoc& doc, const NounChunk& chunk,
                           int chunk_index,
                           const std::vector<std::vector<int>>& children,
                           const std::vector<std::pair<std::size_t, std::size_t>>& offsets) {
  ExpressionSpan span{chunk.start, chunk.end, chunk_index, {}};
  const bool has_conjunct =
      std::any_of(children[chunk.head].begin(), children[chunk.head].end(),
                  [&](int child) {
                    const std::string& dep = doc.tokens[child].dep;
                    return dep == "conj" || dep == "cc";
                  });
  if (!has_conjunct) {
    std::vector<char> in_tree(doc.tokens.size(), 0);
    std::vector<int> stack{chunk.head};
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (in_tree[node]) continue;
      in_tree[node] = 1;
      for (int child : children[node]) stack.push_back(child);
    }
    for (int i = chunk.start; i < chunk.end; ++i) in_tree[i] = 1;
    const auto first = std::find(in_tree.begin(), in_tree.end(), 1);
    const auto last = std::find(in_tree.rbegin(), in_tree.rend(), 1);
    const int lo = static_cast<int>(first - in_tree.begin());
    const int hi = static_cast<int>(in_tree.rend() - last);
    if (std::all_of(in_tree.begin() + lo, in_tree.begin() + hi,
                    [](char c) { return c != 0; })) {
      span.start = lo;
      span.end = hi;
    }
  }
  span.text = surface(doc, offsets, span.start, span.end).text;
  return span;
}

void check_detections(const ParseDoc& doc, std::span<const ScoredBox> dets) {
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const ScoredBox& det = dets[i];
    if (det.chunk_index < 0 ||
        det.chunk_index >= static_cast<int>(doc.chunks.size())) {
      throw std::invalid_argument("detection " + std::to_string(i) +
                                  " references missing chunk " +
                                  std::to_string(det.chunk_index));
    }
    if (!det.box.valid()) {
      throw std::invalid_argument("detection " + std::to_string(i) +
                                  " has an invalid box");
    }
    if (!(det.score >= 0 && det.score <= 1)) {
      throw std::invalid_argument("detection " + std::to_string(i) +
                                  " has a score outside [0, 1]");
    }
  }
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> token_offsets(
    const ParseDoc& doc) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(doc.tokens.size());
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    const std::string& text = doc.tokens[i].text;
    const std::size_t at = text.empty() ? std::string::npos
                                        : doc.caption.find(text, cursor);
    if (at == std::string::npos) {
      throw std::invalid_argument("token " + std::to_string(i) + " \"" + text +
                                  "\" not found in caption");
    }
    out.emplace_back(at, at + text.size());
    cursor = at + text.size();
  }
  return out;
}

std::string validate(const ParseDoc& doc) {
  if (!doc.dims.valid()) return "image dims must be positive";
  const int n = static_cast<int>(doc.tokens.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int head = doc.tokens[i].head;
    if (head < 0 || head >= n) {
      return "token " + std::to_string(i) + " head out of range";
    }
    if (head == i) ++roots;
  }
  if (n > 0 && roots == 0) return "dependency tree has no root";

  // Every token must reach a root by following heads.
  std::vector<char> state(doc.tokens.size(), 0);  // 0 unvisited, 1 on path, 2 done
  for (int i = 0; i < n; ++i) {
    std::vector<int> path;
    int node = i;
    while (state[node] == 0) {
      state[node] = 1;
      path.push_back(node);
      if (doc.tokens[node].head == node) break;
      node = doc.tokens[node].head;
    }
    if (state[node] == 1 && doc.tokens[node].head != node) {
      return "dependency cycle through token " + std::to_string(node);
    }
    for (int p : path) state[p] = 2;
  }

  try {
    token_offsets(doc);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }

  std::vector<NounChunk> sorted = doc.chunks;
  for (std::size_t c = 0; c < sorted.size(); ++c) {
    const NounChunk& chunk = sorted[c];
    if (chunk.start < 0 || chunk.start >= chunk.end || chunk.end > n) {
      return "chunk " + std::to_string(c) + " outside token range";
    }
    if (chunk.head < chunk.start || chunk.head >= chunk.end) {
      return "chunk " + std::to_string(c) + " head outside chunk";
    }
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const NounChunk& a, const NounChunk& b) { return a.start < b.start; });
  for (std::size_t c = 1; c < sorted.size(); ++c) {
    if (sorted[c].start < sorted[c - 1].end) return "noun chunks overlap";
  }
  return {};
}

Stoplist load_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read stoplist " + path.string());
  Stoplist out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t b = 0, e = line.size();
    while (b < e && is_space(line[b])) ++b;
    while (e > b && is_space(line[e - 1])) --e;
    if (b < e) out.insert(lowercase(std::string_view(line).substr(b, e - b)));
  }
  return out;
}

bool is_stoplisted(const ParseDoc& doc, const NounChunk& chunk,
                   const Stoplist& stoplist) {
  return stoplist.contains(lowercase(doc.tokens[chunk.head].text));
}

std::vector<NounChunk> filter_chunks(const ParseDoc& doc,
                                     const Stoplist& stoplist) {
  std::vector<NounChunk> out;
  for (const NounChunk& chunk : doc.chunks) {
    if (!is_stoplisted(doc, chunk, stoplist)) out.push_back(chunk);
  }
  return out;
}

ExpressionSpan expand_chunk(const ParseDoc& doc, const NounChunk& chunk,
                            int chunk_index) {
  return expand_with(doc, chunk, chunk_index, children_of(doc),
                     token_offsets(doc));
}

std::vector<ExpressionSpan> retain_maximal(std::span<const ExpressionSpan> spans) {
  std::vector<ExpressionSpan> out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const ExpressionSpan& s = spans[i];
    bool dominated = false;
    for (std::size_t j = 0; j < spans.size() && !dominated; ++j) {
      if (j == i) continue;
      const ExpressionSpan& o = spans[j];
      const bool contains = o.start <= s.start && s.end <= o.end;
      const bool equal = o.start == s.start && o.end == s.end;
      if (!contains) continue;
      if (!equal) {
        dominated = true;
      } else if (o.source_chunk < s.source_chunk ||
                 (o.source_chunk == s.source_chunk && j < i)) {
        dominated = true;
      }
    }
    if (!dominated) out.push_back(s);
  }
  return out;
}

std::map<int, std::vector<PixelBox>> select_boxes(
    std::span<const ScoredBox> dets, double score_threshold,
    double nms_threshold, bool threshold_before_nms) {
  std::map<int, std::vector<PixelBox>> groups;
  std::vector<ScoredBox> pool;
  for (const ScoredBox& det : dets) {
    if (!threshold_before_nms || det.score > score_threshold) pool.push_back(det);
  }
  for (std::size_t idx : nms(pool, nms_threshold)) {
    const ScoredBox& det = pool[idx];
    if (det.score > score_threshold) groups[det.chunk_index].push_back(det.box);
  }
  return groups;
}

BuildOutcome build_record(const ParseDoc& doc, std::span<const ScoredBox> dets,
                          const Stoplist& stoplist, const BuildConfig& config) {
  check_detections(doc, dets);

  std::vector<char> chunk_kept(doc.chunks.size());
  for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
    chunk_kept[c] = !is_stoplisted(doc, doc.chunks[c], stoplist);
  }
  std::vector<ScoredBox> candidates;
  for (const ScoredBox& det : dets) {
    if (chunk_kept[det.chunk_index]) candidates.push_back(det);
  }
  const auto groups =
      select_boxes(candidates, config.score_threshold, config.nms_threshold,
                   config.threshold_before_nms);
  if (groups.empty()) return Discarded{"no boxes retained"};

  const auto children = children_of(doc);
  const auto offsets = token_offsets(doc);
  std::vector<ExpressionSpan> expressions;
  // Only chunks that kept a box take part; an unboxed chunk must not swallow
  // a grounded one.
  for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
    if (groups.contains(static_cast<int>(c))) {
      expressions.push_back(expand_with(doc, doc.chunks[c], static_cast<int>(c),
                                        children, offsets));
    }
  }

  std::vector<ExpressionSpan> grounded;
  for (ExpressionSpan& e : retain_maximal(expressions)) {
    if (groups.contains(e.source_chunk) && !e.text.empty()) {
      grounded.push_back(std::move(e));
    }
  }
  std::stable_sort(grounded.begin(), grounded.end(),
                   [](const ExpressionSpan& a, const ExpressionSpan& b) {
                     return a.start < b.start;
                   });
  // Fallback spans from odd parses can cross without nesting; the earlier one
  // wins so links stay disjoint.
  std::vector<ExpressionSpan> disjoint;
  for (ExpressionSpan& e : grounded) {
    if (disjoint.empty() || disjoint.back().end <= e.start) {
      disjoint.push_back(std::move(e));
    }
  }
  if (disjoint.empty()) return Discarded{"no grounded expression retained"};

  // Caption edges are trimmed so the marker and links serialize canonically.
  std::size_t lead = 0;
  std::size_t tail = doc.caption.size();
  while (lead < tail && is_space(doc.caption[lead])) ++lead;
  while (tail > lead && is_space(doc.caption[tail - 1])) --tail;

  GritRecord record;
  record.image_id = doc.image_id;
  record.dims = doc.dims;
  record.caption = doc.caption.substr(lead, tail - lead);

  markup::GroundedCaption grounded_caption;
  grounded_caption.caption = record.caption;
  grounded_caption.has_grounding_marker = true;
  for (ExpressionSpan& e : disjoint) {
    const SurfaceText text = surface(doc, offsets, e.start, e.end);
    const int source = e.source_chunk;
    GritRef ref{std::move(e), groups.at(source)};
    markup::GroundLink link;
    link.span = {text.begin - lead, text.end - lead, text.text};
    for (const PixelBox& box : ref.boxes) {
      link.boxes.push_back(quantize_box(box, doc.dims, config.grid));
    }
    grounded_caption.links.push_back(std::move(link));
    record.refs.push_back(std::move(ref));
  }
  record.grounded_text = markup::serialize(grounded_caption, config.grid);
  return record;
}

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return words;
}

void DatasetStats::add(const GritRecord& record) {
  ++images;
  for (const GritRef& ref : record.refs) {
    ++text_spans;
    objects += ref.boxes.size();
    expression_words += word_count(ref.expression.text);
  }
}

void DatasetStats::merge(const DatasetStats& other) {
  images += other.images;
  objects += other.objects;
  text_spans += other.text_spans;
  expression_words += other.expression_words;
}

double DatasetStats::avg_expression_length() const {
  if (text_spans == 0) return 0.0;
  return static_cast<double>(expression_words) / static_cast<double>(text_spans);
}

DatasetStats compute_stats(std::span<const GritRecord> records) {
  DatasetStats stats;
  for (const GritRecord& record : records) stats.add(record);
  return stats;
}

}  // namespace grit::pipeline

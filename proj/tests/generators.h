// Random inputs shared by the property tests and the acceptance runner.
#ifndef GRIT_TESTS_GENERATORS_H_
#define GRIT_TESTS_GENERATORS_H_

#include <array>
#include <random>
#include <string>
#include <vector>

#include "grit/locgrid.h"
#include "grit/markup.h"

namespace gen {

inline const std::vector<std::string>& words() {
  static const std::vector<std::string> w{
      "a",     "dog",  "in",     "field", "of",  "flowers", "It",    "seats",
      "next",  "to",   "campfire", "the", "red", "car,",    "x<y",   "3>2",
      "caf\xc3\xa9", "man's", "(left)", "<b", "tag>", "and",  "two",   "birds."};
  return w;
}

inline grit::TokenBoxPair random_pair(std::mt19937_64& rng, const grit::GridSpec& g) {
  std::uniform_int_distribution<int> cell(0, g.bins - 1);
  int r1 = cell(rng), r2 = cell(rng), c1 = cell(rng), c2 = cell(rng);
  if (r1 > r2) std::swap(r1, r2);
  if (c1 > c2) std::swap(c1, c2);
  return {grit::token_of_cell(r1, c1, g), grit::token_of_cell(r2, c2, g)};
}

// A valid GroundedCaption: words separated by one or two spaces, some word
// runs linked to 1..3 boxes, random envelope flags.
inline grit::markup::GroundedCaption random_caption(std::mt19937_64& rng,
                                                    const grit::GridSpec& g,
                                                    int min_links = 0) {
  using namespace grit::markup;
  std::uniform_int_distribution<int> n_words(1, 14), pick(0, static_cast<int>(words().size()) - 1);
  std::uniform_int_distribution<int> coin(0, 1), sep(0, 5), n_boxes(1, 3), run(1, 3);
  GroundedCaption doc;
  const int n = n_words(rng);
  std::vector<std::pair<std::size_t, std::size_t>> word_at;
  for (int i = 0; i < n; ++i) {
    if (i > 0) doc.caption += sep(rng) == 0 ? "  " : " ";
    const std::string& w = words()[pick(rng)];
    word_at.emplace_back(doc.caption.size(), doc.caption.size() + w.size());
    doc.caption += w;
  }
  int i = 0;
  while (i < n) {
    const bool force = static_cast<int>(doc.links.size()) < min_links && i == n - 1;
    if (force || coin(rng) == 0 || (static_cast<int>(doc.links.size()) < min_links && coin(rng))) {
      const int len = std::min(run(rng), n - i);
      GroundLink link;
      link.span.start = word_at[i].first;
      link.span.end = word_at[i + len - 1].second;
      link.span.text = doc.caption.substr(link.span.start, link.span.end - link.span.start);
      const int nb = n_boxes(rng);
      for (int b = 0; b < nb; ++b) link.boxes.push_back(random_pair(rng, g));
      doc.links.push_back(std::move(link));
      i += len;
    } else {
      ++i;
    }
  }
  doc.has_bos = coin(rng);
  doc.has_image_slot = coin(rng);
  if (doc.has_image_slot && coin(rng)) doc.image_payload = "img_" + std::to_string(rng() % 1000);
  doc.has_grounding_marker = coin(rng);
  doc.has_eos = coin(rng);
  return doc;
}

// All offsets at which `needle` starts.
inline std::vector<std::size_t> find_all(const std::string& s, const std::string& needle) {
  std::vector<std::size_t> out;
  for (std::size_t at = s.find(needle); at != std::string::npos; at = s.find(needle, at + 1)) {
    out.push_back(at);
  }
  return out;
}

// Applies one structural corruption to a canonical string containing at least
// one link. Returns the empty string when the chosen mutation does not apply.
inline std::string mutate(const std::string& s, int kind, std::mt19937_64& rng, const grit::GridSpec& g) {
  auto choose = [&](const std::vector<std::size_t>& v) { return v[rng() % v.size()]; };
  std::string out = s;
  switch (kind) {
    case 0: {  // drop one location token
      const auto locs = find_all(s, "<loc_");
      const std::size_t at = choose(locs);
      out.erase(at, s.find('>', at) + 1 - at);
      return out;
    }
    case 1: {  // drop a </box>
      const std::size_t at = choose(find_all(s, "</box>"));
      out.erase(at, 6);
      return out;
    }
    case 2: {  // index outside the vocabulary
      const std::size_t at = choose(find_all(s, "<loc_"));
      const std::size_t close = s.find('>', at);
      const int bad = g.vocab_size() + static_cast<int>(rng() % 5000);
      out.replace(at + 5, close - at - 5, std::to_string(bad));
      return out;
    }
    case 3: {  // unknown tag spliced in after a </p> or at the start
      const auto ps = find_all(s, "</p>");
      const std::size_t at = ps.empty() ? 0 : choose(ps) + 4;
      out.insert(at, "<bogus>");
      return out;
    }
    case 4: {  // delete a whole box group
      const std::size_t at = choose(find_all(s, "<box>"));
      out.erase(at, s.find("</box>", at) + 6 - at);
      return out;
    }
    case 5: {  // swap the corners of a pair whose corners differ
      std::vector<std::size_t> candidates;
      for (std::size_t at : find_all(s, "<box>")) {
        // first pair of the group
        const std::size_t a = at + 5, a_end = s.find('>', a) + 1;
        const std::size_t b_end = s.find('>', a_end) + 1;
        if (s.substr(a, a_end - a) != s.substr(a_end, b_end - a_end)) candidates.push_back(at);
      }
      if (candidates.empty()) return {};
      const std::size_t at = choose(candidates);
      const std::size_t a = at + 5, a_end = s.find('>', a) + 1;
      const std::size_t b_end = s.find('>', a_end) + 1;
      const std::string first = s.substr(a, a_end - a), second = s.substr(a_end, b_end - a_end);
      out.replace(a, b_end - a, second + first);
      return out;
    }
    case 6: {  // drop a <p>
      const std::size_t at = choose(find_all(s, "<p>"));
      out.erase(at, 3);
      return out;
    }
    case 7: {  // truncate inside a box group
      const std::size_t at = choose(find_all(s, "<box>"));
      const std::size_t end = s.find("</box>", at);
      const std::size_t cut = at + 1 + rng() % (end - at);
      return out.substr(0, cut);
    }
    case 8: {  // dangling <delim> before </box>
      const std::size_t at = choose(find_all(s, "</box>"));
      out.insert(at, "<delim>");
      return out;
    }
    default:
      return {};
  }
}

inline constexpr int kMutationKinds = 9;

// An evaluation item together with the boxes written into its response, so a
// reference scorer never has to read markup.
struct EvalCase {
  std::string id;
  int width = 224, height = 224;
  std::vector<std::array<double, 4>> gold;
  std::string output;
  std::vector<std::pair<int, int>> written;  // token pairs in surface order
  bool malformed = false;
};

inline EvalCase random_eval_case(std::mt19937_64& rng, int index, const grit::GridSpec& g,
                                 int max_gold = 3) {
  EvalCase c;
  c.id = "item" + std::to_string(index);
  std::uniform_int_distribution<int> dim(32, 640), n_gold(1, max_gold), n_boxes(0, 12), kind(0, 9);
  c.width = dim(rng);
  c.height = dim(rng);
  std::uniform_real_distribution<double> ux(0, c.width), uy(0, c.height);
  for (int i = n_gold(rng); i > 0; --i) {
    double a = ux(rng), b = ux(rng), y1 = uy(rng), y2 = uy(rng);
    c.gold.push_back({std::min(a, b), std::min(y1, y2), std::max(a, b), std::max(y1, y2)});
  }
  const int k = kind(rng);
  if (k == 0) return c;  // empty response
  if (k == 1) {
    c.output = "<p> " + std::string("thing") + " </p><box><loc_1></box>";
    c.malformed = true;
    return c;
  }
  c.output = "<grounding> ";
  const int n = n_boxes(rng);
  for (int i = 0; i < n; ++i) {
    grit::TokenBoxPair p;
    if (i % 3 == 0 && !c.gold.empty()) {
      // Near a gold box so hits are common.
      const auto& gb = c.gold[rng() % c.gold.size()];
      p = grit::quantize_box({gb[0], gb[1], gb[2], gb[3]}, {c.width, c.height}, g);
    } else {
      p = random_pair(rng, g);
    }
    c.written.emplace_back(p.tl.index, p.br.index);
    const std::vector<grit::TokenBoxPair> one{p};
    c.output += "<p> obj" + std::to_string(i) + " </p>" + grit::markup::box_group(one) + " ";
  }
  if (k == 2 && n > 0) {
    c.output += "<box><loc_3></box>";  // one trailing malformed group
    c.malformed = true;
  }
  return c;
}


}  // namespace gen

#endif  // GRIT_TESTS_GENERATORS_H_

#include "grit/markup.h"

#include <climits>
#include <stdexcept>

namespace grit::markup {
namespace {

enum class TagKind {
  kBos,
  kEos,
  kImageOpen,
  kImageClose,
  kGrounding,
  kPhraseOpen,
  kPhraseClose,
  kBoxOpen,
  kBoxClose,
  kDelim,
  kLoc,
  kUnknown,
};

struct Tag {
  TagKind kind = TagKind::kUnknown;
  std::size_t begin = 0;
  std::size_t end = 0;
  int loc = -1;  // INT_MAX when the digits do not fit
};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}
bool is_name_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
bool is_name_char(char c) { return is_name_start(c) || (c >= '0' && c <= '9'); }

std::size_t skip_space(std::string_view text, std::size_t pos) {
  while (pos < text.size() && is_space(text[pos])) ++pos;
  return pos;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

TagKind classify(std::string_view tag, int* loc) {
  static constexpr std::pair<std::string_view, TagKind> kFixed[] = {
      {kBos, TagKind::kBos},
      {kEos, TagKind::kEos},
      {kImageOpen, TagKind::kImageOpen},
      {kImageClose, TagKind::kImageClose},
      {kGrounding, TagKind::kGrounding},
      {kPhraseOpen, TagKind::kPhraseOpen},
      {kPhraseClose, TagKind::kPhraseClose},
      {kBoxOpen, TagKind::kBoxOpen},
      {kBoxClose, TagKind::kBoxClose},
      {kDelim, TagKind::kDelim},
  };
  for (const auto& [spelling, kind] : kFixed) {
    if (tag == spelling) return kind;
  }
  constexpr std::string_view kLocPrefix = "<loc_";
  if (!tag.starts_with(kLocPrefix)) return TagKind::kUnknown;
  const std::string_view digits =
      tag.substr(kLocPrefix.size(), tag.size() - kLocPrefix.size() - 1);
  if (digits.empty()) return TagKind::kUnknown;
  long long value = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return TagKind::kUnknown;
    value = value * 10 + (c - '0');
    if (value > INT_MAX) value = INT_MAX;
  }
  *loc = static_cast<int>(value);
  return TagKind::kLoc;
}

// A tag is `<name>` or `</name>` with name = [A-Za-z_][A-Za-z0-9_]*.
std::optional<Tag> tag_at(std::string_view text, std::size_t pos) {
  if (pos >= text.size() || text[pos] != '<') return std::nullopt;
  std::size_t p = pos + 1;
  if (p < text.size() && text[p] == '/') ++p;
  if (p >= text.size() || !is_name_start(text[p])) return std::nullopt;
  while (p < text.size() && is_name_char(text[p])) ++p;
  if (p >= text.size() || text[p] != '>') return std::nullopt;
  Tag tag;
  tag.begin = pos;
  tag.end = p + 1;
  tag.kind = classify(text.substr(pos, tag.end - pos), &tag.loc);
  return tag;
}

std::optional<Tag> next_tag(std::string_view text, std::size_t pos) {
  while ((pos = text.find('<', pos)) != std::string_view::npos) {
    if (auto tag = tag_at(text, pos)) return tag;
    ++pos;
  }
  return std::nullopt;
}

struct GroupResult {
  std::vector<TokenBoxPair> pairs;
  std::optional<DecodeFailure> failure;
  std::size_t resume = 0;  // where scanning continues after the group
};

// Parses the body of a box group; `pos` points just past <box>.
GroupResult parse_box_group(std::string_view text, std::size_t box_pos,
                            std::size_t pos, const GridSpec& grid) {
  GroupResult out;
  struct PendingLoc {
    int index;
    std::size_t pos;
  };
  std::vector<PendingLoc> pending;

  auto fail = [&](std::size_t at, DecodeError reason, std::string detail,
                  std::size_t resume) {
    out.pairs.clear();
    out.failure = DecodeFailure{at, reason, std::move(detail)};
    out.resume = resume;
    return out;
  };

  // Flushes the locations collected since the last <delim> (or <box>).
  auto close_pairs = [&](const Tag& closer) -> std::optional<DecodeFailure> {
    if (pending.empty()) {
      return DecodeFailure{closer.begin, DecodeError::kEmptyBoxGroup,
                           "box group without location tokens"};
    }
    if (pending.size() % 2 != 0) {
      return DecodeFailure{box_pos, DecodeError::kOddLocationCount,
                           std::to_string(pending.size()) +
                               " location tokens cannot form corner pairs"};
    }
    for (std::size_t i = 0; i < pending.size(); i += 2) {
      TokenBoxPair pair{LocToken{pending[i].index},
                        LocToken{pending[i + 1].index}};
      if (!well_ordered(pair, grid)) {
        return DecodeFailure{pending[i].pos, DecodeError::kPairOrder,
                             "top-left corner lies below or right of "
                             "bottom-right corner"};
      }
      out.pairs.push_back(pair);
    }
    pending.clear();
    return std::nullopt;
  };

  while (true) {
    pos = skip_space(text, pos);
    if (pos >= text.size()) {
      return fail(box_pos, DecodeError::kUnclosedBox, "missing </box>",
                  text.size());
    }
    const std::optional<Tag> tag = tag_at(text, pos);
    if (!tag) {
      return fail(pos, DecodeError::kUnclosedBox,
                  "text inside box group before </box>", pos);
    }
    switch (tag->kind) {
      case TagKind::kLoc:
        if (tag->loc >= grid.vocab_size()) {
          return fail(pos, DecodeError::kTokenOutOfRange,
                      "location token outside vocabulary of " +
                          std::to_string(grid.vocab_size()),
                      tag->end);
        }
        pending.push_back({tag->loc, pos});
        break;
      case TagKind::kDelim:
      case TagKind::kBoxClose:
        if (auto failure = close_pairs(*tag)) {
          return fail(failure->position, failure->reason,
                      std::move(failure->detail), tag->end);
        }
        if (tag->kind == TagKind::kBoxClose) {
          out.resume = tag->end;
          return out;
        }
        break;
      case TagKind::kUnknown:
        return fail(pos, DecodeError::kUnknownToken,
                    "unknown token " +
                        std::string(text.substr(pos, tag->end - pos)),
                    pos);
      default:
        return fail(pos, DecodeError::kUnclosedBox,
                    "unexpected " +
                        std::string(text.substr(pos, tag->end - pos)) +
                        " inside box group",
                    pos);
    }
    pos = tag->end;
  }
}

struct Failure {
  DecodeFailure value;
};

[[noreturn]] void fail(std::size_t at, DecodeError reason, std::string detail) {
  throw Failure{DecodeFailure{at, reason, std::move(detail)}};
}

GroundedCaption parse_or_throw(std::string_view text, const GridSpec& grid) {
  GroundedCaption doc;
  std::size_t pos = 0;

  auto header = [&](std::string_view token) {
    const std::size_t at = skip_space(text, pos);
    if (!text.substr(at).starts_with(token)) return false;
    pos = at + token.size();
    return true;
  };

  doc.has_bos = header(kBos);
  if (header(kImageOpen)) {
    const std::size_t open = pos - kImageOpen.size();
    const std::size_t close = text.find(kImageClose, pos);
    if (close == std::string_view::npos) {
      fail(open, DecodeError::kUnclosedImage, "missing </image>");
    }
    doc.has_image_slot = true;
    doc.image_payload = std::string(trim(text.substr(pos, close - pos)));
    pos = close + kImageClose.size();
  }
  doc.has_grounding_marker = header(kGrounding);
  if (doc.has_bos || doc.has_image_slot || doc.has_grounding_marker) {
    pos = skip_space(text, pos);
  }

  while (pos < text.size()) {
    const std::optional<Tag> tag = next_tag(text, pos);
    const std::size_t plain_end = tag ? tag->begin : text.size();
    doc.caption.append(text.substr(pos, plain_end - pos));
    if (!tag) break;
    pos = tag->end;

    switch (tag->kind) {
      case TagKind::kPhraseOpen: {
        const std::optional<Tag> close = next_tag(text, pos);
        if (!close) fail(tag->begin, DecodeError::kUnclosedSpan, "missing </p>");
        if (close->kind == TagKind::kUnknown) {
          fail(close->begin, DecodeError::kUnknownToken, "unknown token in span");
        }
        if (close->kind != TagKind::kPhraseClose) {
          fail(close->begin, DecodeError::kUnclosedSpan,
               "span interrupted before </p>");
        }
        const std::string_view inner =
            trim(text.substr(pos, close->begin - pos));
        if (inner.empty()) fail(tag->begin, DecodeError::kEmptySpan, "empty span");

        const std::size_t box_at = skip_space(text, close->end);
        const std::optional<Tag> box = tag_at(text, box_at);
        if (!box || box->kind != TagKind::kBoxOpen) {
          fail(box_at, DecodeError::kSpanWithoutBox,
               "span not followed by a box group");
        }
        GroupResult group = parse_box_group(text, box->begin, box->end, grid);
        if (group.failure) throw Failure{std::move(*group.failure)};

        GroundLink link;
        link.span.start = doc.caption.size();
        link.span.end = link.span.start + inner.size();
        link.span.text = std::string(inner);
        link.boxes = std::move(group.pairs);
        doc.caption.append(inner);
        doc.links.push_back(std::move(link));
        pos = group.resume;
        break;
      }
      case TagKind::kEos: {
        const std::size_t rest = skip_space(text, pos);
        if (rest != text.size()) {
          fail(rest, DecodeError::kUnexpectedToken, "content after </s>");
        }
        const std::size_t floor = doc.links.empty() ? 0 : doc.links.back().span.end;
        while (doc.caption.size() > floor && is_space(doc.caption.back())) {
          doc.caption.pop_back();
        }
        doc.has_eos = true;
        pos = text.size();
        break;
      }
      case TagKind::kBoxOpen:
        fail(tag->begin, DecodeError::kBoxWithoutSpan,
             "box group without a preceding span");
      case TagKind::kUnknown:
        fail(tag->begin, DecodeError::kUnknownToken,
             "unknown token " +
                 std::string(text.substr(tag->begin, tag->end - tag->begin)));
      default:
        fail(tag->begin, DecodeError::kUnexpectedToken,
             "unexpected " +
                 std::string(text.substr(tag->begin, tag->end - tag->begin)));
    }
  }
  return doc;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("serialize: " + what);
}

}  // namespace

std::string_view reason_name(DecodeError reason) {
  switch (reason) {
    case DecodeError::kUnclosedBox: return "unclosed_box";
    case DecodeError::kOddLocationCount: return "odd_location_count";
    case DecodeError::kEmptyBoxGroup: return "empty_box_group";
    case DecodeError::kUnknownToken: return "unknown_token";
    case DecodeError::kSpanWithoutBox: return "span_without_box";
    case DecodeError::kBoxWithoutSpan: return "box_without_span";
    case DecodeError::kTokenOutOfRange: return "token_out_of_range";
    case DecodeError::kPairOrder: return "pair_order";
    case DecodeError::kUnclosedSpan: return "unclosed_span";
    case DecodeError::kEmptySpan: return "empty_span";
    case DecodeError::kUnclosedImage: return "unclosed_image";
    case DecodeError::kUnexpectedToken: return "unexpected_token";
  }
  return "unknown";
}

std::string loc_text(LocToken token) {
  return "<loc_" + std::to_string(token.index) + ">";
}

std::string box_group(std::span<const TokenBoxPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("box group needs at least one pair");
  std::string out(kBoxOpen);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i > 0) out += kDelim;
    out += loc_text(pairs[i].tl);
    out += loc_text(pairs[i].br);
  }
  out += kBoxClose;
  return out;
}

bool contains_markup_token(std::string_view text) {
  return next_tag(text, 0).has_value();
}

std::string serialize(const GroundedCaption& doc, const GridSpec& grid) {
  const std::string& caption = doc.caption;
  require(!contains_markup_token(caption), "caption contains a markup token");
  const bool framed_front =
      doc.has_bos || doc.has_image_slot || doc.has_grounding_marker;
  require(!(framed_front && !caption.empty() && is_space(caption.front())),
          "caption starts with whitespace after a framing token");
  require(!(doc.has_eos && !caption.empty() && is_space(caption.back())),
          "caption ends with whitespace before </s>");
  if (doc.has_image_slot) {
    require(trim(doc.image_payload) == doc.image_payload,
            "image payload has surrounding whitespace");
    require(doc.image_payload.find(kImageClose) == std::string::npos,
            "image payload contains </image>");
  } else {
    require(doc.image_payload.empty(), "image payload without an image slot");
  }

  std::size_t cursor = 0;
  for (const GroundLink& link : doc.links) {
    const TextSpan& span = link.span;
    require(span.start >= cursor, "links overlap or are out of order");
    require(span.start < span.end && span.end <= caption.size(),
            "span outside caption");
    require(caption.compare(span.start, span.end - span.start, span.text) == 0,
            "span text does not match caption");
    require(trim(span.text) == span.text, "span text has surrounding whitespace");
    require(!link.boxes.empty(), "link without boxes");
    for (const TokenBoxPair& pair : link.boxes) {
      require(in_vocab(pair.tl, grid) && in_vocab(pair.br, grid),
              "location token outside vocabulary of " +
                  std::to_string(grid.vocab_size()));
      require(well_ordered(pair, grid), "badly ordered corner pair");
    }
    cursor = span.end;
  }

  std::string out;
  if (doc.has_bos) (out += kBos) += ' ';
  if (doc.has_image_slot) {
    (out += kImageOpen) += ' ';
    if (!doc.image_payload.empty()) (out += doc.image_payload) += ' ';
    (out += kImageClose) += ' ';
  }
  if (doc.has_grounding_marker) (out += kGrounding) += ' ';
  cursor = 0;
  for (const GroundLink& link : doc.links) {
    out.append(caption, cursor, link.span.start - cursor);
    (((out += kPhraseOpen) += ' ') += link.span.text) += ' ';
    out += kPhraseClose;
    out += box_group(link.boxes);
    cursor = link.span.end;
  }
  out.append(caption, cursor);
  if (doc.has_eos) (out += ' ') += kEos;
  return out;
}

ParseResult parse(std::string_view text, const GridSpec& grid) {
  try {
    return parse_or_throw(text, grid);
  } catch (Failure& f) {
    return std::move(f.value);
  }
}

Extraction extract_links(std::string_view text, const GridSpec& grid) {
  Extraction out;
  std::size_t pos = 0;
  std::size_t floor = 0;  // a phrase may not reach back before this offset
  while (pos < text.size()) {
    std::optional<Tag> tag = next_tag(text, pos);
    while (tag && tag->kind != TagKind::kBoxOpen &&
           tag->kind != TagKind::kImageOpen) {
      tag = next_tag(text, tag->end);
    }
    if (!tag) break;
    if (tag->kind == TagKind::kImageOpen) {
      const std::size_t close = text.find(kImageClose, tag->end);
      if (close == std::string_view::npos) break;
      pos = floor = close + kImageClose.size();
      continue;
    }

    GroupResult group = parse_box_group(text, tag->begin, tag->end, grid);
    if (group.failure) {
      out.failed = true;
      pos = floor = std::max(group.resume, tag->end);
      continue;
    }

    ExtractedLink link;
    link.position = tag->begin;
    link.boxes = std::move(group.pairs);
    std::size_t back = tag->begin;
    while (back > floor && is_space(text[back - 1])) --back;
    const std::string_view before = text.substr(floor, back - floor);
    if (before.ends_with(kPhraseClose)) {
      const std::size_t close = floor + before.size() - kPhraseClose.size();
      const std::size_t open = before.rfind(kPhraseOpen);
      if (open != std::string_view::npos) {
        const std::size_t inner_begin = floor + open + kPhraseOpen.size();
        const std::string_view inner =
            trim(text.substr(inner_begin, close - inner_begin));
        if (!inner.empty() && !contains_markup_token(inner)) {
          link.phrase = std::string(inner);
        }
      }
    }
    out.links.push_back(std::move(link));
    pos = floor = group.resume;
  }
  return out;
}

}  // namespace grit::markup

#ifndef GRIT_MARKUP_H_
#define GRIT_MARKUP_H_

// Grounded-caption markup. A text span is bound to its boxes with a
// markdown-like hyperlink:
//
//   <p> text span </p><box><loc_a><loc_b><delim><loc_c><loc_d></box>
//
// Grammar (whitespace between markup tokens is tolerated on input):
//
//   seq   := "<s>"? image? "<grounding>"? (text | link)* "</s>"?
//   image := "<image>" opaque "</image>"
//   link  := "<p>" text "</p>" "<box>" pair ("<delim>" pair)* "</box>"
//   pair  := loc loc
//   loc   := "<loc_" k ">"        k decimal, k < P*P
//
// There is no escaping. Captions containing anything shaped like a markup
// token (`<name>` or `</name>`) cannot be serialized.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "grit/locgrid.h"

namespace grit::markup {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kImageOpen = "<image>";
inline constexpr std::string_view kImageClose = "</image>";
inline constexpr std::string_view kGrounding = "<grounding>";
inline constexpr std::string_view kPhraseOpen = "<p>";
inline constexpr std::string_view kPhraseClose = "</p>";
inline constexpr std::string_view kBoxOpen = "<box>";
inline constexpr std::string_view kBoxClose = "</box>";
inline constexpr std::string_view kDelim = "<delim>";

// Character range [start, end) of the caption covered by a link.
struct TextSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;

  friend bool operator==(const TextSpan&, const TextSpan&) = default;
};

struct GroundLink {
  TextSpan span;
  std::vector<TokenBoxPair> boxes;  // non-empty, joined by <delim> when > 1

  friend bool operator==(const GroundLink&, const GroundLink&) = default;
};

// Plain caption plus the links grounding its spans. The sequence envelope is
// modelled token by token so every grammatical string has a faithful value.
struct GroundedCaption {
  std::string caption;
  std::vector<GroundLink> links;  // ordered by span.start, non-overlapping
  bool has_bos = false;
  bool has_image_slot = false;
  std::string image_payload;  // opaque; empty for a bare image slot
  bool has_grounding_marker = false;
  bool has_eos = false;

  friend bool operator==(const GroundedCaption&,
                         const GroundedCaption&) = default;
};

enum class DecodeError {
  kUnclosedBox,
  kOddLocationCount,
  kEmptyBoxGroup,
  kUnknownToken,
  kSpanWithoutBox,
  kBoxWithoutSpan,
  kTokenOutOfRange,
  kPairOrder,
  kUnclosedSpan,
  kEmptySpan,
  kUnclosedImage,
  kUnexpectedToken,
};

std::string_view reason_name(DecodeError reason);

struct DecodeFailure {
  std::size_t position = 0;  // byte offset of the first offending token
  DecodeError reason = DecodeError::kUnexpectedToken;
  std::string detail;
};

using ParseResult = std::variant<GroundedCaption, DecodeFailure>;

// Canonical rendering. Throws std::invalid_argument when the value cannot be
// written so that it parses back to itself: token index >= P*P, badly ordered
// pairs, links out of order or overlapping, span text that does not match the
// caption or has surrounding whitespace, markup-shaped text in the caption,
// or caption edge whitespace that would be absorbed by adjacent framing.
std::string serialize(const GroundedCaption& doc, const GridSpec& grid);

// Strict parse; the first grammar violation is reported.
ParseResult parse(std::string_view text, const GridSpec& grid);

// A box group recovered from free-form model output. phrase holds the text of
// the <p>...</p> directly preceding the group, if there is one.
struct ExtractedLink {
  std::optional<std::string> phrase;
  std::vector<TokenBoxPair> boxes;
  std::size_t position = 0;  // offset of the <box> token

  friend bool operator==(const ExtractedLink&, const ExtractedLink&) = default;
};

struct Extraction {
  std::vector<ExtractedLink> links;
  bool failed = false;  // at least one malformed <box> group was skipped
};

// Lenient scan used on model responses: every well-formed <box> group is
// returned in order of appearance, malformed groups are skipped and flagged.
Extraction extract_links(std::string_view text, const GridSpec& grid);

std::string loc_text(LocToken token);
// "<box><loc_a><loc_b>[<delim>...]</box>". Throws on an empty list.
std::string box_group(std::span<const TokenBoxPair> pairs);

// True if the text contains a substring shaped like a markup token.
bool contains_markup_token(std::string_view text);

}  // namespace grit::markup

#endif  // GRIT_MARKUP_H_

#include "grit/prompts.h"

#include <fstream>
#include <random>
#include <stdexcept>

#include "grit/markup.h"

namespace grit::prompts {
namespace {

constexpr std::string_view kDefaultPatterns[] = {
    "What is <p> it </p><box>{loc_tl}{loc_br}</box>? It is {expression}.",
    "What is <p> this </p><box>{loc_tl}{loc_br}</box>? This is {expression}.",
    "Describe <p> this object </p><box>{loc_tl}{loc_br}</box>. This object is {expression}.",
    "<p> It </p><box>{loc_tl}{loc_br}</box> is {expression}.",
    "<p> This </p><box>{loc_tl}{loc_br}</box> is {expression}.",
    "<p> The object </p><box>{loc_tl}{loc_br}</box> is {expression}.",
};

constexpr std::string_view kExpressionInstruction = "<p> {expression} </p>";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

void check_text(std::string_view text, const char* what) {
  if (markup::contains_markup_token(text)) {
    throw std::invalid_argument(std::string(what) + " contains a markup token");
  }
}

}  // namespace

PromptTemplate PromptTemplate::compile(std::string pattern) {
  PromptTemplate t;
  t.pattern_ = std::move(pattern);
  const std::string& p = t.pattern_;
  int expressions = 0, tls = 0, brs = 0;
  std::size_t pos = 0;
  std::string literal;
  while (pos < p.size()) {
    if (p[pos] != '{') {
      literal += p[pos++];
      continue;
    }
    const std::size_t close = p.find('}', pos);
    if (close == std::string::npos) {
      throw std::invalid_argument("unterminated placeholder in template: " + p);
    }
    const std::string name = p.substr(pos + 1, close - pos - 1);
    Piece piece;
    if (name == "expression") {
      piece.kind = Piece::kExpression;
      ++expressions;
    } else if (name == "loc_tl") {
      piece.kind = Piece::kLocTl;
      ++tls;
    } else if (name == "loc_br") {
      piece.kind = Piece::kLocBr;
      ++brs;
      if (tls == 0) throw std::invalid_argument("{loc_br} before {loc_tl} in: " + p);
    } else {
      throw std::invalid_argument("unknown placeholder {" + name + "} in: " + p);
    }
    if (piece.kind != Piece::kExpression && expressions > 0) {
      throw std::invalid_argument("{expression} must follow the location placeholders in: " + p);
    }
    if (!literal.empty()) t.pieces_.push_back({Piece::kLiteral, std::move(literal)});
    literal.clear();
    t.pieces_.push_back(std::move(piece));
    pos = close + 1;
  }
  if (!literal.empty()) t.pieces_.push_back({Piece::kLiteral, std::move(literal)});

  if (expressions != 1) {
    throw std::invalid_argument("template needs exactly one {expression}: " + p);
  }
  if (tls != brs || tls > 1) {
    throw std::invalid_argument("template needs one {loc_tl} and one {loc_br}: " + p);
  }
  t.direction_ = tls == 1 ? Direction::kBoxesToExpression : Direction::kExpressionToBoxes;
  return t;
}

InstructionPair PromptTemplate::instantiate(std::string_view expression,
                                            std::span<const TokenBoxPair> boxes) const {
  if (boxes.empty()) throw std::invalid_argument("instantiate needs at least one box");
  InstructionPair out;
  std::string* sink = &out.prompt;
  for (const Piece& piece : pieces_) {
    switch (piece.kind) {
      case Piece::kLiteral:
        *sink += piece.text;
        break;
      case Piece::kLocTl:
        *sink += markup::loc_text(boxes.front().tl);
        break;
      case Piece::kLocBr:
        *sink += markup::loc_text(boxes.front().br);
        for (std::size_t i = 1; i < boxes.size(); ++i) {
          (*sink += markup::kDelim) += markup::loc_text(boxes[i].tl);
          *sink += markup::loc_text(boxes[i].br);
        }
        break;
      case Piece::kExpression:
        if (direction_ == Direction::kBoxesToExpression) {
          while (!out.prompt.empty() && is_space(out.prompt.back())) out.prompt.pop_back();
          sink = &out.target;
        }
        *sink += expression;
        break;
    }
  }
  if (direction_ == Direction::kExpressionToBoxes) out.target = markup::box_group(boxes);
  return out;
}

std::vector<PromptTemplate> default_templates() {
  std::vector<PromptTemplate> out;
  for (std::string_view p : kDefaultPatterns) out.push_back(PromptTemplate::compile(std::string(p)));
  return out;
}

std::vector<PromptTemplate> load_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read templates " + path.string());
  std::vector<PromptTemplate> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    out.push_back(PromptTemplate::compile(std::string(body)));
  }
  if (out.empty()) throw std::runtime_error("no templates in " + path.string());
  return out;
}

std::string phrase_grounding_prompt(std::string_view caption, std::size_t start,
                                    std::size_t end) {
  if (start >= end || end > caption.size()) {
    throw std::invalid_argument("phrase span outside caption");
  }
  const std::string_view prefix = caption.substr(0, start);
  const std::string_view phrase = trim(caption.substr(start, end - start));
  if (phrase.empty()) throw std::invalid_argument("phrase is blank");
  check_text(prefix, "caption");
  check_text(phrase, "phrase");
  std::string out(kPreamble);
  out += prefix;
  ((out += markup::kPhraseOpen) += ' ') += phrase;
  (out += ' ') += markup::kPhraseClose;
  return out;
}

std::string rec_prompt(std::string_view expression) {
  if (trim(expression).empty()) throw std::invalid_argument("expression is empty");
  check_text(expression, "expression");
  std::string out(kPreamble);
  ((out += markup::kPhraseOpen) += ' ') += expression;
  (out += ' ') += markup::kPhraseClose;
  return out;
}

std::string reg_prompt(const TokenBoxPair& pair) {
  std::string out(kPreamble);
  out += "<p> It </p>";
  out += markup::box_group(std::span<const TokenBoxPair>(&pair, 1));
  out += " is";
  return out;
}

std::string reg_few_shot_prompt(std::span<const RegDemo> demos,
                                const TokenBoxPair& query) {
  std::string out;
  for (const RegDemo& demo : demos) {
    if (trim(demo.expression).empty()) throw std::invalid_argument("demonstration without expression");
    check_text(demo.expression, "demonstration");
    ((out += reg_prompt(demo.pair)) += ' ') += demo.expression;
    (out += ' ') += markup::kEos;
    out += ' ';
  }
  out += reg_prompt(query);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<InstructionPair> instruction_examples(
    const pipeline::GritRecord& record, std::span<const PromptTemplate> templates,
    std::uint64_t seed, const GridSpec& grid) {
  if (templates.empty()) throw std::invalid_argument("no instruction templates");
  std::vector<const PromptTemplate*> to_boxes, to_expression;
  for (const PromptTemplate& t : templates) {
    (t.direction() == Direction::kExpressionToBoxes ? to_boxes : to_expression).push_back(&t);
  }
  const PromptTemplate fallback =
      PromptTemplate::compile(std::string(kExpressionInstruction));
  if (to_boxes.empty()) to_boxes.push_back(&fallback);

  // mt19937_64 output is fully specified, unlike the standard distributions.
  std::mt19937_64 rng(seed ^ fnv1a64(record.image_id));
  std::vector<InstructionPair> out;
  for (const pipeline::GritRef& ref : record.refs) {
    std::vector<TokenBoxPair> pairs;
    for (const PixelBox& box : ref.boxes) pairs.push_back(quantize_box(box, record.dims, grid));
    const std::string& expression = ref.expression.text;

    out.push_back(to_boxes[rng() % to_boxes.size()]->instantiate(expression, pairs));
    if (!to_expression.empty()) {
      out.push_back(to_expression[rng() % to_expression.size()]->instantiate(expression, pairs));
    }
  }
  return out;
}

}  // namespace grit::prompts

#ifndef GRIT_PROMPTS_H_
#define GRIT_PROMPTS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grit/locgrid.h"
#include "grit/pipeline.h"

namespace grit::prompts {

// Image slot and grounding marker that open every evaluation prompt.
inline constexpr std::string_view kPreamble = "<s> <image> </image> <grounding> ";

struct InstructionPair {
  std::string prompt;
  std::string target;

  friend bool operator==(const InstructionPair&, const InstructionPair&) = default;
};

enum class Direction {
  kExpressionToBoxes,  // prompt names the expression, target is the box group
  kBoxesToExpression,  // prompt shows the box, target is the expression
};

// Instruction pattern with {expression}, {loc_tl} and {loc_br} placeholders.
// Patterns with location placeholders ask for an expression and must place
// {expression} after them; patterns without ask for boxes.
class PromptTemplate {
 public:
  // Throws std::invalid_argument on unknown or misplaced placeholders.
  static PromptTemplate compile(std::string pattern);

  const std::string& pattern() const { return pattern_; }
  Direction direction() const { return direction_; }

  // For boxes->expression the prompt stops before {expression}. Extra boxes
  // are appended after {loc_br} joined by <delim>.
  InstructionPair instantiate(std::string_view expression,
                              std::span<const TokenBoxPair> boxes) const;

 private:
  struct Piece {
    enum Kind { kLiteral, kExpression, kLocTl, kLocBr } kind;
    std::string text;
  };

  std::string pattern_;
  Direction direction_ = Direction::kExpressionToBoxes;
  std::vector<Piece> pieces_;
};

// The six referring templates shipped by default.
std::vector<PromptTemplate> default_templates();

// One pattern per line; blank lines and lines starting with '#' are skipped.
std::vector<PromptTemplate> load_templates(const std::filesystem::path& path);

// Caption words before the phrase followed by the wrapped phrase. Throws
// std::invalid_argument when the span is out of bounds or blank, or the
// text contains markup tokens.
std::string phrase_grounding_prompt(std::string_view caption, std::size_t start,
                                    std::size_t end);

// Throws std::invalid_argument on an empty expression or markup tokens.
std::string rec_prompt(std::string_view expression);

std::string reg_prompt(const TokenBoxPair& pair);

struct RegDemo {
  TokenBoxPair pair;
  std::string expression;
};

// Each demonstration is a complete sequence closed by </s>; the query prompt
// follows the last one.
std::string reg_few_shot_prompt(std::span<const RegDemo> demos,
                                const TokenBoxPair& query);

// Two pairs per ref: expression->boxes and boxes->expression. Templates are
// drawn per ref from a generator seeded by `seed` and the image id, so the
// result does not depend on record order.
std::vector<InstructionPair> instruction_examples(
    const pipeline::GritRecord& record, std::span<const PromptTemplate> templates,
    std::uint64_t seed, const GridSpec& grid = {});

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace grit::prompts

#endif  // GRIT_PROMPTS_H_

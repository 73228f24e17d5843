#ifndef GRIT_IO_H_
#define GRIT_IO_H_

// JSON Lines plumbing and the wire schemas:
//
//   parses.jsonl     {"image_id", "width", "height", "caption",
//                     "tokens": [{"text", "head", "dep"}],
//                     "chunks": [{"start", "end", "head"}]}
//   detections.jsonl {"image_id",
//                     "detections": [{"chunk_index", "box": [x1,y1,x2,y2],
//                                     "score"}]}
//   grit.jsonl       {"image_id", "width", "height", "caption",
//                     "refs": [{"start_tok", "end_tok", "text",
//                               "boxes": [[x1,y1,x2,y2], ...]}],
//                     "grounded_text"}
//   gold.jsonl       {"id", "phrase", "width", "height",
//                     "gold_boxes": [[x1,y1,x2,y2], ...]}
//   pred.jsonl       {"id", "output"}

#include <cstddef>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "grit/geometry.h"
#include "grit/markup.h"
#include "grit/metrics.h"
#include "grit/pipeline.h"

namespace grit::io {

using Json = nlohmann::ordered_json;

// A value that does not follow its schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A schema problem located in an input file.
class DataError : public std::runtime_error {
 public:
  DataError(std::string source, std::size_t line, const std::string& reason);

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

// Reads a file, or standard input for "-", one line at a time.
class LineReader {
 public:
  explicit LineReader(const std::string& path);

  bool next(std::string& line);
  std::size_t line_number() const { return line_number_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::unique_ptr<std::ifstream> file_;
  std::istream* in_;
  std::size_t line_number_ = 0;
};

// Writes to a file, or standard output for "-".
class LineWriter {
 public:
  explicit LineWriter(const std::string& path);

  void write_line(std::string_view line);
  void flush();

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

// Throws SchemaError unless the line holds a JSON object.
Json parse_object(std::string_view line);

PixelBox box_from_json(const Json& value);
Json box_to_json(const PixelBox& box);

pipeline::ParseDoc parse_doc_from_json(const Json& value);

struct DetectionsLine {
  std::string image_id;
  std::vector<ScoredBox> detections;
};
DetectionsLine detections_from_json(const Json& value);

// Fields of `source` not named by the grit schema (or consumed from the
// parses schema) are appended unchanged.
Json record_to_json(const pipeline::GritRecord& record,
                    const Json& source = Json::object());
pipeline::GritRecord record_from_json(const Json& value);

metrics::GoldItem gold_from_json(const Json& value, const ImageDims& fallback,
                                 bool dims_override);
metrics::Prediction prediction_from_json(const Json& value);

// Structured form of a grounded caption used by the parse/render commands.
Json caption_to_json(const markup::GroundedCaption& doc);
markup::GroundedCaption caption_from_json(const Json& value);

}  // namespace grit::io

#endif  // GRIT_IO_H_

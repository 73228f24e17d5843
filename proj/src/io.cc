#include "grit/io.h"

#include <cmath>
#include <iostream>
#include <set>

namespace grit::io {
namespace {

const Json& member(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string string_field(const Json& obj, const char* key) {
  const Json& v = member(obj, key);
  if (!v.is_string()) throw SchemaError(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

int int_field(const Json& obj, const char* key) {
  const Json& v = member(obj, key);
  if (!v.is_number_integer()) {
    throw SchemaError(std::string("field \"") + key + "\" must be an integer");
  }
  const auto value = v.get<long long>();
  if (value < INT32_MIN || value > INT32_MAX) {
    throw SchemaError(std::string("field \"") + key + "\" out of range");
  }
  return static_cast<int>(value);
}

double number_field(const Json& obj, const char* key) {
  const Json& v = member(obj, key);
  if (!v.is_number()) throw SchemaError(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

bool bool_field(const Json& obj, const char* key) {
  const Json& v = member(obj, key);
  if (!v.is_boolean()) throw SchemaError(std::string("field \"") + key + "\" must be a boolean");
  return v.get<bool>();
}

const Json& array_field(const Json& obj, const char* key) {
  const Json& v = member(obj, key);
  if (!v.is_array()) throw SchemaError(std::string("field \"") + key + "\" must be an array");
  return v;
}

void require_object(const Json& v, const char* what) {
  if (!v.is_object()) throw SchemaError(std::string(what) + " must be an object");
}

ImageDims dims_from(const Json& obj) {
  ImageDims dims{int_field(obj, "width"), int_field(obj, "height")};
  if (!dims.valid()) throw SchemaError("width and height must be positive");
  return dims;
}

std::vector<PixelBox> boxes_field(const Json& obj, const char* key) {
  std::vector<PixelBox> out;
  for (const Json& b : array_field(obj, key)) out.push_back(box_from_json(b));
  if (out.empty()) throw SchemaError(std::string("field \"") + key + "\" must not be empty");
  return out;
}

}  // namespace

DataError::DataError(std::string source, std::size_t line, const std::string& reason)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + reason),
      source_(std::move(source)),
      line_(line) {}

LineReader::LineReader(const std::string& path) : path_(path) {
  if (path == "-") {
    in_ = &std::cin;
  } else {
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) throw std::runtime_error("cannot open " + path + " for reading");
    in_ = file_.get();
  }
}

bool LineReader::next(std::string& line) {
  if (!std::getline(*in_, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++line_number_;
  return true;
}

LineWriter::LineWriter(const std::string& path) : path_(path) {
  if (path == "-") {
    out_ = &std::cout;
  } else {
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw std::runtime_error("cannot open " + path + " for writing");
    out_ = file_.get();
  }
}

void LineWriter::write_line(std::string_view line) {
  out_->write(line.data(), static_cast<std::streamsize>(line.size()));
  out_->put('\n');
  if (!*out_) throw std::runtime_error("write failed on " + path_);
}

void LineWriter::flush() { out_->flush(); }

Json parse_object(std::string_view line) {
  Json value = Json::parse(line.begin(), line.end(), nullptr, false);
  if (value.is_discarded()) throw SchemaError("not valid JSON");
  require_object(value, "line");
  return value;
}

PixelBox box_from_json(const Json& value) {
  if (!value.is_array() || value.size() != 4) {
    throw SchemaError("box must be an array [x1, y1, x2, y2]");
  }
  double c[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!value[i].is_number()) throw SchemaError("box coordinates must be numbers");
    c[i] = value[i].get<double>();
  }
  PixelBox box{c[0], c[1], c[2], c[3]};
  if (!box.valid()) {
    throw SchemaError("box must be finite, non-negative, with x1 <= x2 and y1 <= y2");
  }
  return box;
}

Json box_to_json(const PixelBox& box) {
  return Json::array({box.x1, box.y1, box.x2, box.y2});
}

pipeline::ParseDoc parse_doc_from_json(const Json& value) {
  require_object(value, "parse record");
  pipeline::ParseDoc doc;
  doc.image_id = string_field(value, "image_id");
  doc.dims = dims_from(value);
  doc.caption = string_field(value, "caption");
  for (const Json& t : array_field(value, "tokens")) {
    require_object(t, "token");
    doc.tokens.push_back({string_field(t, "text"), int_field(t, "head"),
                          string_field(t, "dep")});
  }
  for (const Json& c : array_field(value, "chunks")) {
    require_object(c, "chunk");
    doc.chunks.push_back(
        {int_field(c, "start"), int_field(c, "end"), int_field(c, "head")});
  }
  if (std::string problem = pipeline::validate(doc); !problem.empty()) {
    throw SchemaError(problem);
  }
  return doc;
}

DetectionsLine detections_from_json(const Json& value) {
  require_object(value, "detections record");
  DetectionsLine out;
  out.image_id = string_field(value, "image_id");
  for (const Json& d : array_field(value, "detections")) {
    require_object(d, "detection");
    ScoredBox det;
    det.chunk_index = int_field(d, "chunk_index");
    det.box = box_from_json(member(d, "box"));
    det.score = number_field(d, "score");
    if (!(det.score >= 0 && det.score <= 1)) throw SchemaError("score must be in [0, 1]");
    out.detections.push_back(det);
  }
  return out;
}

Json record_to_json(const pipeline::GritRecord& record, const Json& source) {
  Json out = Json::object();
  out["image_id"] = record.image_id;
  out["width"] = record.dims.width;
  out["height"] = record.dims.height;
  out["caption"] = record.caption;
  Json refs = Json::array();
  for (const pipeline::GritRef& ref : record.refs) {
    Json boxes = Json::array();
    for (const PixelBox& b : ref.boxes) boxes.push_back(box_to_json(b));
    refs.push_back(Json{{"start_tok", ref.expression.start},
                        {"end_tok", ref.expression.end},
                        {"text", ref.expression.text},
                        {"boxes", std::move(boxes)}});
  }
  out["refs"] = std::move(refs);
  out["grounded_text"] = record.grounded_text;

  static const std::set<std::string> kConsumed = {
      "image_id", "width", "height", "caption", "tokens",
      "chunks",   "refs",  "grounded_text"};
  if (source.is_object()) {
    for (const auto& [key, v] : source.items()) {
      if (!kConsumed.contains(key)) out[key] = v;
    }
  }
  return out;
}

pipeline::GritRecord record_from_json(const Json& value) {
  require_object(value, "grit record");
  pipeline::GritRecord record;
  record.image_id = string_field(value, "image_id");
  record.dims = dims_from(value);
  record.caption = string_field(value, "caption");
  for (const Json& r : array_field(value, "refs")) {
    require_object(r, "ref");
    pipeline::GritRef ref;
    ref.expression.start = int_field(r, "start_tok");
    ref.expression.end = int_field(r, "end_tok");
    ref.expression.source_chunk = -1;
    ref.expression.text = string_field(r, "text");
    if (ref.expression.start < 0 || ref.expression.start >= ref.expression.end) {
      throw SchemaError("ref token range must satisfy 0 <= start_tok < end_tok");
    }
    ref.boxes = boxes_field(r, "boxes");
    record.refs.push_back(std::move(ref));
  }
  record.grounded_text = string_field(value, "grounded_text");
  return record;
}

metrics::GoldItem gold_from_json(const Json& value, const ImageDims& fallback,
                                 bool dims_override) {
  require_object(value, "gold record");
  metrics::GoldItem item;
  item.id = string_field(value, "id");
  item.phrase = string_field(value, "phrase");
  item.gold_boxes = boxes_field(value, "gold_boxes");
  const bool has_dims = value.contains("width") || value.contains("height");
  item.dims = (has_dims && !dims_override) ? dims_from(value) : fallback;
  return item;
}

metrics::Prediction prediction_from_json(const Json& value) {
  require_object(value, "prediction record");
  return {string_field(value, "id"), string_field(value, "output")};
}

Json caption_to_json(const markup::GroundedCaption& doc) {
  Json links = Json::array();
  for (const markup::GroundLink& link : doc.links) {
    Json boxes = Json::array();
    for (const TokenBoxPair& p : link.boxes) {
      boxes.push_back(Json::array({p.tl.index, p.br.index}));
    }
    links.push_back(Json{{"start", link.span.start},
                         {"end", link.span.end},
                         {"text", link.span.text},
                         {"boxes", std::move(boxes)}});
  }
  Json out = Json::object();
  out["caption"] = doc.caption;
  out["links"] = std::move(links);
  out["bos"] = doc.has_bos;
  out["image"] = doc.has_image_slot ? Json(doc.image_payload) : Json(nullptr);
  out["grounding"] = doc.has_grounding_marker;
  out["eos"] = doc.has_eos;
  return out;
}

markup::GroundedCaption caption_from_json(const Json& value) {
  require_object(value, "grounded caption");
  markup::GroundedCaption doc;
  doc.caption = string_field(value, "caption");
  for (const Json& l : array_field(value, "links")) {
    require_object(l, "link");
    markup::GroundLink link;
    const int start = int_field(l, "start");
    const int end = int_field(l, "end");
    if (start < 0 || end < 0) throw SchemaError("link offsets must be non-negative");
    link.span = {static_cast<std::size_t>(start), static_cast<std::size_t>(end),
                 string_field(l, "text")};
    for (const Json& p : array_field(l, "boxes")) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
          !p[1].is_number_integer()) {
        throw SchemaError("link box must be a [tl, br] token pair");
      }
      link.boxes.push_back({LocToken{p[0].get<int>()}, LocToken{p[1].get<int>()}});
    }
    doc.links.push_back(std::move(link));
  }
  doc.has_bos = bool_field(value, "bos");
  const Json& image = member(value, "image");
  if (!image.is_null()) {
    if (!image.is_string()) throw SchemaError("field \"image\" must be a string or null");
    doc.has_image_slot = true;
    doc.image_payload = image.get<std::string>();
  }
  doc.has_grounding_marker = bool_field(value, "grounding");
  doc.has_eos = bool_field(value, "eos");
  return doc;
}

}  // namespace grit::io

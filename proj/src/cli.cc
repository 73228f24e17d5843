#include "grit/cli.h"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "grit/io.h"
#include "grit/markup.h"
#include "grit/metrics.h"
#include "grit/parallel.h"
#include "grit/pipeline.h"
#include "grit/prompts.h"

namespace grit::cli {
namespace {

// Configuration problems found after flag parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string in = "-";
  std::string out = "-";
  std::string rejects;
  std::string parses;
  std::string detections;
  std::string gold;
  std::string pred;
  std::string stoplist;
  std::string templates;
  std::string demos;
  std::string field;
  std::string mode = "instruct";
  std::vector<std::string> boxes;
  std::vector<std::string> tokens;
  std::string ks = "1,5,10";
  int bins = 32;
  int width = 224;
  int height = 224;
  double score_threshold = 0.65;
  double nms_threshold = 0.7;
  double iou_threshold = 0.5;
  bool threshold_first = false;
  bool dims_from_record = true;
  bool json = false;
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t batch = 4096;
};

void check_unit_interval(double v, const char* name) {
  if (!(v > 0 && v <= 1)) throw UsageError(fmt::format("{} must be in (0, 1]", name));
}

GridSpec grid_of(const Options& o) {
  if (o.bins < 1) throw UsageError("--bins must be at least 1");
  return GridSpec{o.bins};
}

ImageDims dims_of(const Options& o) {
  ImageDims dims{o.width, o.height};
  if (!dims.valid()) throw UsageError("--width and --height must be positive");
  return dims;
}

std::vector<double> split_numbers(const std::string& text, std::size_t expected,
                                  const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("{}: '{}' is not a number", what, item));
    }
  }
  if (expected != 0 && out.size() != expected) {
    throw UsageError(fmt::format("{} needs {} comma-separated values", what, expected));
  }
  return out;
}

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  for (double v : split_numbers(text, 0, "--k")) {
    if (v < 1 || v != static_cast<int>(v)) throw UsageError("--k values must be positive integers");
    ks.push_back(static_cast<int>(v));
  }
  if (ks.empty()) throw UsageError("--k needs at least one value");
  return ks;
}

// Writes a reject line; keeps counts for the summary.
class RejectSink {
 public:
  explicit RejectSink(const std::string& path, std::ostream& err)
      : err_(err) {
    if (!path.empty()) writer_.emplace(path);
  }

  void add(const std::string& source, std::size_t line, const std::string& reason,
           const std::string& raw) {
    ++count_;
    io::Json j = io::Json::object();
    j["source"] = source;
    j["line"] = line;
    j["reason"] = reason;
    j["raw"] = raw;
    if (writer_) {
      writer_->write_line(j.dump());
    } else {
      err_ << source << ":" << line << ": " << reason << "\n";
    }
  }

  void add_json(const io::Json& j) {
    ++count_;
    if (writer_) {
      writer_->write_line(j.dump());
    } else {
      err_ << j.value("source", "") << ":" << j.value("line", 0) << ": "
           << j.value("reason", "") << "\n";
    }
  }

  std::size_t count() const { return count_; }
  void flush() {
    if (writer_) writer_->flush();
  }

 private:
  std::ostream& err_;
  std::optional<io::LineWriter> writer_;
  std::size_t count_ = 0;
};

std::string default_rejects_path(const std::string& out) {
  if (out == "-") return "rejects.jsonl";
  const std::filesystem::path parent = std::filesystem::path(out).parent_path();
  return (parent / "rejects.jsonl").string();
}

int cmd_encode(const Options& o, std::ostream& out) {
  const GridSpec grid = grid_of(o);
  const ImageDims dims = dims_of(o);
  if (o.boxes.empty()) throw UsageError("encode needs --box x1,y1,x2,y2");
  for (const std::string& text : o.boxes) {
    const auto c = split_numbers(text, 4, "--box");
    const PixelBox box{c[0], c[1], c[2], c[3]};
    if (!box.valid()) throw UsageError("--box must satisfy 0 <= x1 <= x2 and 0 <= y1 <= y2");
    const TokenBoxPair pair = quantize_box(box, dims, grid);
    out << markup::loc_text(pair.tl) << markup::loc_text(pair.br) << "\n";
  }
  return kExitOk;
}

TokenBoxPair parse_token_pair(const std::string& text, const GridSpec& grid) {
  if (text.find('<') == std::string::npos) {
    const auto v = split_numbers(text, 2, "--tokens");
    return {LocToken{static_cast<int>(v[0])}, LocToken{static_cast<int>(v[1])}};
  }
  const std::string wrapped = text.find("<box>") == std::string::npos
                                  ? "<box>" + text + "</box>"
                                  : text;
  const markup::Extraction ex = markup::extract_links(wrapped, grid);
  if (ex.failed || ex.links.size() != 1 || ex.links[0].boxes.size() != 1) {
    throw UsageError("--tokens must name exactly one well-formed corner pair");
  }
  return ex.links[0].boxes[0];
}

int cmd_decode(const Options& o, std::ostream& out) {
  const GridSpec grid = grid_of(o);
  const ImageDims dims = dims_of(o);
  if (o.tokens.empty()) throw UsageError("decode needs --tokens '<loc_a><loc_b>'");
  for (const std::string& text : o.tokens) {
    const TokenBoxPair pair = parse_token_pair(text, grid);
    if (!well_ordered(pair, grid)) throw UsageError("--tokens: invalid corner pair");
    const PixelBox box = dequantize_box(pair, dims, grid);
    out << fmt::format("{},{},{},{}\n", box.x1, box.y1, box.x2, box.y2);
  }
  return kExitOk;
}

int cmd_parse(const Options& o, std::ostream& err) {
  const GridSpec grid = grid_of(o);
  io::LineReader reader(o.in);
  io::LineWriter writer(o.out);
  RejectSink rejects(o.rejects, err);
  std::string line;
  while (reader.next(line)) {
    std::string text = line;
    io::Json object;
    if (!o.field.empty()) {
      try {
        object = io::parse_object(line);
        const auto it = object.find(o.field);
        if (it == object.end() || !it->is_string()) {
          throw io::SchemaError("field \"" + o.field + "\" must be a string");
        }
        text = it->get<std::string>();
      } catch (const io::SchemaError& e) {
        rejects.add("input", reader.line_number(), e.what(), line);
        continue;
      }
    }
    const markup::ParseResult result = markup::parse(text, grid);
    if (const auto* failure = std::get_if<markup::DecodeFailure>(&result)) {
      rejects.add("input", reader.line_number(),
                  fmt::format("{} at {}: {}", markup::reason_name(failure->reason),
                              failure->position, failure->detail),
                  line);
      continue;
    }
    io::Json structured = io::caption_to_json(std::get<markup::GroundedCaption>(result));
    if (o.field.empty()) {
      writer.write_line(structured.dump());
    } else {
      object[o.field] = std::move(structured);
      writer.write_line(object.dump());
    }
  }
  writer.flush();
  rejects.flush();
  return rejects.count() == 0 ? kExitOk : kExitData;
}

int cmd_render(const Options& o, std::ostream& err) {
  const GridSpec grid = grid_of(o);
  io::LineReader reader(o.in);
  io::LineWriter writer(o.out);
  RejectSink rejects(o.rejects, err);
  std::string line;
  while (reader.next(line)) {
    try {
      io::Json object = io::parse_object(line);
      io::Json& structured = o.field.empty() ? object : object[o.field];
      const std::string text = markup::serialize(io::caption_from_json(structured), grid);
      if (o.field.empty()) {
        writer.write_line(text);
      } else {
        structured = text;
        writer.write_line(object.dump());
      }
    } catch (const io::SchemaError& e) {
      rejects.add("input", reader.line_number(), e.what(), line);
    } catch (const std::invalid_argument& e) {
      rejects.add("input", reader.line_number(), e.what(), line);
    }
  }
  writer.flush();
  rejects.flush();
  return rejects.count() == 0 ? kExitOk : kExitData;
}

struct BuildTask {
  std::size_t parse_line = 0;
  std::string parse_text;
  std::size_t det_line = 0;
  std::optional<std::string> det_text;
};

struct BuildResult {
  std::optional<std::string> record;
  std::optional<io::Json> reject;
  bool discarded = false;
};

io::Json reject_json(const char* source, std::size_t line, const std::string& reason,
                     const std::string& raw) {
  io::Json j = io::Json::object();
  j["source"] = source;
  j["line"] = line;
  j["reason"] = reason;
  j["raw"] = raw;
  return j;
}

BuildResult build_one(const BuildTask& task, const pipeline::Stoplist& stoplist,
                      const pipeline::BuildConfig& config) {
  BuildResult result;
  io::Json source;
  pipeline::ParseDoc doc;
  try {
    source = io::parse_object(task.parse_text);
    doc = io::parse_doc_from_json(source);
  } catch (const io::SchemaError& e) {
    result.reject = reject_json("parses", task.parse_line, e.what(), task.parse_text);
    return result;
  }
  if (!task.det_text) {
    result.reject = reject_json("parses", task.parse_line,
                                "no detections line for image " + doc.image_id,
                                task.parse_text);
    return result;
  }
  io::DetectionsLine dets;
  try {
    dets = io::detections_from_json(io::parse_object(*task.det_text));
  } catch (const io::SchemaError& e) {
    result.reject = reject_json("detections", task.det_line, e.what(), *task.det_text);
    return result;
  }
  if (dets.image_id != doc.image_id) {
    result.reject = reject_json(
        "detections", task.det_line,
        "image_id " + dets.image_id + " does not match parses image_id " + doc.image_id,
        *task.det_text);
    return result;
  }
  try {
    pipeline::BuildOutcome outcome =
        pipeline::build_record(doc, dets.detections, stoplist, config);
    if (auto* record = std::get_if<pipeline::GritRecord>(&outcome)) {
      result.record = io::record_to_json(*record, source).dump();
    } else {
      result.discarded = true;
    }
  } catch (const std::invalid_argument& e) {
    result.reject = reject_json("detections", task.det_line, e.what(), *task.det_text);
  }
  return result;
}

pipeline::Stoplist stoplist_of(const Options& o) {
  std::string path = o.stoplist;
  if (path.empty()) {
    if (const char* env = std::getenv("GRIT_STOPLIST")) path = env;
  }
  if (path.empty()) return {};
  return pipeline::load_stoplist(path);
}

int cmd_build(const Options& o, std::ostream& err) {
  pipeline::BuildConfig config;
  config.grid = grid_of(o);
  check_unit_interval(o.score_threshold, "--score-threshold");
  check_unit_interval(o.nms_threshold, "--nms-threshold");
  config.score_threshold = o.score_threshold;
  config.nms_threshold = o.nms_threshold;
  config.threshold_before_nms = o.threshold_first;
  if (o.parses.empty() || o.detections.empty()) {
    throw UsageError("build needs --parses and --detections");
  }
  if (o.batch == 0) throw UsageError("--batch must be positive");
  const pipeline::Stoplist stoplist = stoplist_of(o);

  io::LineReader parses(o.parses);
  io::LineReader detections(o.detections);
  io::LineWriter writer(o.out);
  RejectSink rejects(o.rejects.empty() ? default_rejects_path(o.out) : o.rejects, err);

  auto next_nonblank = [](io::LineReader& reader, std::string& line) {
    while (reader.next(line)) {
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };

  std::size_t written = 0, discarded = 0;
  std::vector<BuildTask> batch;
  batch.reserve(o.batch);
  bool more = true;
  while (more) {
    batch.clear();
    std::string line;
    while (batch.size() < o.batch && (more = next_nonblank(parses, line))) {
      BuildTask task;
      task.parse_line = parses.line_number();
      task.parse_text = std::move(line);
      std::string det;
      if (next_nonblank(detections, det)) {
        task.det_line = detections.line_number();
        task.det_text = std::move(det);
      }
      batch.push_back(std::move(task));
    }
    const std::vector<BuildResult> results = parallel_map(
        std::span<const BuildTask>(batch), o.workers,
        [&](const BuildTask& task) { return build_one(task, stoplist, config); });
    for (const BuildResult& r : results) {
      if (r.record) {
        writer.write_line(*r.record);
        ++written;
      } else if (r.reject) {
        rejects.add_json(*r.reject);
      } else if (r.discarded) {
        ++discarded;
      }
    }
  }
  std::string extra;
  while (next_nonblank(detections, extra)) {
    rejects.add("detections", detections.line_number(),
                "detections line without a parse record", extra);
  }
  writer.flush();
  rejects.flush();
  err << fmt::format("build: {} records written, {} discarded, {} rejected\n",
                     written, discarded, rejects.count());
  return rejects.count() == 0 ? kExitOk : kExitData;
}

int cmd_stats(const Options& o, std::ostream& out) {
  io::LineReader reader(o.in);
  pipeline::DatasetStats stats;
  std::string line;
  while (reader.next(line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      stats.add(io::record_from_json(io::parse_object(line)));
    } catch (const io::SchemaError& e) {
      throw io::DataError(reader.path(), reader.line_number(), e.what());
    }
  }
  if (o.json) {
    io::Json j = io::Json::object();
    j["images"] = stats.images;
    j["objects"] = stats.objects;
    j["text_spans"] = stats.text_spans;
    j["avg_expression_length"] = stats.avg_expression_length();
    out << j.dump() << "\n";
  } else {
    out << fmt::format("images={} objects={} text_spans={} avg_len={:.1f}\n",
                       stats.images, stats.objects, stats.text_spans,
                       stats.avg_expression_length());
  }
  return kExitOk;
}

io::Json report_json(const metrics::MetricsReport& report) {
  io::Json j = io::Json::object();
  j["n_items"] = report.n_items;
  j["n_decode_failures"] = report.n_decode_failures;
  io::Json recall = io::Json::object();
  for (const auto& [k, v] : report.recall_at) recall[fmt::format("R@{}", k)] = v;
  j["recall"] = std::move(recall);
  j["accuracy"] = report.accuracy ? io::Json(*report.accuracy) : io::Json(nullptr);
  return j;
}

int cmd_eval(const Options& o, bool rec, std::ostream& out) {
  metrics::EvalConfig config;
  config.grid = grid_of(o);
  if (!(o.iou_threshold > 0 && o.iou_threshold < 1)) throw UsageError("--iou must be in (0, 1)");
  config.iou_threshold = o.iou_threshold;
  config.ks = rec ? std::vector<int>{} : parse_ks(o.ks);
  config.workers = o.workers;
  if (o.gold.empty() || o.pred.empty()) throw UsageError("evaluation needs --gold and --pred");
  const metrics::MetricsReport report =
      metrics::score_run(o.gold, o.pred, config, dims_of(o), !o.dims_from_record);
  if (rec && !report.accuracy) {
    throw io::DataError(o.gold, 0, "accuracy needs exactly one gold box per item");
  }

  out << fmt::format("items={} decode_failures={}\n", report.n_items,
                     report.n_decode_failures);
  if (rec) {
    out << fmt::format("accuracy={:.3f}\n", *report.accuracy);
  } else {
    std::string line;
    for (const auto& [k, v] : report.recall_at) {
      if (!line.empty()) line += ' ';
      line += fmt::format("R@{}={:.3f}", k, v);
    }
    out << line << "\n";
  }
  out << report_json(report).dump() << "\n";
  return kExitOk;
}

template <class Fn>
int map_jsonl(const Options& o, std::ostream& err, Fn fn) {
  io::LineReader reader(o.in);
  io::LineWriter writer(o.out);
  RejectSink rejects(o.rejects, err);
  std::string line;
  while (reader.next(line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      for (const io::Json& j : fn(io::parse_object(line))) writer.write_line(j.dump());
    } catch (const io::SchemaError& e) {
      rejects.add("input", reader.line_number(), e.what(), line);
    } catch (const std::invalid_argument& e) {
      rejects.add("input", reader.line_number(), e.what(), line);
    } catch (const io::Json::exception& e) {
      rejects.add("input", reader.line_number(), e.what(), line);
    }
  }
  writer.flush();
  rejects.flush();
  return rejects.count() == 0 ? kExitOk : kExitData;
}

TokenBoxPair box_pair_from(const io::Json& j, const ImageDims& fallback,
                           const GridSpec& grid) {
  const PixelBox box = io::box_from_json(j.at("box"));
  ImageDims dims = fallback;
  if (j.contains("width") && j.contains("height")) {
    if (!j["width"].is_number_integer() || !j["height"].is_number_integer()) {
      throw io::SchemaError("width and height must be integers");
    }
    dims = {j["width"].get<int>(), j["height"].get<int>()};
    if (!dims.valid()) throw io::SchemaError("width and height must be positive");
  }
  return quantize_box(box, dims, grid);
}

int cmd_prompts(const Options& o, std::ostream& err) {
  const GridSpec grid = grid_of(o);
  const ImageDims fallback = dims_of(o);

  if (o.mode == "instruct") {
    const std::vector<prompts::PromptTemplate> templates =
        o.templates.empty() ? prompts::default_templates()
                            : prompts::load_templates(o.templates);
    return map_jsonl(o, err, [&](const io::Json& j) {
      const pipeline::GritRecord record = io::record_from_json(j);
      std::vector<io::Json> lines;
      for (const auto& pair : prompts::instruction_examples(record, templates, o.seed, grid)) {
        lines.push_back(io::Json{{"prompt", pair.prompt}, {"target", pair.target}});
      }
      return lines;
    });
  }
  if (o.mode == "grounding") {
    return map_jsonl(o, err, [&](const io::Json& j) {
      const pipeline::GritRecord record = io::record_from_json(j);
      const markup::ParseResult parsed = markup::parse(record.grounded_text, grid);
      if (const auto* f = std::get_if<markup::DecodeFailure>(&parsed)) {
        throw io::SchemaError(fmt::format("grounded_text: {} at {}",
                                          markup::reason_name(f->reason), f->position));
      }
      const auto& doc = std::get<markup::GroundedCaption>(parsed);
      std::vector<io::Json> lines;
      for (std::size_t i = 0; i < doc.links.size(); ++i) {
        const markup::TextSpan& span = doc.links[i].span;
        lines.push_back(io::Json{
            {"id", fmt::format("{}#{}", record.image_id, i)},
            {"phrase", span.text},
            {"prompt", prompts::phrase_grounding_prompt(doc.caption, span.start, span.end)}});
      }
      return lines;
    });
  }
  if (o.mode == "rec") {
    return map_jsonl(o, err, [&](const io::Json& j) {
      const metrics::GoldItem item = io::gold_from_json(j, fallback, false);
      return std::vector<io::Json>{
          io::Json{{"id", item.id}, {"prompt", prompts::rec_prompt(item.phrase)}}};
    });
  }
  if (o.mode == "reg") {
    std::vector<prompts::RegDemo> demos;
    if (!o.demos.empty()) {
      io::LineReader reader(o.demos);
      std::string line;
      while (reader.next(line)) {
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
          const io::Json j = io::parse_object(line);
          if (!j.contains("expression") || !j["expression"].is_string()) {
            throw io::SchemaError("field \"expression\" must be a string");
          }
          if (!j.contains("box")) throw io::SchemaError("missing field \"box\"");
          demos.push_back({box_pair_from(j, fallback, grid), j["expression"].get<std::string>()});
        } catch (const io::SchemaError& e) {
          throw io::DataError(reader.path(), reader.line_number(), e.what());
        }
      }
    }
    return map_jsonl(o, err, [&](const io::Json& j) {
      if (!j.contains("id") || !j["id"].is_string()) throw io::SchemaError("field \"id\" must be a string");
      if (!j.contains("box")) throw io::SchemaError("missing field \"box\"");
      const TokenBoxPair pair = box_pair_from(j, fallback, grid);
      return std::vector<io::Json>{io::Json{
          {"id", j["id"]},
          {"prompt", prompts::reg_few_shot_prompt(demos, pair)}}};
    });
  }
  throw UsageError("--mode must be one of instruct, grounding, rec, reg");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grounded image-text toolkit: location tokens, grounded markup, "
               "corpus construction and grounding evaluation"};
  app.name("grit");
  app.require_subcommand(1);
  Options o;

  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--bins", o.bins, "Grid bins per side (P)")->capture_default_str();
  };
  auto add_dims = [&](CLI::App* sub) {
    sub->add_option("--width", o.width, "Image width in pixels")->capture_default_str();
    sub->add_option("--height", o.height, "Image height in pixels")->capture_default_str();
  };

  CLI::App* encode = app.add_subcommand("encode", "Pixel box to location tokens");
  add_grid(encode);
  add_dims(encode);
  encode->add_option("--box", o.boxes, "x1,y1,x2,y2 (repeatable)")->required();

  CLI::App* decode = app.add_subcommand("decode", "Location tokens to pixel box");
  add_grid(decode);
  add_dims(decode);
  decode->add_option("--tokens", o.tokens, "'<loc_a><loc_b>' or 'a,b' (repeatable)")->required();

  CLI::App* parse = app.add_subcommand("parse", "Grounded markup to structured JSONL");
  add_grid(parse);
  parse->add_option("--in", o.in, "Markup lines, or JSONL with --field")->capture_default_str();
  parse->add_option("--out", o.out)->capture_default_str();
  parse->add_option("--field", o.field, "Read markup from this JSON field");
  parse->add_option("--rejects", o.rejects, "Write failures here instead of stderr");

  CLI::App* render = app.add_subcommand("render", "Structured JSONL to grounded markup");
  add_grid(render);
  render->add_option("--in", o.in)->capture_default_str();
  render->add_option("--out", o.out)->capture_default_str();
  render->add_option("--field", o.field, "Structured caption lives in this JSON field");
  render->add_option("--rejects", o.rejects);

  CLI::App* build = app.add_subcommand("build", "Parses + detections to grit.jsonl");
  add_grid(build);
  build->add_option("--parses", o.parses)->required();
  build->add_option("--detections", o.detections)->required();
  build->add_option("--out", o.out)->capture_default_str();
  build->add_option("--rejects", o.rejects, "Default: rejects.jsonl next to --out");
  build->add_option("--stoplist", o.stoplist, "Abstract head nouns to drop (env GRIT_STOPLIST)");
  build->add_option("--score-threshold", o.score_threshold, "Keep boxes scoring above this")
      ->capture_default_str();
  build->add_option("--nms-threshold", o.nms_threshold)->capture_default_str();
  build->add_flag("--threshold-first", o.threshold_first, "Apply the score cut before NMS");
  build->add_option("--workers", o.workers)->capture_default_str();
  build->add_option("--batch", o.batch, "Records held in memory at once")->capture_default_str();

  CLI::App* stats = app.add_subcommand("stats", "Dataset statistics of grit.jsonl");
  stats->add_option("--in", o.in)->capture_default_str();
  stats->add_flag("--json", o.json, "Print a JSON object");

  CLI::App* eval_grounding = app.add_subcommand("eval-grounding", "Phrase grounding recall@k");
  CLI::App* eval_rec = app.add_subcommand("eval-rec", "Referring expression accuracy");
  for (CLI::App* sub : {eval_grounding, eval_rec}) {
    add_grid(sub);
    add_dims(sub);
    sub->add_option("--gold", o.gold)->required();
    sub->add_option("--pred", o.pred)->required();
    sub->add_option("--iou", o.iou_threshold, "Match when IoU is above this")->capture_default_str();
    sub->add_flag("--dims-from-record,!--no-dims-from-record", o.dims_from_record,
                  "Dequantize at each gold item's width/height");
    sub->add_option("--workers", o.workers)->capture_default_str();
  }
  eval_grounding->add_option("--k", o.ks, "Comma-separated ranks")->capture_default_str();

  CLI::App* prompt = app.add_subcommand("prompts", "Evaluation prompts and instruction pairs");
  add_grid(prompt);
  add_dims(prompt);
  prompt->add_option("--mode", o.mode, "instruct | grounding | rec | reg")->capture_default_str();
  prompt->add_option("--in", o.in)->capture_default_str();
  prompt->add_option("--out", o.out)->capture_default_str();
  prompt->add_option("--templates", o.templates, "Instruction templates file");
  prompt->add_option("--seed", o.seed)->capture_default_str();
  prompt->add_option("--demos", o.demos, "Few-shot demonstrations for reg");
  prompt->add_option("--rejects", o.rejects);

  std::vector<std::string> argv_storage{"grit"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (o.workers < 1) throw UsageError("--workers must be at least 1");
    if (*encode) return cmd_encode(o, out);
    if (*decode) return cmd_decode(o, out);
    if (*parse) return cmd_parse(o, err);
    if (*render) return cmd_render(o, err);
    if (*build) return cmd_build(o, err);
    if (*stats) return cmd_stats(o, out);
    if (*eval_grounding) return cmd_eval(o, false, out);
    if (*eval_rec) return cmd_eval(o, true, out);
    if (*prompt) return cmd_prompts(o, err);
  } catch (const UsageError& e) {
    err << "grit: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io::DataError& e) {
    err << "grit: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "grit: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace grit::cli

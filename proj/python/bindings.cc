#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cctype>
#include <iostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "grit/cli.h"
#include "grit/geometry.h"
#include "grit/io.h"
#include "grit/locgrid.h"
#include "grit/markup.h"
#include "grit/metrics.h"
#include "grit/pipeline.h"
#include "grit/prompts.h"

namespace py = pybind11;

namespace grit {
namespace {

using Box = std::tuple<double, double, double, double>;
using Pair = std::tuple<int, int>;

struct MarkupDecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

PixelBox to_box(const Box& b) {
  PixelBox box{std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)};
  if (!box.valid()) throw py::value_error("box must satisfy 0 <= x1 <= x2 and 0 <= y1 <= y2");
  return box;
}

Box from_box(const PixelBox& b) { return {b.x1, b.y1, b.x2, b.y2}; }

ImageDims to_dims(int width, int height) {
  ImageDims dims{width, height};
  if (!dims.valid()) throw py::value_error("width and height must be positive");
  return dims;
}

// Python containers cross the boundary through the JSON wire schemas.
io::Json to_json(const py::handle& obj) {
  const py::object dumps = py::module_::import("json").attr("dumps");
  return io::Json::parse(dumps(obj).cast<std::string>());
}

py::object from_json(const io::Json& j) {
  const py::object loads = py::module_::import("json").attr("loads");
  return loads(j.dump());
}

py::object parse_markup(const std::string& text, int bins) {
  const markup::ParseResult result = markup::parse(text, GridSpec{bins});
  if (const auto* f = std::get_if<markup::DecodeFailure>(&result)) {
    throw MarkupDecodeError(std::string(markup::reason_name(f->reason)) + " at " +
                            std::to_string(f->position) + ": " + f->detail);
  }
  return from_json(io::caption_to_json(std::get<markup::GroundedCaption>(result)));
}

std::string serialize_markup(const py::dict& doc, int bins) {
  try {
    return markup::serialize(io::caption_from_json(to_json(doc)), GridSpec{bins});
  } catch (const io::SchemaError& e) {
    throw py::value_error(e.what());
  }
}

py::tuple extract(const std::string& text, int bins) {
  const markup::Extraction ex = markup::extract_links(text, GridSpec{bins});
  py::list links;
  for (const markup::ExtractedLink& link : ex.links) {
    std::vector<Pair> pairs;
    for (const TokenBoxPair& p : link.boxes) pairs.emplace_back(p.tl.index, p.br.index);
    py::object phrase = link.phrase ? py::object(py::str(*link.phrase)) : py::object(py::none());
    links.append(py::make_tuple(phrase, pairs));
  }
  return py::make_tuple(links, ex.failed);
}

struct EvalInputs {
  std::vector<metrics::GoldItem> items;
  std::vector<metrics::Prediction> preds;
};

EvalInputs eval_inputs(const py::list& gold, const py::list& preds) {
  EvalInputs in;
  try {
    for (const py::handle& g : gold) {
      in.items.push_back(io::gold_from_json(to_json(g), ImageDims{}, false));
    }
    for (const py::handle& p : preds) in.preds.push_back(io::prediction_from_json(to_json(p)));
  } catch (const io::SchemaError& e) {
    throw py::value_error(e.what());
  }
  return in;
}

py::object build(const py::dict& parse_doc, const py::list& detections,
                 const std::vector<std::string>& stoplist, double score_threshold,
                 double nms_threshold, int bins) {
  pipeline::ParseDoc doc;
  io::DetectionsLine dets;
  io::Json source = to_json(parse_doc);
  try {
    doc = io::parse_doc_from_json(source);
    io::Json wrapped = io::Json::object();
    wrapped["image_id"] = doc.image_id;
    wrapped["detections"] = to_json(detections);
    dets = io::detections_from_json(wrapped);
  } catch (const io::SchemaError& e) {
    throw py::value_error(e.what());
  }
  pipeline::Stoplist stop;
  for (const std::string& s : stoplist) {
    std::string lower = s;
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    stop.insert(lower);
  }
  pipeline::BuildConfig config;
  config.score_threshold = score_threshold;
  config.nms_threshold = nms_threshold;
  config.grid = GridSpec{bins};
  pipeline::BuildOutcome outcome = pipeline::build_record(doc, dets.detections, stop, config);
  if (auto* record = std::get_if<pipeline::GritRecord>(&outcome)) {
    return from_json(io::record_to_json(*record, source));
  }
  return py::none();
}

pipeline::GritRecord record_of(const py::handle& obj) {
  try {
    return io::record_from_json(to_json(obj));
  } catch (const io::SchemaError& e) {
    throw py::value_error(e.what());
  }
}

}  // namespace
}  // namespace grit

PYBIND11_MODULE(_core, m) {
  using namespace grit;
  m.doc() = "Location tokens, grounded markup, GrIT construction and grounding metrics";

  py::register_exception<MarkupDecodeError>(m, "DecodeError", PyExc_ValueError);

  m.def("iou", [](const Box& a, const Box& b) { return iou(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"));
  m.def(
      "nms",
      [](const std::vector<Box>& boxes, const std::vector<double>& scores,
         double threshold) {
        if (boxes.size() != scores.size()) throw py::value_error("boxes and scores differ in length");
        std::vector<ScoredBox> candidates;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
          candidates.push_back({to_box(boxes[i]), scores[i], 0});
        }
        return nms(candidates, threshold);
      },
      py::arg("boxes"), py::arg("scores"), py::arg("threshold") = 0.7);

  m.def("token_of_cell",
        [](int row, int col, int bins) { return token_of_cell(row, col, GridSpec{bins}).index; },
        py::arg("row"), py::arg("col"), py::arg("bins") = 32);
  m.def(
      "cell_of_token",
      [](int token, int bins) {
        const GridCell c = cell_of_token(LocToken{token}, GridSpec{bins});
        return std::make_tuple(c.row, c.col);
      },
      py::arg("token"), py::arg("bins") = 32);
  m.def(
      "quantize_box",
      [](const Box& box, int width, int height, int bins) {
        const TokenBoxPair p = quantize_box(to_box(box), to_dims(width, height), GridSpec{bins});
        return Pair{p.tl.index, p.br.index};
      },
      py::arg("box"), py::arg("width") = 224, py::arg("height") = 224, py::arg("bins") = 32);
  m.def(
      "dequantize_box",
      [](const Pair& pair, int width, int height, int bins) {
        const TokenBoxPair p{LocToken{std::get<0>(pair)}, LocToken{std::get<1>(pair)}};
        return from_box(dequantize_box(p, to_dims(width, height), GridSpec{bins}));
      },
      py::arg("pair"), py::arg("width") = 224, py::arg("height") = 224, py::arg("bins") = 32);

  m.def("parse", &parse_markup, py::arg("text"), py::arg("bins") = 32,
        "Strict parse of grounded markup into a dict; raises DecodeError.");
  m.def("serialize", &serialize_markup, py::arg("doc"), py::arg("bins") = 32);
  m.def("extract_links", &extract, py::arg("text"), py::arg("bins") = 32,
        "Lenient scan: ([(phrase or None, [(tl, br), ...]), ...], failed).");

  m.def(
      "recall_at_k",
      [](const py::list& gold, const py::list& preds, int k, double iou_threshold, int bins) {
        EvalInputs in = eval_inputs(gold, preds);
        return metrics::recall_at_k(in.items, in.preds, k, iou_threshold, GridSpec{bins});
      },
      py::arg("gold"), py::arg("preds"), py::arg("k") = 1, py::arg("iou_threshold") = 0.5,
      py::arg("bins") = 32);
  m.def(
      "rec_accuracy",
      [](const py::list& gold, const py::list& preds, double iou_threshold, int bins) {
        EvalInputs in = eval_inputs(gold, preds);
        return metrics::rec_accuracy(in.items, in.preds, iou_threshold, GridSpec{bins});
      },
      py::arg("gold"), py::arg("preds"), py::arg("iou_threshold") = 0.5, py::arg("bins") = 32);

  m.def("build_record", &build, py::arg("parse_doc"), py::arg("detections"),
        py::arg("stoplist") = std::vector<std::string>{}, py::arg("score_threshold") = 0.65,
        py::arg("nms_threshold") = 0.7, py::arg("bins") = 32,
        "Returns a grit.jsonl record dict, or None when the pair is discarded.");
  m.def(
      "compute_stats",
      [](const py::list& records) {
        pipeline::DatasetStats stats;
        for (const py::handle& r : records) stats.add(record_of(r));
        py::dict out;
        out["images"] = stats.images;
        out["objects"] = stats.objects;
        out["text_spans"] = stats.text_spans;
        out["avg_expression_length"] = stats.avg_expression_length();
        return out;
      },
      py::arg("records"));

  m.def("phrase_grounding_prompt", &prompts::phrase_grounding_prompt, py::arg("caption"),
        py::arg("start"), py::arg("end"));
  m.def("rec_prompt", &prompts::rec_prompt, py::arg("expression"));
  m.def(
      "reg_prompt",
      [](const Pair& pair) {
        return prompts::reg_prompt({LocToken{std::get<0>(pair)}, LocToken{std::get<1>(pair)}});
      },
      py::arg("pair"));
  m.def(
      "instruction_examples",
      [](const py::dict& record, std::uint64_t seed, int bins) {
        const auto templates = prompts::default_templates();
        std::vector<std::tuple<std::string, std::string>> out;
        for (const auto& p :
             prompts::instruction_examples(record_of(record), templates, seed, GridSpec{bins})) {
          out.emplace_back(p.prompt, p.target);
        }
        return out;
      },
      py::arg("record"), py::arg("seed") = 0, py::arg("bins") = 32);

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::run(args, std::cout, std::cerr);
      },
      py::arg("args"), "Runs the grit command line with the given arguments.");
}

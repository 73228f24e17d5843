#include "grit/metrics.h"

#include <fstream>
#include <random>

#include "generators.h"
#include "grit/io.h"
#include "grit/markup.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace grit::metrics {
namespace {

const GridSpec kGrid{32};

// Output whose single box dequantizes exactly to `box` at 224x224: corners on
// cell centers (3.5 + 7k).
std::string box_output(int tl, int br) {
  const std::vector<TokenBoxPair> one{{LocToken{tl}, LocToken{br}}};
  return "<p> x </p>" + markup::box_group(one);
}

GoldItem item(std::string id, PixelBox gold) { return {std::move(id), "x", {gold}, {224, 224}}; }

TEST(DecodeOutput, Basics) {
  const DecodedOutput ok = decode_output(box_output(0, 1023), {224, 224}, kGrid);
  EXPECT_FALSE(ok.failed);
  EXPECT_EQ(ok.boxes, (std::vector<PixelBox>{{3.5, 3.5, 220.5, 220.5}}));
  EXPECT_TRUE(decode_output("<box><loc_1></box>", {224, 224}, kGrid).failed);
  EXPECT_TRUE(decode_output("", {224, 224}, kGrid).failed);
  EXPECT_TRUE(decode_output("no boxes here", {224, 224}, kGrid).failed);
}

TEST(RecallAtK, SingleHitAtIou06) {
  // Predicted box (3.5,3.5)-(73.5,73.5): 70x70. Gold shares x1,y1 and is
  // wider so that IoU = 4900 / area(gold) = 0.6.
  const double side = 70.0;
  const PixelBox gold{3.5, 3.5, 3.5 + side / 0.6, 73.5};
  const std::vector<GoldItem> items{item("a", gold)};
  const std::vector<Prediction> preds{{"a", box_output(0, token_of_cell(10, 10, kGrid).index)}};
  EXPECT_NEAR(iou(decode_output(preds[0].output, {224, 224}, kGrid).boxes[0], gold), 0.6, 1e-12);
  EXPECT_EQ(recall_at_k(items, preds, 1, 0.5, kGrid), 1.0);
}

TEST(RecallAtK, MalformedIsMiss) {
  const std::vector<GoldItem> items{item("a", {0, 0, 224, 224})};
  const std::vector<Prediction> preds{{"a", "<box><loc_1></box>"}};
  EXPECT_EQ(recall_at_k(items, preds, 1, 0.5, kGrid), 0.0);
  EXPECT_EQ(recall_at_k(items, preds, 10, 0.5, kGrid), 0.0);
}

TEST(RecallAtK, UsesAllAvailableWhenFewerThanK) {
  const PixelBox gold{3.5, 3.5, 220.5, 220.5};
  const std::vector<GoldItem> items{item("a", gold)};
  const std::vector<Prediction> preds{{"a", box_output(0, 0) + " " + box_output(0, 1023)}};
  EXPECT_EQ(recall_at_k(items, preds, 1, 0.5, kGrid), 0.0);
  EXPECT_EQ(recall_at_k(items, preds, 5, 0.5, kGrid), 1.0);
}

TEST(RecallAtK, IdMismatchesAreErrors) {
  const std::vector<GoldItem> items{item("a", {0, 0, 10, 10}), item("b", {0, 0, 10, 10})};
  const std::vector<Prediction> missing{{"a", ""}};
  EXPECT_THROW(recall_at_k(items, missing, 1, 0.5, kGrid), std::invalid_argument);
  const std::vector<Prediction> dup{{"a", ""}, {"a", ""}, {"b", ""}};
  EXPECT_THROW(recall_at_k(items, dup, 1, 0.5, kGrid), std::invalid_argument);
  const std::vector<Prediction> extra{{"a", ""}, {"b", ""}, {"c", ""}};
  EXPECT_THROW(recall_at_k(items, extra, 1, 0.5, kGrid), std::invalid_argument);
}

// Gold (3.5,3.5)-(G,73.5) against the 70x70 predicted box: IoU = 70 / (G - 3.5).
PixelBox gold_for_iou(double target) { return {3.5, 3.5, 3.5 + 70.0 / target, 73.5}; }

TEST(RecAccuracy, StrictThreshold) {
  const std::string pred = box_output(0, token_of_cell(10, 10, kGrid).index);
  const std::vector<GoldItem> hit{item("a", gold_for_iou(0.51))};
  EXPECT_EQ(rec_accuracy(hit, std::vector<Prediction>{{"a", pred}}, 0.5, kGrid), 1.0);
  const std::vector<GoldItem> miss{item("a", gold_for_iou(0.49))};
  EXPECT_EQ(rec_accuracy(miss, std::vector<Prediction>{{"a", pred}}, 0.5, kGrid), 0.0);
  // Exactly at the threshold is a miss. 0.5 is exact here: G = 143.5.
  const std::vector<GoldItem> edge{item("a", gold_for_iou(0.5))};
  EXPECT_EQ(iou(decode_output(pred, {224, 224}, kGrid).boxes[0], edge[0].gold_boxes[0]), 0.5);
  EXPECT_EQ(rec_accuracy(edge, std::vector<Prediction>{{"a", pred}}, 0.5, kGrid), 0.0);
}

TEST(RecAccuracy, OnlyFirstBoxCounts) {
  const PixelBox gold = gold_for_iou(0.49);
  const std::string first = box_output(0, token_of_cell(10, 10, kGrid).index);
  const TokenBoxPair q = quantize_box(gold, {224, 224}, kGrid);
  const std::string second = box_output(q.tl.index, q.br.index);
  const DecodedOutput d = decode_output(first + " " + second, {224, 224}, kGrid);
  ASSERT_EQ(d.boxes.size(), 2u);
  EXPECT_LT(iou(d.boxes[0], gold), 0.5);
  EXPECT_GT(iou(d.boxes[1], gold), 0.9);
  const std::vector<GoldItem> items{item("a", gold)};
  const std::vector<Prediction> preds{{"a", first + " " + second}};
  EXPECT_EQ(rec_accuracy(items, preds, 0.5, kGrid), 0.0);
  // A rank-blind check over both boxes would have called it a hit.
  EXPECT_EQ(recall_at_k(items, preds, 5, 0.5, kGrid), 1.0);
}

TEST(RecAccuracy, EmptyOutputAndMultiGold) {
  const std::vector<GoldItem> items{item("a", {0, 0, 224, 224})};
  EXPECT_EQ(rec_accuracy(items, std::vector<Prediction>{{"a", ""}}, 0.5, kGrid), 0.0);
  const std::vector<GoldItem> two{{"a", "x", {{0, 0, 1, 1}, {2, 2, 3, 3}}, {224, 224}}};
  EXPECT_THROW(rec_accuracy(two, std::vector<Prediction>{{"a", ""}}, 0.5, kGrid), std::invalid_argument);
}

struct Fixture {
  std::vector<gen::EvalCase> cases;
  std::vector<GoldItem> items;
  std::vector<Prediction> preds;
};

Fixture random_fixture(std::mt19937_64& rng, int n, int max_gold) {
  Fixture f;
  for (int i = 0; i < n; ++i) {
    gen::EvalCase c = gen::random_eval_case(rng, i, kGrid, max_gold);
    GoldItem g{c.id, "phrase", {}, {c.width, c.height}};
    for (const auto& b : c.gold) g.gold_boxes.push_back({b[0], b[1], b[2], b[3]});
    f.items.push_back(g);
    f.preds.push_back({c.id, c.output});
    f.cases.push_back(std::move(c));
  }
  // Predictions arrive in a different order than gold.
  std::shuffle(f.preds.begin(), f.preds.end(), rng);
  return f;
}

double oracle_recall(const Fixture& f, int k, double thr) {
  int hits = 0;
  for (const auto& c : f.cases) {
    hits += oracle::any_box_hit(c.written, c.malformed, c.gold, k, c.width, c.height, 32, thr);
  }
  return static_cast<double>(hits) / static_cast<double>(f.cases.size());
}

TEST(MetricsProperties, MatchOracleAndMonotone) {
  std::mt19937_64 rng(43);
  for (int run = 0; run < 20; ++run) {
    const Fixture f = random_fixture(rng, 50, 3);
    double prev = 0;
    for (int k : {1, 5, 10}) {
      const double r = recall_at_k(f.items, f.preds, k, 0.5, kGrid);
      EXPECT_DOUBLE_EQ(r, oracle_recall(f, k, 0.5)) << "k=" << k;
      EXPECT_GE(r, prev);
      prev = r;
    }
    // Raising the IoU threshold never helps.
    EXPECT_LE(recall_at_k(f.items, f.preds, 5, 0.7, kGrid), recall_at_k(f.items, f.preds, 5, 0.5, kGrid));
  }
}

TEST(MetricsProperties, RecallAtOneEqualsAccuracyOnSingleGold) {
  std::mt19937_64 rng(47);
  const Fixture f = random_fixture(rng, 200, 1);
  EXPECT_DOUBLE_EQ(rec_accuracy(f.items, f.preds, 0.5, kGrid), recall_at_k(f.items, f.preds, 1, 0.5, kGrid));
  EXPECT_DOUBLE_EQ(rec_accuracy(f.items, f.preds, 0.5, kGrid), oracle_recall(f, 1, 0.5));
}

TEST(MetricsProperties, DecodeFailingItemLowersScores) {
  std::mt19937_64 rng(53);
  Fixture f = random_fixture(rng, 40, 1);
  const MetricsReport before = score(f.items, f.preds, EvalConfig{});
  f.items.push_back(item("bad", {0, 0, 224, 224}));
  f.preds.push_back({"bad", "<box><loc_1></box>"});
  const MetricsReport after = score(f.items, f.preds, EvalConfig{});
  EXPECT_EQ(after.n_decode_failures, before.n_decode_failures + 1);
  EXPECT_EQ(after.n_items, before.n_items + 1);
  for (int k : {1, 5, 10}) {
    if (before.recall_at.at(k) > 0) {
      EXPECT_LT(after.recall_at.at(k), before.recall_at.at(k));
    } else {
      EXPECT_EQ(after.recall_at.at(k), 0.0);
    }
  }
  ASSERT_TRUE(after.accuracy.has_value());
  EXPECT_LE(*after.accuracy, *before.accuracy);
}

TEST(Score, ParallelMatchesSerial) {
  std::mt19937_64 rng(59);
  const Fixture f = random_fixture(rng, 300, 2);
  EvalConfig serial;
  EvalConfig parallel;
  parallel.workers = 4;
  const MetricsReport a = score(f.items, f.preds, serial);
  const MetricsReport b = score(f.items, f.preds, parallel);
  EXPECT_EQ(a.recall_at, b.recall_at);
  EXPECT_EQ(a.n_decode_failures, b.n_decode_failures);
  EXPECT_FALSE(a.accuracy.has_value());
}

TEST(ScoreRun, SelfMatchAndAllEmpty) {
  const std::string dir = testing::TempDir();
  const std::string gold = dir + "gold.jsonl", pred = dir + "pred.jsonl", empty = dir + "empty.jsonl";
  {
    std::ofstream g(gold), p(pred), e(empty);
    const PixelBox boxes[] = {{10, 10, 100, 200}, {0, 0, 224, 224}, {50, 60, 70, 80}};
    for (int i = 0; i < 3; ++i) {
      io::Json gj{{"id", std::to_string(i)}, {"phrase", "x"}, {"width", 224}, {"height", 224},
                  {"gold_boxes", io::Json::array({io::box_to_json(boxes[i])})}};
      g << gj.dump() << "\n";
      const TokenBoxPair q = quantize_box(boxes[i], {224, 224}, kGrid);
      const std::vector<TokenBoxPair> one{q};
      p << io::Json{{"id", std::to_string(i)}, {"output", "<p> x </p>" + markup::box_group(one)}}.dump()
        << "\n";
      e << io::Json{{"id", std::to_string(i)}, {"output", ""}}.dump() << "\n";
    }
  }
  const MetricsReport self = score_run(gold, pred, EvalConfig{}, {224, 224});
  EXPECT_EQ(self.n_items, 3u);
  EXPECT_EQ(self.n_decode_failures, 0u);
  for (const auto& [k, r] : self.recall_at) EXPECT_EQ(r, 1.0) << k;
  EXPECT_EQ(self.accuracy, 1.0);
  const MetricsReport none = score_run(gold, empty, EvalConfig{}, {224, 224});
  EXPECT_EQ(none.n_decode_failures, 3u);
  for (const auto& [k, r] : none.recall_at) EXPECT_EQ(r, 0.0) << k;
  EXPECT_EQ(none.accuracy, 0.0);
}

TEST(ScoreRun, SchemaAndIdErrors) {
  const std::string dir = testing::TempDir();
  const std::string gold = dir + "g2.jsonl", pred = dir + "p2.jsonl";
  {
    std::ofstream g(gold), p(pred);
    g << R"({"id":"a","phrase":"x","gold_boxes":[[0,0,1,1]]})" << "\n";
    p << R"({"id":"b","output":""})" << "\n";
  }
  EXPECT_THROW(score_run(gold, pred, EvalConfig{}, {224, 224}), io::DataError);
  {
    std::ofstream p(pred);
    p << R"({"id":"a"})" << "\n";
  }
  EXPECT_THROW(score_run(gold, pred, EvalConfig{}, {224, 224}), io::DataError);
}

}  // namespace
}  // namespace grit::metrics

import json
import os
import pathlib

import pytest

import gritkit

DATA = pathlib.Path(os.environ.get("GRIT_TESTDATA", pathlib.Path(__file__).parents[1] / "testdata"))

CAMPFIRE = ("<s> <image> </image> <grounding> <p> It </p><box><loc_44><loc_863></box> seats next to "
        "<p> a campfire </p><box><loc_4><loc_1007></box> </s>")


def first_record(name):
    with open(DATA / name) as f:
        return json.loads(f.readline())


def test_iou_and_nms():
    assert gritkit.iou((0, 0, 10, 10), (5, 0, 15, 10)) == pytest.approx(1 / 3)
    assert gritkit.nms([(0, 0, 10, 10), (1, 0, 11, 10), (50, 50, 60, 60)], [0.9, 0.8, 0.7], 0.5) == [0, 2]
    with pytest.raises(ValueError):
        gritkit.iou((5, 0, 1, 1), (0, 0, 1, 1))


def test_codec():
    assert gritkit.quantize_box((10, 10, 100, 200)) == (33, 910)
    assert gritkit.dequantize_box((0, 1023)) == (3.5, 3.5, 220.5, 220.5)
    assert gritkit.token_of_cell(1, 12) == 44
    assert gritkit.cell_of_token(863) == (26, 31)


def test_markup_round_trip():
    doc = gritkit.parse(CAMPFIRE)
    assert [link["boxes"] for link in doc["links"]] == [[[44, 863]], [[4, 1007]]]
    assert gritkit.serialize(doc) == CAMPFIRE
    with pytest.raises(gritkit.DecodeError):
        gritkit.parse("<p> a dog </p><box><loc_1></box>")
    links, failed = gritkit.extract_links("<p> a </p><box><loc_1><loc_2></box> <box><loc_3></box>")
    assert links == [("a", [(1, 2)])]
    assert failed


def test_build_record_dog_field():
    doc = first_record("dog_field_parses.jsonl")
    dets = first_record("dog_field_detections.jsonl")["detections"]
    rec = gritkit.build_record(doc, dets)
    assert [r["text"] for r in rec["refs"]] == ["a dog in a field of flowers"]
    assert rec["grounded_text"].endswith("<box><loc_161><loc_913></box>")
    assert rec["url"] == doc["url"]
    low = [dict(d, score=0.65) for d in dets]
    assert gritkit.build_record(doc, low) is None


def test_stats_and_prompts():
    with open(DATA / "stats_grit.jsonl") as f:
        records = [json.loads(line) for line in f if line.strip()]
    assert gritkit.compute_stats(records) == {
        "images": 2, "objects": 4, "text_spans": 3, "avg_expression_length": 4.0}
    pairs = gritkit.instruction_examples(records[0], seed=1)
    assert pairs[0] == ("<p> a dog in a field of flowers </p>", "<box><loc_161><loc_913></box>")
    assert gritkit.rec_prompt("dog") == "<s> <image> </image> <grounding> <p> dog </p>"


def test_recall():
    with open(DATA / "selfmatch_gold.jsonl") as f:
        gold = [json.loads(line) for line in f if line.strip()]
    with open(DATA / "selfmatch_pred.jsonl") as f:
        preds = [json.loads(line) for line in f if line.strip()]
    assert gritkit.recall_at_k(gold, preds, k=1) == 1.0
    broken = [dict(p, output="<box><loc_1></box>") if i == 0 else p for i, p in enumerate(preds)]
    assert gritkit.recall_at_k(gold, broken, k=10) == pytest.approx(0.8)

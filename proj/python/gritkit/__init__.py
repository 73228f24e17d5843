"""Python bindings for the grit grounded image-text toolkit."""

from ._core import (
    build_record,
    cell_of_token,
    compute_stats,
    dequantize_box,
    extract_links,
    instruction_examples,
    iou,
    nms,
    parse,
    phrase_grounding_prompt,
    quantize_box,
    rec_accuracy,
    rec_prompt,
    recall_at_k,
    reg_prompt,
    run,
    serialize,
    token_of_cell,
    DecodeError,
)

__all__ = [
    "build_record",
    "cell_of_token",
    "compute_stats",
    "dequantize_box",
    "extract_links",
    "instruction_examples",
    "iou",
    "nms",
    "parse",
    "phrase_grounding_prompt",
    "quantize_box",
    "rec_accuracy",
    "rec_prompt",
    "recall_at_k",
    "reg_prompt",
    "run",
    "serialize",
    "token_of_cell",
    "DecodeError",
]

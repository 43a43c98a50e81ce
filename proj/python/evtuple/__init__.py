"""Sequence-to-tuple event extraction."""

from ._core import (
    AlignmentError,
    CheckpointError,
    ConfigError,
    Error,
    EventTuple,
    FormatError,
    InvalidInputError,
    LabelSchema,
    Model,
    SchemaError,
    TrainingError,
    best_span,
    decode_tuples,
    encode_record,
    format_tuples,
    infer_tuple,
    parse_tuples,
    read_provenance,
    score,
    synthesize,
    tuple_loss,
)

__all__ = [
    "AlignmentError",
    "CheckpointError",
    "ConfigError",
    "Error",
    "EventTuple",
    "FormatError",
    "InvalidInputError",
    "LabelSchema",
    "Model",
    "SchemaError",
    "TrainingError",
    "best_span",
    "decode_tuples",
    "encode_record",
    "format_tuples",
    "infer_tuple",
    "parse_tuples",
    "read_provenance",
    "score",
    "synthesize",
    "tuple_loss",
]

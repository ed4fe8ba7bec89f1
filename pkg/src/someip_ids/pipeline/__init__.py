"""Packet-to-sequence data preparation."""
from .dataset import (
    PUBLISHED_CLASS_WEIGHTS,
    ContainerError,
    Dataset,
    EncoderMismatch,
    OracleDisagreement,
    ZeroCount,
    compute_class_weights,
    concat,
    load_dataset,
    load_weight_table,
    save_dataset,
    sequences_from_packets,
)
from .features import (
    DEFAULT_MAX_LEN,
    FEATURES,
    EmptyInput,
    Encoder,
    FeatureRecord,
    MixedAttackLabels,
    SequenceSample,
    SequenceTooLong,
    encode_record,
    extract_features,
    fit_encoder,
    group_sequences,
    pad_and_label,
)
from .oracle import MixedEvidence, conformance_oracle, violations

__all__ = [
    "DEFAULT_MAX_LEN",
    "FEATURES",
    "PUBLISHED_CLASS_WEIGHTS",
    "ContainerError",
    "Dataset",
    "EmptyInput",
    "Encoder",
    "EncoderMismatch",
    "FeatureRecord",
    "MixedAttackLabels",
    "MixedEvidence",
    "OracleDisagreement",
    "SequenceSample",
    "SequenceTooLong",
    "ZeroCount",
    "compute_class_weights",
    "concat",
    "conformance_oracle",
    "encode_record",
    "extract_features",
    "fit_encoder",
    "group_sequences",
    "load_dataset",
    "load_weight_table",
    "pad_and_label",
    "save_dataset",
    "sequences_from_packets",
    "violations",
]

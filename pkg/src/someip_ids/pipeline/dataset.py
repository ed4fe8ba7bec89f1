"""Labeled sequence datasets, class weighting and the on-disk container."""
from __future__ import annotations

import json
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..netsim.packet import NUM_CLASSES
from .features import (
    DEFAULT_MAX_LEN,
    Encoder,
    SequenceSample,
    extract_features,
    group_sequences,
    pad_and_label,
)
from .oracle import conformance_oracle

# Class weights used for the published model (Normal, Error on Event,
# Error on Error, Missing Response, Missing Request).
PUBLISHED_CLASS_WEIGHTS = {0: 0.16, 1: 6.68, 2: 10.35, 3: 4.33, 4: 4.86}

CONTAINER_MAGIC = b"SIDS"
CONTAINER_VERSION = 1


class ZeroCount(ValueError):
    pass


class EncoderMismatch(ValueError):
    pass


class OracleDisagreement(ValueError):
    def __init__(self, session_key, expected, found):
        super().__init__(
            f"session {session_key}: labels say {expected}, conformance check says {found}"
        )
        self.session_key = session_key
        self.expected = expected
        self.found = found


class ContainerError(ValueError):
    pass


def compute_class_weights(class_counts: dict[int, int], mode: str = "inverse_frequency",
                          table: dict[int, float] | None = None) -> dict[int, float]:
    """Per-class loss weights.

    ``inverse_frequency`` gives ``N / (K * n_c)`` over the K classes listed in
    ``class_counts``; ``explicit`` returns ``table`` after checking it covers
    every class present.
    """
    if mode == "explicit":
        if table is None:
            raise ValueError("explicit mode needs a weight table")
        missing = [c for c, n in class_counts.items() if n and c not in table]
        if missing:
            raise ValueError(f"weight table lacks classes {missing}")
        if any(w <= 0 for w in table.values()):
            raise ValueError("class weights must be positive")
        return {int(c): float(w) for c, w in table.items()}
    if mode != "inverse_frequency":
        raise ValueError(f"unknown class weight mode {mode!r}")
    zero = [c for c, n in class_counts.items() if n <= 0]
    if zero:
        raise ZeroCount(f"classes {zero} have no samples")
    total = sum(class_counts.values())
    k = len(class_counts)
    return {int(c): total / (k * n) for c, n in class_counts.items()}


def load_weight_table(path: str | Path) -> dict[int, float]:
    doc = json.loads(Path(path).read_text())
    return {int(k): float(v) for k, v in doc.items()}


@dataclass
class Dataset:
    samples: list[SequenceSample]
    encoder: Encoder
    max_len: int = DEFAULT_MAX_LEN
    class_weights: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.class_weights:
            present = {c: n for c, n in self.class_counts.items() if n}
            self.class_weights = compute_class_weights(present) if present else {}

    def __len__(self):
        return len(self.samples)

    @property
    def class_counts(self) -> dict[int, int]:
        counts = Counter(s.label for s in self.samples)
        return {c: counts.get(c, 0) for c in range(NUM_CLASSES)}

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    @property
    def true_lens(self) -> np.ndarray:
        return np.array([s.true_len for s in self.samples], dtype=np.int64)

    def matrices(self) -> np.ndarray:
        """All sample matrices stacked as (n, max_len, width) uint8."""
        if not self.samples:
            return np.zeros((0, self.max_len, self.encoder.total_width), dtype=np.uint8)
        return np.stack([s.matrix for s in self.samples])

    def subset(self, indices) -> Dataset:
        return Dataset([self.samples[i] for i in indices], self.encoder, self.max_len,
                       dict(self.class_weights))

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.encoder == other.encoder
            and self.max_len == other.max_len
            and self.class_weights == other.class_weights
            and self.samples == other.samples
        )


def sequences_from_packets(packets, encoder: Encoder, max_len: int = DEFAULT_MAX_LEN,
                           check_oracle: bool = True) -> list[SequenceSample]:
    """Group one capture's packets into padded, labeled sequences.

    With ``check_oracle`` every session's label is cross-checked against the
    conformance oracle and :class:`OracleDisagreement` raised on the first
    mismatch.
    """
    records = [extract_features(p, i) for i, p in enumerate(packets)]
    samples = []
    for key, group in group_sequences(records):
        sample = pad_and_label(group, encoder, max_len, session_key=key)
        if check_oracle:
            found = conformance_oracle(group)
            if found != sample.label:
                raise OracleDisagreement(key, sample.label, found)
        samples.append(sample)
    return samples


def concat(datasets, class_weights: dict[int, float] | None = None) -> Dataset:
    datasets = list(datasets)
    if not datasets:
        raise ValueError("nothing to concatenate")
    first = datasets[0]
    for ds in datasets[1:]:
        if ds.encoder != first.encoder:
            raise EncoderMismatch("datasets were encoded with different vocabularies")
        if ds.max_len != first.max_len:
            raise EncoderMismatch(f"max_len differs ({first.max_len} vs {ds.max_len})")
    samples = [s for ds in datasets for s in ds.samples]
    return Dataset(samples, first.encoder, first.max_len, dict(class_weights or {}))


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Binary container: magic, version, JSON header, labels, lengths, packed bits."""
    header = {
        "encoder": ds.encoder.to_json(),
        "max_len": ds.max_len,
        "width": ds.encoder.total_width,
        "count": len(ds),
        "class_weights": {str(c): w for c, w in sorted(ds.class_weights.items())},
        "session_keys": [list(s.session_key) for s in ds.samples],
    }
    blob = json.dumps(header, separators=(",", ":")).encode()
    labels = np.array([s.label for s in ds.samples], dtype=np.uint8)
    lens = np.array([s.true_len for s in ds.samples], dtype="<u2")
    bits = np.packbits(ds.matrices().reshape(-1))
    with open(path, "wb") as fh:
        fh.write(CONTAINER_MAGIC)
        fh.write(struct.pack("<HI", CONTAINER_VERSION, len(blob)))
        fh.write(blob)
        fh.write(labels.tobytes())
        fh.write(lens.tobytes())
        fh.write(bits.tobytes())


def load_dataset(path: str | Path) -> Dataset:
    raw = Path(path).read_bytes()
    if raw[:4] != CONTAINER_MAGIC:
        raise ContainerError(f"{path}: not a dataset container")
    version, hlen = struct.unpack_from("<HI", raw, 4)
    if version != CONTAINER_VERSION:
        raise ContainerError(f"{path}: unsupported container version {version}")
    off = 10
    try:
        header = json.loads(raw[off:off + hlen])
    except json.JSONDecodeError as exc:
        raise ContainerError(f"{path}: corrupt header ({exc})") from None
    off += hlen
    n, max_len, width = header["count"], header["max_len"], header["width"]
    nbits = n * max_len * width
    expected = off + n + 2 * n + (nbits + 7) // 8
    if len(raw) != expected:
        raise ContainerError(f"{path}: {len(raw)} bytes, expected {expected}")
    labels = np.frombuffer(raw, dtype=np.uint8, count=n, offset=off)
    off += n
    lens = np.frombuffer(raw, dtype="<u2", count=n, offset=off)
    off += 2 * n
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8, offset=off), count=nbits)
    mats = bits.reshape(n, max_len, width)
    encoder = Encoder.from_json(header["encoder"])
    samples = [
        SequenceSample(mats[i].copy(), int(lens[i]), int(labels[i]), tuple(header["session_keys"][i]))
        for i in range(n)
    ]
    weights = {int(c): float(w) for c, w in header["class_weights"].items()}
    return Dataset(samples, encoder, max_len, weights)

"""Per-packet categorical features, one-hot encoding and session grouping."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from ..codec import MessageType
from ..netsim.packet import SERVER_TYPES, LabeledPacket

FEATURES = (
    "service_id",
    "method_id",
    "client_id",
    "message_type",
    "session_id",
    "interface_version",
    "protocol_version",
    "return_code",
    "ip_source",
    "ip_destination",
    "protocol",
    "source_port",
    "destination_port",
    "mac_source",
    "mac_destination",
)
NUM_FEATURES = len(FEATURES)
DEFAULT_MAX_LEN = 60
APP_PROTOCOL = "SOME/IP"


class EmptyInput(ValueError):
    pass


class SequenceTooLong(ValueError):
    pass


class MixedAttackLabels(ValueError):
    pass


@dataclass(frozen=True)
class FeatureRecord:
    tokens: tuple[str, ...]
    label: int
    timestamp: int = 0
    index: int = 0  # capture record index, used as ordering tie-break

    def __getitem__(self, feature: str) -> str:
        return self.tokens[FEATURES.index(feature)]

    @property
    def message_type(self) -> MessageType:
        return MessageType(int(self.tokens[3], 16))

    @property
    def conversation(self) -> tuple:
        t = self.tokens
        a, b = sorted((t[8], t[9]))
        return (a, b, t[2], t[4])

    @property
    def session_key(self) -> tuple[str, str, int, int]:
        t = self.tokens
        if self.message_type in SERVER_TYPES:
            client_ip, server_ip = t[9], t[8]
        else:
            client_ip, server_ip = t[8], t[9]
        return (client_ip, server_ip, int(t[2], 16), int(t[4], 16))


def extract_features(pkt: LabeledPacket, index: int = 0) -> FeatureRecord:
    h = pkt.someip.header
    tokens = (
        f"0x{h.service_id:04x}",
        f"0x{h.method_id:04x}",
        f"0x{h.client_id:04x}",
        f"0x{int(h.message_type):02x}",
        f"0x{h.session_id:04x}",
        f"0x{h.interface_version:02x}",
        f"0x{h.protocol_version:02x}",
        f"0x{h.return_code:02x}",
        pkt.src_ip,
        pkt.dst_ip,
        APP_PROTOCOL,
        str(pkt.src_port),
        str(pkt.dst_port),
        pkt.src_mac,
        pkt.dst_mac,
    )
    return FeatureRecord(tokens, int(pkt.label or 0), pkt.timestamp, index)


@dataclass(frozen=True)
class Encoder:
    """Frozen per-feature vocabularies laid out side by side in column space."""

    vocab: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.vocab) != NUM_FEATURES:
            raise ValueError(f"expected {NUM_FEATURES} vocabularies, got {len(self.vocab)}")
        offsets, lookup, col = [], [], 0
        for tokens in self.vocab:
            offsets.append(col)
            lookup.append({tok: col + i for i, tok in enumerate(tokens)})
            col += len(tokens)
        object.__setattr__(self, "offsets", tuple(offsets))
        object.__setattr__(self, "_lookup", tuple(lookup))
        object.__setattr__(self, "total_width", col)

    def block(self, feature: str) -> slice:
        i = FEATURES.index(feature)
        return slice(self.offsets[i], self.offsets[i] + len(self.vocab[i]))

    def columns(self, record: FeatureRecord) -> list[int]:
        cols = []
        for table, tok in zip(self._lookup, record.tokens):
            col = table.get(tok)
            if col is not None:
                cols.append(col)
        return cols

    def decode_row(self, row) -> tuple[str | None, ...]:
        """Inverse of :func:`encode_record` (``None`` for all-zero blocks)."""
        out = []
        for off, tokens in zip(self.offsets, self.vocab):
            block = np.asarray(row[off:off + len(tokens)])
            out.append(tokens[int(block.argmax())] if block.any() else None)
        return tuple(out)

    def to_json(self) -> dict:
        return {"features": list(FEATURES), "vocab": [list(v) for v in self.vocab]}

    @classmethod
    def from_json(cls, doc: dict) -> Encoder:
        if tuple(doc["features"]) != FEATURES:
            raise ValueError("encoder feature list does not match this build")
        return cls(tuple(tuple(v) for v in doc["vocab"]))

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def __eq__(self, other):
        return isinstance(other, Encoder) and self.vocab == other.vocab

    def __hash__(self):
        return hash(self.vocab)


def fit_encoder(records) -> Encoder:
    seen = [set() for _ in FEATURES]
    n = 0
    for rec in records:
        n += 1
        for s, tok in zip(seen, rec.tokens):
            s.add(tok)
    if n == 0:
        raise EmptyInput("cannot fit an encoder on zero records")
    return Encoder(tuple(tuple(sorted(s)) for s in seen))


def encode_record(record: FeatureRecord, encoder: Encoder) -> np.ndarray:
    """Binary row with one 1 per feature block; unseen tokens leave their block zero."""
    row = np.zeros(encoder.total_width, dtype=np.uint8)
    row[encoder.columns(record)] = 1
    return row


def group_sequences(records) -> list[tuple[tuple, list[FeatureRecord]]]:
    """Partition records into client/server sessions, each ordered by (timestamp, index).

    Groups appear in order of their first record.
    """
    groups: dict[tuple, list[FeatureRecord]] = {}
    for rec in records:
        groups.setdefault(rec.conversation, []).append(rec)
    out = []
    for members in groups.values():
        members.sort(key=lambda r: (r.timestamp, r.index))
        out.append((members[0].session_key, members))
    return out


@dataclass(frozen=True)
class SequenceSample:
    matrix: np.ndarray  # (max_len, total_width) uint8
    true_len: int
    label: int
    session_key: tuple

    def __eq__(self, other):
        return (
            isinstance(other, SequenceSample)
            and self.true_len == other.true_len
            and self.label == other.label
            and tuple(self.session_key) == tuple(other.session_key)
            and self.matrix.shape == other.matrix.shape
            and bool(np.array_equal(self.matrix, other.matrix))
        )

    def replace(self, **changes) -> SequenceSample:
        return dataclasses.replace(self, **changes)


def sequence_label(labels) -> int:
    attacks = {int(x) for x in labels if x}
    if len(attacks) > 1:
        raise MixedAttackLabels(f"session carries several attack labels {sorted(attacks)}")
    return attacks.pop() if attacks else 0


def pad_and_label(group, encoder: Encoder, max_len: int = DEFAULT_MAX_LEN,
                  session_key: tuple | None = None) -> SequenceSample:
    group = list(group)
    if len(group) > max_len:
        raise SequenceTooLong(f"session has {len(group)} packets, max_len is {max_len}")
    matrix = np.zeros((max_len, encoder.total_width), dtype=np.uint8)
    for t, rec in enumerate(group):
        matrix[t, encoder.columns(rec)] = 1
    if session_key is None:
        session_key = group[0].session_key if group else ()
    return SequenceSample(matrix, len(group), sequence_label(r.label for r in group), tuple(session_key))

"""Versioned binary model checkpoints.

Layout (little-endian): magic ``SQNT``, u16 version, u8 flags, u32 input width,
u32 hidden1, u32 hidden2, u32 classes, 32-byte encoder digest, then the float64
arrays W1 U1 b1 W2 U2 b2 V c in C order.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .rnn import PARAM_NAMES, RnnModel

MAGIC = b"SQNT"
VERSION = 1
_HEAD = struct.Struct("<4sHBIIII32s")
FLAG_MASK_PADDING = 0x01


class CheckpointError(ValueError):
    pass


class BadMagic(CheckpointError):
    pass


class EncoderHashMismatch(CheckpointError):
    pass


def _shapes(width, h1, h2, k):
    return {
        "W1": (h1, h1), "U1": (h1, width), "b1": (h1,),
        "W2": (h2, h2), "U2": (h2, h1), "b2": (h2,),
        "V": (k, h2), "c": (k,),
    }


def save_model(model: RnnModel, path: str | Path) -> None:
    digest = bytes.fromhex(model.encoder_hash) if model.encoder_hash else bytes(32)
    flags = FLAG_MASK_PADDING if model.mask_padding else 0
    params = model.params()
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, flags, model.input_width, model.layer1.hidden,
                            model.layer2.hidden, model.n_classes, digest))
        for name in PARAM_NAMES:
            fh.write(np.ascontiguousarray(params[name], dtype="<f8").tobytes())


def load_model(path: str | Path, encoder_hash: str | None = None) -> RnnModel:
    """Read a checkpoint; when ``encoder_hash`` is given it must match the stored digest."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size or raw[:4] != MAGIC:
        raise BadMagic(f"{path}: not a model checkpoint")
    magic, version, flags, width, h1, h2, k, digest = _HEAD.unpack_from(raw)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    shapes = _shapes(width, h1, h2, k)
    need = _HEAD.size + 8 * sum(int(np.prod(s)) for s in shapes.values())
    if len(raw) != need:
        raise CheckpointError(f"{path}: {len(raw)} bytes, expected {need}")
    stored = digest.hex() if any(digest) else None
    if encoder_hash is not None and stored != encoder_hash:
        raise EncoderHashMismatch(f"{path}: trained on encoder {stored}, data uses {encoder_hash}")
    params, off = {}, _HEAD.size
    for name in PARAM_NAMES:
        count = int(np.prod(shapes[name]))
        params[name] = np.frombuffer(raw, "<f8", count, off).reshape(shapes[name]).astype(np.float64)
        off += 8 * count
    model = RnnModel.init(width, (h1, h2), k)
    model.set_params(params)
    model.mask_padding = bool(flags & FLAG_MASK_PADDING)
    model.encoder_hash = stored
    return model

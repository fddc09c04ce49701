"""Versioned binary checkpoint container.

Layout: magic "WHYM", u32 format version, u32 header length, JSON header
(model kind, hyperparameters, vocabulary digest, tensor manifest), then the
raw tensor bytes in manifest order. Loading validates the magic, version,
digest against the supplied vocabulary, exact file length, and dimension
consistency before any model is returned.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from .models import LanguageModel, Seq2SeqModel

MAGIC = b"WHYM"
FORMAT_VERSION = 1

KINDS = {"lm": LanguageModel, "seq2seq": Seq2SeqModel}


class CheckpointError(ValueError):
    """reason is one of: not_a_checkpoint, version_mismatch, digest_mismatch,
    truncated_file, corrupt_header, dimension_mismatch."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


def save_checkpoint(model, path, vocab_digest: str, extra: Optional[dict] = None):
    names = sorted(model.params)
    header = {
        "kind": model.kind,
        "hyper": model.hyper(),
        "vocab_digest": vocab_digest,
        "tensors": [{"name": n, "shape": list(model.params[n].shape),
                     "dtype": str(model.params[n].dtype)} for n in names],
    }
    if extra:
        header["extra"] = extra
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
        f.write(blob)
        for name in names:
            f.write(np.ascontiguousarray(model.params[name]).tobytes())


def load_checkpoint(path, vocab_digest: Optional[str] = None):
    """Load and validate; returns (model, header). Raises CheckpointError."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise CheckpointError("not_a_checkpoint", str(path))
    version, header_len = struct.unpack("<II", data[4:12])
    if version != FORMAT_VERSION:
        raise CheckpointError("version_mismatch",
                              f"file has v{version}, reader supports v{FORMAT_VERSION}")
    if len(data) < 12 + header_len:
        raise CheckpointError("truncated_file", "header cut short")
    try:
        header = json.loads(data[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError("corrupt_header", str(exc)) from exc
    if vocab_digest is not None and header.get("vocab_digest") != vocab_digest:
        raise CheckpointError("digest_mismatch",
                              "checkpoint was saved with a different vocabulary")
    kind = header.get("kind")
    if kind not in KINDS:
        raise CheckpointError("corrupt_header", f"unknown model kind {kind!r}")

    expected = 12 + header_len
    for spec in header["tensors"]:
        expected += int(np.prod(spec["shape"], dtype=np.int64)) * np.dtype(spec["dtype"]).itemsize
    if len(data) < expected:
        raise CheckpointError("truncated_file",
                              f"need {expected} bytes, file has {len(data)}")
    if len(data) > expected:
        raise CheckpointError("truncated_file",
                              f"trailing bytes: expected {expected}, file has {len(data)}")

    model = KINDS[kind].from_hyper(header["hyper"])
    offset = 12 + header_len
    for spec in header["tensors"]:
        name, shape = spec["name"], tuple(spec["shape"])
        dtype = np.dtype(spec["dtype"])
        if name not in model.params or model.params[name].shape != shape:
            raise CheckpointError("dimension_mismatch",
                                  f"tensor {name} has shape {shape}")
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        arr = np.frombuffer(data[offset:offset + nbytes], dtype=dtype).reshape(shape)
        model.params[name] = arr.copy()
        offset += nbytes
    return model, header

"""Self-describing binary archive and plain-text matrix interchange.

Archive byte layout (all integers little-endian):

    bytes 0..7   magic ``b"DRSPLIT1"``
    bytes 8..11  uint32 length L of the JSON header
    bytes 12..   L bytes UTF-8 JSON:
                 {"name": str, "seed": int, "meta": {...},
                  "blocks": [{"name": str, "rows": int, "cols": int}, ...]}
    then per block, in listed order: rows*cols float64 values, row-major.

The text format is one matrix per file: a ``rows cols`` header line followed
by one whitespace-separated row per line, 17 significant digits.
"""

from __future__ import annotations

import hashlib
import json
import struct
from typing import Dict, Tuple

import numpy as np

MAGIC = b"DRSPLIT1"


def archive_bytes(name: str, seed: int, blocks: Dict[str, np.ndarray], meta: dict) -> bytes:
    entries = []
    payload = bytearray()
    for key, M in blocks.items():
        M = np.atleast_2d(np.asarray(M, dtype=float))
        entries.append({"name": key, "rows": int(M.shape[0]), "cols": int(M.shape[1])})
        payload += np.ascontiguousarray(M, dtype="<f8").tobytes()
    header = json.dumps(
        {"name": name, "seed": int(seed), "meta": meta, "blocks": entries},
        sort_keys=True,
    ).encode("utf-8")
    return MAGIC + struct.pack("<I", len(header)) + header + bytes(payload)


def save_archive(path, name: str, seed: int, blocks: Dict[str, np.ndarray], meta: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(archive_bytes(name, seed, blocks, meta))


def load_archive(path) -> Tuple[str, int, dict, Dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise ValueError("bad magic: not a drsplit archive")
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12 : 12 + hlen].decode("utf-8"))
    blocks = {}
    offset = 12 + hlen
    for entry in header["blocks"]:
        count = entry["rows"] * entry["cols"]
        data = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        blocks[entry["name"]] = data.reshape(entry["rows"], entry["cols"]).copy()
        offset += count * 8
    return header["name"], header["seed"], header["meta"], blocks


def fingerprint(name: str, seed: int, blocks: Dict[str, np.ndarray], meta: dict) -> str:
    """sha256 hex digest of the archive encoding."""
    return hashlib.sha256(archive_bytes(name, seed, blocks, meta)).hexdigest()


def write_matrix_text(path, M: np.ndarray) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(format(x, ".17g") for x in row) + "\n")


def read_matrix_text(path) -> np.ndarray:
    with open(path, "r") as fh:
        rows, cols = (int(x) for x in fh.readline().split())
        M = np.loadtxt(fh, ndmin=2)
    if M.shape != (rows, cols):
        raise ValueError(f"text matrix header {(rows, cols)} != data shape {M.shape}")
    return M

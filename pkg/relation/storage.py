from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np
import pandas as pd
import ujson
from scipy import sparse

from geometry.grid import Grid
from relation.transition import RelationMeta, TransitionRelation
from utils.errors import ConfigurationError, GridMismatchError

MAGIC = b"CIFSREL1"
HEADER = struct.Struct("<8s32sII")
LENGTH = struct.Struct("<Q")


def _encode(mat: sparse.csr_matrix) -> bytes:
    counts = np.diff(mat.indptr).astype(np.uint32)
    indices = mat.indices.astype(np.int64)
    deltas = np.diff(indices, prepend=0)
    starts = mat.indptr[:-1][counts > 0]
    deltas[starts] = indices[starts]
    return zlib.compress(counts.tobytes() + deltas.astype(np.uint32).tobytes(), 9)


def _decode(blob: bytes, size: int) -> sparse.csr_matrix:
    raw = zlib.decompress(blob)
    counts = np.frombuffer(raw[:4 * size], dtype=np.uint32).astype(np.int64)
    deltas = np.frombuffer(raw[4 * size:], dtype=np.uint32).astype(np.int64)
    indptr = np.concatenate([[0], np.cumsum(counts)])
    running = np.cumsum(deltas)
    base = np.repeat(np.concatenate([[0], running])[indptr[:-1]], counts)
    indices = running - base
    data = np.ones(len(indices), dtype=np.int32)
    return sparse.csr_matrix((data, indices, indptr), shape=(size, size))


def save_relation(rel: TransitionRelation, path: str | Path) -> None:
    """
    Binary cache: header (magic, grid hash, map count, cell count), then per
    map a length-prefixed zlib block of row counts and row-delta-encoded
    targets, then a length-prefixed JSON block of build metadata.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, bytes.fromhex(rel.grid.hash), rel.n_maps, rel.grid.size))
        for mat in rel.per_map:
            blob = _encode(mat)
            fh.write(LENGTH.pack(len(blob)))
            fh.write(blob)
        meta = ujson.dumps(rel.meta.to_dict(), sort_keys=True).encode()
        fh.write(LENGTH.pack(len(meta)))
        fh.write(meta)


def load_relation(path: str | Path, grid: Grid) -> TransitionRelation:
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) != HEADER.size:
            raise ConfigurationError(f"{path}: truncated relation header")
        magic, digest, n_maps, size = HEADER.unpack(head)
        if magic != MAGIC:
            raise ConfigurationError(f"{path}: not a relation cache (magic {magic!r})")
        if digest.hex() != grid.hash or size != grid.size:
            raise GridMismatchError(f"{path}: cached relation belongs to another grid")
        per_map = []
        for _ in range(n_maps):
            (length,) = LENGTH.unpack(fh.read(LENGTH.size))
            per_map.append(_decode(fh.read(length), size))
        tail = fh.read(LENGTH.size)
        meta = RelationMeta(mode="cached", samples_per_cell=0, padding=None, max_padding=0.0,
                            clipped=0, rigorous=False, invertible=False)
        if len(tail) == LENGTH.size:
            (length,) = LENGTH.unpack(tail)
            fields = ujson.loads(fh.read(length).decode())
            fields["max_padding"] = float(fields["max_padding"])
            meta = RelationMeta(**fields)
    return TransitionRelation(grid, per_map, meta)


def export_relation_csv(rel: TransitionRelation, path: str | Path) -> None:
    """Debug export with one `src,map,dst` row per edge (map is 1-based)."""
    frames = []
    for letter in range(1, rel.n_maps + 1):
        src, dst = rel.edges(letter)
        frames.append(pd.DataFrame({"src": src, "map": letter, "dst": dst}))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.concat(frames, ignore_index=True).to_csv(path, index=False, lineterminator="\n")

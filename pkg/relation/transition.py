from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from config.settings import settings
from dynamics.ifs import IFSSpec
from geometry.cellset import CellSet
from geometry.grid import Grid
from utils.errors import ContractError, DomainError, GridMismatchError
from utils.logger import log

SAMPLED = "sampled"
PADDED = "padded"
CHUNK_CELLS = 512


@dataclass(frozen=True)
class RelationMeta:
    mode: str
    samples_per_cell: int
    padding: Optional[float]         # scalar override, None = Lipschitz default
    max_padding: float               # largest pad actually applied
    clipped: int                     # sampled images that left the domain
    rigorous: bool
    invertible: bool
    reversed: bool = False

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "samples_per_cell": self.samples_per_cell,
            "padding": self.padding,
            "max_padding": self.max_padding if np.isfinite(self.max_padding) else "inf",
            "clipped": self.clipped,
            "rigorous": self.rigorous,
            "invertible": self.invertible,
            "reversed": self.reversed,
        }


def _canonical_csr(mat, size: int) -> sparse.csr_matrix:
    mat = sparse.csr_matrix(mat, shape=(size, size), dtype=np.int32)
    mat.sum_duplicates()
    mat.data[:] = 1
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


class TransitionRelation:
    """
    Cell-level outer approximation of an IFS.

    per_map[n][c, c'] = 1 iff c' in F_n#(c); `union` is the cellwise union.
    Rows are sources, columns are targets.
    """

    def __init__(self, grid: Grid, per_map: Sequence[sparse.spmatrix], meta: RelationMeta):
        self.grid = grid
        self.per_map = tuple(_canonical_csr(m, grid.size) for m in per_map)
        union = self.per_map[0]
        for m in self.per_map[1:]:
            union = union + m
        self.union = _canonical_csr(union, grid.size)
        self._union_t = self.union.T.tocsr()
        self.meta = meta

    def __repr__(self) -> str:
        return f"TransitionRelation({self.grid!r}, maps={self.n_maps}, edges={self.union.nnz}, mode={self.meta.mode})"

    @property
    def n_maps(self) -> int:
        return len(self.per_map)

    def _check(self, S: CellSet) -> None:
        if S.grid.hash != self.grid.hash:
            raise GridMismatchError("cell set and relation are over different grids")

    # ── set operators ────────────────────────────────────────
    def image(self, S: CellSet) -> CellSet:
        """F#(S) = union over c in S of F#(c)"""
        self._check(S)
        return CellSet(self.grid, (self._union_t @ S.mask.astype(np.int32)) > 0)

    def image_by(self, letter: int, S: CellSet) -> CellSet:
        """Image under the single map number `letter` (1-based)."""
        self._check(S)
        return CellSet(self.grid, (self.per_map[letter - 1].T @ S.mask.astype(np.int32)) > 0)

    def preimage_all(self, S: CellSet) -> CellSet:
        """Cells every one of whose targets (under every map) lies in S."""
        self._check(S)
        outside = (~S.mask).astype(np.int32)
        return CellSet(self.grid, (self.union @ outside) == 0)

    def targets(self, cell: int) -> CellSet:
        row = self.union.indices[self.union.indptr[cell]:self.union.indptr[cell + 1]]
        return CellSet.from_indices(self.grid, row)

    def reverse(self) -> "TransitionRelation":
        """Edge c -> c' in the result iff c' -> c here, per map."""
        meta = replace(self.meta, reversed=not self.meta.reversed)
        return TransitionRelation(self.grid, [m.T for m in self.per_map], meta)

    # ── reachability ─────────────────────────────────────────
    def _reach(self, graph: sparse.csr_matrix, S: CellSet) -> CellSet:
        if S.is_empty:
            return S
        n = self.grid.size
        # super source n -> every seed, then one breadth-first sweep
        seeds = S.indices
        hub = sparse.csr_matrix((np.ones(len(seeds), dtype=np.int32), (np.full(len(seeds), n), seeds)), shape=(n + 1, n + 1))
        padded = sparse.block_diag((graph, sparse.csr_matrix((1, 1), dtype=np.int32)), format="csr") + hub
        order = csgraph.breadth_first_order(padded, n, directed=True, return_predecessors=False)
        mask = np.zeros(n, dtype=bool)
        mask[order[order < n]] = True
        return CellSet(self.grid, mask)

    def forward_closure(self, S: CellSet) -> CellSet:
        """S plus every cell reachable from S along union edges."""
        self._check(S)
        return self._reach(self.union, S)

    def backward_closure(self, S: CellSet) -> CellSet:
        """S plus every cell from which S is reachable."""
        self._check(S)
        return self._reach(self._union_t, S)

    def components(self) -> tuple[int, np.ndarray, np.ndarray]:
        """(count, label per cell, recurrent flag per component)"""
        return strongly_connected(self.union)

    # ── edges ────────────────────────────────────────────────
    def edges(self, letter: int) -> tuple[np.ndarray, np.ndarray]:
        coo = self.per_map[letter - 1].tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64)

    def same_edges(self, other: "TransitionRelation") -> bool:
        if other.grid.hash != self.grid.hash or other.n_maps != self.n_maps:
            return False
        return all((a != b).nnz == 0 for a, b in zip(self.per_map, other.per_map))


def strongly_connected(graph: sparse.csr_matrix) -> tuple[int, np.ndarray, np.ndarray]:
    """
    SCC labels plus recurrence: a component is recurrent when it has more
    than one cell or its single cell carries a self loop.
    """
    count, labels = csgraph.connected_components(graph, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=count)
    loops = np.zeros(count, dtype=bool)
    diag = graph.diagonal() > 0
    loops[labels[diag]] = True
    return count, labels, (sizes > 1) | loops


def edge_agreement(a: TransitionRelation, b: TransitionRelation) -> float:
    """Jaccard index of the per-map edge sets of two relations."""
    if a.grid.hash != b.grid.hash or a.n_maps != b.n_maps:
        raise GridMismatchError("edge_agreement needs relations over one grid with equal map counts")
    common = sum(int(x.multiply(y).nnz) for x, y in zip(a.per_map, b.per_map))
    total = sum(int(((x + y) > 0).nnz) for x, y in zip(a.per_map, b.per_map))
    return 1.0 if total == 0 else common / total


# ── construction ─────────────────────────────────────────────
def _build_chunk(grid: Grid, ifs: IFSSpec, cells: np.ndarray, mode: str, samples: int,
                 pads: list[Optional[np.ndarray]]):
    pts, owners = grid.sample_points(samples, cells)
    per_map, clipped, max_pad = [], 0, 0.0
    for n, f in enumerate(ifs.maps):
        try:
            img = f.eval(grid.space, pts)
        except DomainError as exc:
            where = f" at cell {int(owners[exc.index])}" if exc.index is not None else ""
            raise DomainError(f"map {n + 1} ({f.variant}){where}: {exc}", index=exc.index) from exc
        hit, outside = grid.locate(img)
        clipped += int(outside.sum())
        if mode == SAMPLED:
            per_map.append((owners, hit))
            continue

        if np.any(outside):
            # clip out-of-domain images onto the domain before padding
            img = grid.from_chart(np.clip(grid.to_chart(img), grid.lows, grid.highs))
        pad = pads[n][owners]
        finite = np.isfinite(pad)
        src, dst = [owners], [hit]
        if not finite.all():
            # unbounded stretch: the cell may reach anywhere
            blown = np.unique(owners[~finite])
            src.append(np.repeat(blown, grid.size))
            dst.append(np.tile(np.arange(grid.size), len(blown)))
            max_pad = float("inf")
        if finite.any():
            rows, near = grid.cells_near(img[finite], pad[finite])
            src.append(owners[finite][rows])
            dst.append(near)
            max_pad = max(max_pad, float(pad[finite].max()))
        per_map.append((np.concatenate(src), np.concatenate(dst)))
    return per_map, clipped, max_pad


def build_relation(grid: Grid, ifs: IFSSpec, mode: Optional[str] = None, padding: Optional[float] = None,
                   samples_per_cell: Optional[int] = None, threads: Optional[int] = None) -> TransitionRelation:
    """
    Outer approximation of F on the grid.

    sampled: F_n#(c) = cells of f_n(sample points of c)
    padded:  additionally every cell within pad + own radius of a sampled image,
             pad = (cell Lipschitz bound) * (cell radius) / samples unless `padding`
             is given; every point of a cell lies within radius / samples of a sample
    """
    mode = settings.RELATION_MODE if mode is None else mode
    samples = int(settings.SAMPLES_PER_CELL if samples_per_cell is None else samples_per_cell)
    threads = int(settings.THREADS if threads is None else threads)
    if mode not in (SAMPLED, PADDED):
        raise ContractError(f"unknown relation mode '{mode}'")
    if samples < 1:
        raise ContractError(f"samples_per_cell must be >= 1, got {samples}")
    if threads < 1:
        raise ContractError(f"threads must be >= 1, got {threads}")
    if padding is not None and padding < 0:
        raise ContractError(f"padding must be nonnegative, got {padding}")

    pads: list[Optional[np.ndarray]] = [None] * ifs.n_maps
    exact = [False] * ifs.n_maps
    if mode == PADDED:
        for n, f in enumerate(ifs.maps):
            if padding is not None:
                pads[n] = np.full(grid.size, float(padding))
            else:
                bound, exact[n] = f.lipschitz_bound(grid)
                pads[n] = bound * grid.radii / samples

    chunks = [np.arange(lo, min(lo + CHUNK_CELLS, grid.size)) for lo in range(0, grid.size, CHUNK_CELLS)]
    log.info(f"[Relation] building {mode} relation: {ifs.label or 'ifs'} on {grid!r}, "
             f"{samples} samples/axis, {len(chunks)} chunks, {threads} thread(s)")

    if threads == 1:
        results = [_build_chunk(grid, ifs, c, mode, samples, pads) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _build_chunk(grid, ifs, c, mode, samples, pads), chunks))

    per_map = []
    for n in range(ifs.n_maps):
        src = np.concatenate([r[0][n][0] for r in results])
        dst = np.concatenate([r[0][n][1] for r in results])
        per_map.append(sparse.coo_matrix((np.ones(len(src), dtype=np.int32), (src, dst)), shape=(grid.size, grid.size)))
    clipped = sum(r[1] for r in results)
    max_pad = max((r[2] for r in results), default=0.0)

    if clipped:
        log.warning(f"[Relation] {clipped} sampled image point(s) left the domain and were clipped")

    meta = RelationMeta(
        mode=mode,
        samples_per_cell=samples,
        padding=None if padding is None else float(padding),
        max_padding=max_pad,
        clipped=clipped,
        rigorous=mode == PADDED and padding is None and all(exact),
        invertible=ifs.invertible,
    )
    rel = TransitionRelation(grid, per_map, meta)
    log.info(f"[Relation] done: {rel.union.nnz} union edges, max pad {max_pad:.3g}")
    return rel

from __future__ import annotations

import hashlib
import math
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from geometry.space import (
    BOX2, CIRCLE, INTERVAL, PROJECTIVE_PLANE, RIEMANN_SPHERE, TWO_PI, Space,
)
from utils.errors import ConfigurationError

CURVED_RADIUS_INFLATION = 1.01
DILATE_GUARD = 1e-12
EQUATOR_TOL = 1e-12


class Grid:
    """
    Uniform cell grid over a chart of a compact space.

    Charts:
      interval  x                      circle  theta in [0, 2pi)
      box2      (x, y)                 riemann-sphere  (polar theta in [0, pi], azimuth phi)
      projective-plane  upper hemisphere (theta in [0, pi/2], phi), antipodes folded

    Cells are numbered row-major over the chart axes. The grid is immutable
    after construction; arrays are marked read-only.
    """

    def __init__(self, space: Space, resolution: Sequence[int]):
        resolution = tuple(int(r) for r in np.atleast_1d(resolution))
        axes = 2 if space.kind in (BOX2, RIEMANN_SPHERE, PROJECTIVE_PLANE) else 1
        if len(resolution) != axes:
            raise ConfigurationError(f"{space.kind} needs {axes} resolution value(s), got {resolution}")
        if any(r < 2 for r in resolution):
            raise ConfigurationError(f"resolution must be >= 2 per axis, got {resolution}")
        if space.kind == PROJECTIVE_PLANE and resolution[1] % 2:
            raise ConfigurationError("projective-plane needs an even azimuth resolution for the equator seam")

        self.space = space
        self.resolution = resolution
        self.size = int(np.prod(resolution))
        self.lows, self.highs = self._chart_bounds()
        self.widths = (self.highs - self.lows) / np.asarray(resolution, dtype=np.float64)
        self.periodic = self._periodic_axes()

        idx = np.indices(resolution).reshape(len(resolution), -1).T
        self.chart_centers = self.lows + (idx + 0.5) * self.widths
        self.centers = self.from_chart(self.chart_centers)
        self.radii = self._covering_radii()
        self.scale = float(self.radii.max())
        self.cell_width = 2.0 * float(np.median(self.radii))

        for arr in (self.chart_centers, self.centers, self.radii):
            arr.flags.writeable = False

        key = f"{space.kind}|{','.join(repr(b) for b in space.bounds)}|{'x'.join(map(str, resolution))}"
        self.hash = hashlib.sha256(key.encode()).hexdigest()

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and other.hash == self.hash

    def __hash__(self) -> int:
        return hash(self.hash)

    def __repr__(self) -> str:
        return f"Grid({self.space.kind}, resolution={self.resolution}, cells={self.size})"

    # ── chart ────────────────────────────────────────────────
    def _chart_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        kind = self.space.kind
        if kind == INTERVAL:
            a, b = self.space.bounds
            return np.array([a]), np.array([b])
        if kind == CIRCLE:
            return np.array([0.0]), np.array([TWO_PI])
        if kind == BOX2:
            ax, bx, ay, by = self.space.bounds
            return np.array([ax, ay]), np.array([bx, by])
        if kind == RIEMANN_SPHERE:
            return np.array([0.0, 0.0]), np.array([math.pi, TWO_PI])
        return np.array([0.0, 0.0]), np.array([math.pi / 2.0, TWO_PI])

    def _periodic_axes(self) -> tuple[bool, ...]:
        kind = self.space.kind
        if kind == CIRCLE:
            return (True,)
        if kind in (RIEMANN_SPHERE, PROJECTIVE_PLANE):
            return (False, True)
        return (False,) * len(self.resolution)

    def from_chart(self, uv: np.ndarray) -> np.ndarray:
        """Chart coordinates -> canonical points."""
        uv = np.asarray(uv, dtype=np.float64).reshape(-1, len(self.resolution))
        kind = self.space.kind
        if kind in (INTERVAL, CIRCLE, BOX2):
            return self.space.canonical(uv)
        theta, phi = uv[:, 0], uv[:, 1]
        if kind == RIEMANN_SPHERE:
            pairs = np.column_stack([np.cos(theta / 2.0) * np.exp(1j * phi), np.sin(theta / 2.0) + 0j])
            return self.space.canonical(pairs)
        vec = np.column_stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
        return self.space.canonical(vec)

    def to_chart(self, points) -> np.ndarray:
        """Canonical points -> chart coordinates (no clipping)."""
        pts = self.space.as_points(points)
        kind = self.space.kind
        if kind in (INTERVAL, BOX2):
            return np.asarray(pts, dtype=np.float64)
        if kind == CIRCLE:
            return np.mod(np.asarray(pts, dtype=np.float64), TWO_PI)
        if kind == RIEMANN_SPHERE:
            h = self.space.embed(pts)
        else:
            h = np.array(pts, dtype=np.float64, copy=True)
            h[h[:, 2] < 0] *= -1.0
            # equator points: pick the representative with y > 0 (or x > 0)
            eq = np.abs(h[:, 2]) <= EQUATOR_TOL
            flip = eq & ((h[:, 1] < -EQUATOR_TOL) | ((np.abs(h[:, 1]) <= EQUATOR_TOL) & (h[:, 0] < 0)))
            h[flip] *= -1.0
            h[eq, 2] = 0.0
        theta = np.arccos(np.clip(h[:, 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(h[:, 1], h[:, 0]), TWO_PI)
        return np.column_stack([theta, phi])

    # ── cell lookup ──────────────────────────────────────────
    def locate(self, points) -> tuple[np.ndarray, np.ndarray]:
        """
        Cell index for each point plus a mask of points that fell outside
        the chart bounds and were clipped to the nearest cell.
        """
        uv = self.to_chart(points)
        k = np.floor((uv - self.lows) / self.widths).astype(np.int64)
        res = np.asarray(self.resolution)
        outside = np.zeros(len(uv), dtype=bool)
        tol = 1e-12 * np.maximum(1.0, np.abs(self.highs - self.lows))
        for axis, periodic in enumerate(self.periodic):
            if periodic:
                k[:, axis] = np.mod(k[:, axis], res[axis])
            else:
                if self.space.has_boundary:
                    outside |= (uv[:, axis] < self.lows[axis] - tol[axis]) | (uv[:, axis] > self.highs[axis] + tol[axis])
                k[:, axis] = np.clip(k[:, axis], 0, res[axis] - 1)
        cells = np.ravel_multi_index(tuple(k.T), self.resolution)
        return cells.astype(np.int64), outside

    def point_to_cell(self, points) -> np.ndarray:
        return self.locate(points)[0]

    def chart_box(self, cells=None) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper chart corners of the given cells (all cells by default)."""
        centers = self.chart_centers if cells is None else self.chart_centers[np.asarray(cells)]
        return centers - self.widths / 2.0, centers + self.widths / 2.0

    def sample_points(self, samples_per_cell: int, cells=None) -> tuple[np.ndarray, np.ndarray]:
        """
        Interior sample lattice: fractions (j + 1/2)/s of each cell along every
        chart axis. s = 1 is the cell center. Returns (points, owner cells).
        """
        fracs = (np.arange(samples_per_cell) + 0.5) / samples_per_cell
        return self._lattice(fracs, cells)

    def boundary_lattice(self, per_axis: int, cells=None) -> tuple[np.ndarray, np.ndarray]:
        """Closed lattice including the cell corners, used for Lipschitz sampling."""
        fracs = np.linspace(0.0, 1.0, max(per_axis, 2))
        return self._lattice(fracs, cells)

    def _lattice(self, fracs: np.ndarray, cells) -> tuple[np.ndarray, np.ndarray]:
        cells = np.arange(self.size) if cells is None else np.asarray(cells, dtype=np.int64)
        lo, _ = self.chart_box(cells)
        axes = len(self.resolution)
        offsets = np.stack(np.meshgrid(*([fracs] * axes), indexing="ij"), axis=-1).reshape(-1, axes)
        uv = lo[:, None, :] + offsets[None, :, :] * self.widths
        owners = np.repeat(cells, len(offsets))
        return self.from_chart(uv.reshape(-1, axes)), owners

    # ── geometry of cells ────────────────────────────────────
    def _covering_radii(self) -> np.ndarray:
        kind = self.space.kind
        if kind in (INTERVAL, CIRCLE):
            return np.full(self.size, self.widths[0] / 2.0)
        if kind == BOX2:
            return np.full(self.size, float(np.hypot(*(self.widths / 2.0))))
        # curved charts: corners and edge midpoints, slightly inflated
        offsets = np.array([[i, j] for i in (-0.5, 0.0, 0.5) for j in (-0.5, 0.0, 0.5) if (i, j) != (0.0, 0.0)])
        radii = np.zeros(self.size)
        for off in offsets:
            uv = self.chart_centers + off * self.widths
            uv[:, 0] = np.clip(uv[:, 0], self.lows[0], self.highs[0])
            radii = np.maximum(radii, self.space.pairwise(self.centers, self.from_chart(uv)))
        return radii * CURVED_RADIUS_INFLATION

    @cached_property
    def neighbors(self) -> sparse.csr_matrix:
        """Symmetric 8-neighborhood adjacency (no self loops), seams stitched."""
        res = self.resolution
        src, dst = [], []
        if len(res) == 1:
            i = np.arange(res[0])
            for d in (-1, 1):
                j = i + d
                if self.periodic[0]:
                    j = np.mod(j, res[0])
                    src.append(i); dst.append(j)
                else:
                    ok = (j >= 0) & (j < res[0])
                    src.append(i[ok]); dst.append(j[ok])
        else:
            ii, jj = np.indices(res)
            ii, jj = ii.ravel(), jj.ravel()
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ti, tj = ii + di, jj + dj
                    if self.periodic[1]:
                        tj = np.mod(tj, res[1])
                    ok = (ti >= 0) & (ti < res[0]) & (tj >= 0) & (tj < res[1])
                    src.append(np.ravel_multi_index((ii[ok], jj[ok]), res))
                    dst.append(np.ravel_multi_index((ti[ok], tj[ok]), res))
            if self.space.kind in (RIEMANN_SPHERE, PROJECTIVE_PLANE):
                bands = [0] if self.space.kind == PROJECTIVE_PLANE else [0, res[0] - 1]
                for band in bands:
                    ring = np.ravel_multi_index((np.full(res[1], band), np.arange(res[1])), res)
                    a, b = np.meshgrid(ring, ring, indexing="ij")
                    src.append(a.ravel()); dst.append(b.ravel())
            if self.space.kind == PROJECTIVE_PLANE:
                # equator seam: (last band, j) touches (last band, j + n/2 + dj)
                j = np.arange(res[1])
                band = np.full(res[1], res[0] - 1)
                for dj in (-1, 0, 1):
                    tj = np.mod(j + res[1] // 2 + dj, res[1])
                    src.append(np.ravel_multi_index((band, j), res))
                    dst.append(np.ravel_multi_index((band, tj), res))
        src, dst = np.concatenate(src), np.concatenate(dst)
        off = src != dst
        src, dst = src[off], dst[off]
        adj = sparse.coo_matrix((np.ones(len(src), dtype=np.int32), (src, dst)), shape=(self.size, self.size)).tocsr()
        adj = ((adj + adj.T) > 0).astype(np.int32)
        adj.sort_indices()
        return adj.tocsr()

    def closed_neighborhood(self, mask: np.ndarray) -> np.ndarray:
        """mask plus every neighbor of a cell in mask."""
        return mask | (self.neighbors.T @ mask.astype(np.int32) > 0)

    # ── distance queries ─────────────────────────────────────
    def _embedded(self, points) -> np.ndarray:
        emb = self.space.embed(points)
        if self.space.antipodal:
            return np.vstack([emb, -emb])
        return emb

    @cached_property
    def _center_tree(self) -> cKDTree:
        return cKDTree(self._embedded(self.centers))

    def nearest_distance(self, mask: np.ndarray) -> np.ndarray:
        """Metric distance from every cell center to the nearest center in mask."""
        tree = cKDTree(self._embedded(self.centers[mask]))
        chord, _ = tree.query(self.space.embed(self.centers))
        return self.space.metric_from_chord(chord)

    def cells_near(self, points: np.ndarray, pads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Pairs (point row, cell) with distance(point, center) <= pad + cell radius.
        """
        emb = self.space.embed(points)
        reach = self.space.chord_from_metric(pads + self.scale) + 1e-12
        hits = self._center_tree.query_ball_point(emb, r=reach)
        rows = np.repeat(np.arange(len(points)), [len(h) for h in hits])
        if len(rows) == 0:
            return rows.astype(np.int64), rows.astype(np.int64)
        cells = np.mod(np.concatenate([np.asarray(h, dtype=np.int64) for h in hits]), self.size)
        d = self.space.pairwise(points[rows], self.centers[cells])
        keep = d <= pads[rows] + self.radii[cells] + DILATE_GUARD
        pairs = np.unique(np.column_stack([rows[keep], cells[keep]]), axis=0)
        return pairs[:, 0], pairs[:, 1]

    def dilation_matrix(self, r: float) -> sparse.csr_matrix:
        """D[s, t] = 1 iff t lies in dilate({s}, r)."""
        base = cKDTree(self.space.embed(self.centers))
        reach = float(self.space.chord_from_metric(r + self.scale)) + 1e-12
        pairs = base.sparse_distance_matrix(self._center_tree, reach, output_type="ndarray")
        s = pairs["i"].astype(np.int64)
        t = np.mod(pairs["j"].astype(np.int64), self.size)
        d = self.space.pairwise(self.centers[s], self.centers[t])
        keep = d < r + self.radii[t] - DILATE_GUARD
        s = np.concatenate([s[keep], np.arange(self.size)])
        t = np.concatenate([t[keep], np.arange(self.size)])
        mat = sparse.coo_matrix((np.ones(len(s), dtype=np.int32), (s, t)), shape=(self.size, self.size)).tocsr()
        mat.data[:] = 1
        mat.sort_indices()
        return mat


def make_grid(space: Space, resolution: Sequence[int]) -> Grid:
    return Grid(space, resolution)

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from geometry.grid import DILATE_GUARD, Grid
from utils.errors import ContractError, DomainError, GridMismatchError


@dataclass(frozen=True, eq=False)
class CellSet:
    """Immutable subset of the cells of one grid (boolean membership mask)."""

    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.grid.size,):
            raise ValueError(f"mask shape {mask.shape} does not match grid of {self.grid.size} cells")
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    # ── constructors ─────────────────────────────────────────
    @classmethod
    def empty(cls, grid: Grid) -> "CellSet":
        return cls(grid, np.zeros(grid.size, dtype=bool))

    @classmethod
    def full(cls, grid: Grid) -> "CellSet":
        return cls(grid, np.ones(grid.size, dtype=bool))

    @classmethod
    def from_indices(cls, grid: Grid, indices: Iterable[int]) -> "CellSet":
        mask = np.zeros(grid.size, dtype=bool)
        idx = np.fromiter((int(i) for i in indices), dtype=np.int64)
        mask[idx] = True
        return cls(grid, mask)

    @classmethod
    def from_points(cls, grid: Grid, points) -> "CellSet":
        mask = np.zeros(grid.size, dtype=bool)
        mask[grid.point_to_cell(points)] = True
        return cls(grid, mask)

    @classmethod
    def covering(cls, grid: Grid, lows: Sequence[float], highs: Sequence[float]) -> "CellSet":
        """Cells whose chart box meets the closed chart box [lows, highs]."""
        lows = np.atleast_1d(np.asarray(lows, dtype=np.float64))
        highs = np.atleast_1d(np.asarray(highs, dtype=np.float64))
        lo, hi = grid.chart_box()
        mask = np.all((hi > lows) & (lo < highs), axis=1)
        corners = np.array(np.meshgrid(*zip(lows, highs), indexing="ij")).reshape(len(lows), -1).T
        mask[grid.locate(grid.from_chart(corners))[0]] = True
        return cls(grid, mask)

    # ── set algebra (exact) ──────────────────────────────────
    def _check(self, other: "CellSet") -> None:
        if not isinstance(other, CellSet):
            raise TypeError(f"expected CellSet, got {type(other).__name__}")
        if other.grid.hash != self.grid.hash:
            raise GridMismatchError(f"cell sets over different grids ({self.grid!r} vs {other.grid!r})")

    def __or__(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.grid, self.mask | other.mask)

    def __and__(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.grid, self.mask & other.mask)

    def __sub__(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.grid, self.mask & ~other.mask)

    def __xor__(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.grid, self.mask ^ other.mask)

    def __invert__(self) -> "CellSet":
        return CellSet(self.grid, ~self.mask)

    def complement(self) -> "CellSet":
        return ~self

    def __le__(self, other: "CellSet") -> bool:
        self._check(other)
        return not np.any(self.mask & ~other.mask)

    def __lt__(self, other: "CellSet") -> bool:
        return self <= other and not self == other

    def __ge__(self, other: "CellSet") -> bool:
        return other <= self

    def __eq__(self, other) -> bool:
        if not isinstance(other, CellSet) or other.grid.hash != self.grid.hash:
            return False
        return bool(np.array_equal(self.mask, other.mask))

    __hash__ = None

    def __len__(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __contains__(self, cell: int) -> bool:
        return bool(self.mask[int(cell)])

    def __iter__(self):
        return iter(self.indices.tolist())

    def __repr__(self) -> str:
        return f"CellSet({len(self)}/{self.grid.size} cells)"

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()

    def key(self) -> bytes:
        """Compact hashable fingerprint for cycle detection and dedup."""
        return np.packbits(self.mask).tobytes()

    # ── persistence ──────────────────────────────────────────
    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# grid={self.grid.hash} cells={self.grid.size}\n")
            pd.DataFrame({"cell": self.indices}).to_csv(fh, index=False, lineterminator="\n")

    @classmethod
    def from_csv(cls, path: str | Path, grid: Grid) -> "CellSet":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if f"grid={grid.hash}" not in header:
                raise GridMismatchError(f"{path}: header '{header}' does not match grid {grid.hash[:12]}")
            frame = pd.read_csv(fh)
        return cls.from_indices(grid, frame["cell"].to_numpy())


def dilate(grid: Grid, S: CellSet, r: float) -> CellSet:
    """Cells whose center lies strictly within r + (own covering radius) of a center of S."""
    if S.grid.hash != grid.hash:
        raise GridMismatchError("dilate: cell set is over a different grid")
    if r < 0:
        raise ContractError(f"dilation radius must be nonnegative, got {r}")
    if S.is_empty:
        return S
    d = grid.nearest_distance(S.mask)
    return CellSet(grid, (d < r + grid.radii - DILATE_GUARD) | S.mask)


def directed_distance(grid: Grid, X: CellSet, Y: CellSet) -> float:
    """max over x in X of min over y in Y of d(x, y), on cell centers"""
    return float(grid.nearest_distance(Y.mask)[X.mask].max())


def hausdorff(grid: Grid, X: CellSet, Y: CellSet) -> float:
    """
    Hausdorff distance between cell sets measured on cell centers.

    The value is within grid.scale of the distance between the cell unions.
    """
    X._check(Y)
    if X.grid.hash != grid.hash:
        raise GridMismatchError("hausdorff: cell sets are over a different grid")
    if X.is_empty or Y.is_empty:
        raise DomainError("Hausdorff distance needs nonempty cell sets")
    if X == Y:
        return 0.0
    return max(directed_distance(grid, X, Y), directed_distance(grid, Y, X))

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from config.settings import settings
from geometry.grid import Grid
from geometry.space import BOX2, CIRCLE, INTERVAL, PROJECTIVE_PLANE, RIEMANN_SPHERE, Space
from utils.errors import ConfigurationError, DomainError

DET_TOL = 1e-12


class BaseMap(ABC):
    """
    Base Map Class

    Every IFS member implements evaluation on canonical points of the spaces
    it supports, an optional inverse, and a per-cell Lipschitz bound used for
    relation padding.
    """

    variant: str = "map"
    spaces: tuple[str, ...] = ()
    rigorous_lipschitz: bool = False

    @abstractmethod
    def apply(self, space: Space, pts: np.ndarray) -> np.ndarray:
        """Raw image of canonical points (not yet canonicalized)"""
        pass

    @abstractmethod
    def inverse(self) -> Optional["BaseMap"]:
        """Inverse map, or None when the map is not invertible"""
        pass

    @abstractmethod
    def params(self) -> dict:
        """Numeric parameters for reports"""
        pass

    @property
    def invertible(self) -> bool:
        return self.inverse() is not None

    def check_space(self, space: Space) -> None:
        if space.kind not in self.spaces:
            raise ConfigurationError(f"{self.variant} does not act on {space.kind}")

    def eval(self, space: Space, p) -> np.ndarray:
        return space.canonical(self.apply(space, space.canonical(p)))

    __call__ = eval

    def describe(self) -> dict:
        return {"variant": self.variant, **self.params()}

    # ── Lipschitz bounds ────────────────────────────────────
    def cell_lipschitz(self, grid: Grid, cells=None) -> np.ndarray:
        """
        Per-cell Lipschitz estimate from pairs of a closed sample lattice,
        inflated by LIPSCHITZ_INFLATION.
        """
        space = grid.space
        cells = np.arange(grid.size) if cells is None else np.asarray(cells, dtype=np.int64)
        pts, _ = grid.boundary_lattice(settings.LIPSCHITZ_SAMPLES, cells)
        k = len(pts) // len(cells)
        img = self.eval(space, pts)
        ii, jj = np.triu_indices(k, 1)
        base = (np.arange(len(cells)) * k)[:, None]
        a, b = (base + ii).ravel(), (base + jj).ravel()
        dx = space.pairwise(pts[a], pts[b])
        dy = space.pairwise(img[a], img[b])
        ratio = np.where(dx > 1e-14, dy / np.maximum(dx, 1e-300), 0.0).reshape(len(cells), -1)
        return ratio.max(axis=1) * settings.LIPSCHITZ_INFLATION

    def lipschitz_bound(self, grid: Grid, cells=None) -> tuple[np.ndarray, bool]:
        """Per-cell bound together with whether it is rigorous on those cells."""
        return self.cell_lipschitz(grid, cells), self.rigorous_lipschitz

    def set_lipschitz(self, grid: Grid, cells: np.ndarray) -> float:
        return float(self.cell_lipschitz(grid, cells).max())


class Affine1D(BaseMap):
    """x -> a x + b"""

    variant = "affine1d"
    spaces = (INTERVAL,)
    rigorous_lipschitz = True

    def __init__(self, a: float, b: float = 0.0):
        self.a, self.b = float(a), float(b)

    def apply(self, space, pts):
        return self.a * pts + self.b

    def inverse(self):
        if abs(self.a) <= DET_TOL:
            return None
        return Affine1D(1.0 / self.a, -self.b / self.a)

    def params(self):
        return {"a": self.a, "b": self.b}

    def cell_lipschitz(self, grid, cells=None):
        n = grid.size if cells is None else len(cells)
        return np.full(n, abs(self.a))

    def set_lipschitz(self, grid, cells):
        return abs(self.a)


class Affine2D(BaseMap):
    """x -> A x + t on a box"""

    variant = "affine2d"
    spaces = (BOX2,)
    rigorous_lipschitz = True

    def __init__(self, A: Sequence[Sequence[float]], t: Sequence[float] = (0.0, 0.0)):
        self.A = np.asarray(A, dtype=np.float64)
        self.t = np.asarray(t, dtype=np.float64)
        if self.A.shape != (2, 2) or self.t.shape != (2,):
            raise ConfigurationError(f"affine2d needs a 2x2 matrix and a 2-vector, got {self.A.shape}, {self.t.shape}")
        self._norm = float(np.linalg.norm(self.A, 2))

    def apply(self, space, pts):
        return pts @ self.A.T + self.t

    def inverse(self):
        if abs(np.linalg.det(self.A)) <= DET_TOL:
            return None
        inv = np.linalg.inv(self.A)
        return Affine2D(inv, -inv @ self.t)

    def params(self):
        return {"matrix": self.A.tolist(), "t": self.t.tolist()}

    def cell_lipschitz(self, grid, cells=None):
        n = grid.size if cells is None else len(cells)
        return np.full(n, self._norm)

    def set_lipschitz(self, grid, cells):
        return self._norm


class PiecewiseQuad(BaseMap):
    """
    On [n, n+1):  (x - n)^2 + n        for n >= 0
                 -(x - n - 1)^2 + n + 1 for n < 0
    Continuous, increasing, fixes every integer.
    """

    variant = "piecewise-quad"
    spaces = (INTERVAL,)
    rigorous_lipschitz = True

    def apply(self, space, pts):
        n = np.floor(pts)
        return np.where(n >= 0, (pts - n) ** 2 + n, -((pts - n - 1) ** 2) + n + 1)

    def inverse(self):
        return PiecewiseQuadInverse()

    def params(self):
        return {}

    @staticmethod
    def _slope_right(x):
        n = np.floor(x)
        return np.where(n >= 0, 2.0 * (x - n), 2.0 * (n + 1 - x))

    @staticmethod
    def _slope_left(x):
        m = np.ceil(x) - 1
        return np.where(m >= 0, 2.0 * (x - m), 2.0 * (m + 1 - x))

    def _hull_bound(self, lo, hi):
        bound = np.maximum(self._slope_right(lo), self._slope_left(hi))
        first, last = np.floor(lo) + 1, np.ceil(hi) - 1
        # an interior breakpoint other than 0 carries slope 2 on one side
        inner = (first <= last) & ~((first == 0) & (last == 0))
        return np.where(inner, 2.0, bound)

    def cell_lipschitz(self, grid, cells=None):
        lo, hi = grid.chart_box(cells)
        return self._hull_bound(lo[:, 0], hi[:, 0])

    def set_lipschitz(self, grid, cells):
        lo, hi = grid.chart_box(cells)
        return float(self._hull_bound(np.array([lo.min()]), np.array([hi.max()]))[0])


class PiecewiseQuadInverse(BaseMap):
    """Branchwise inverse of PiecewiseQuad: n + sqrt(y - n) or n + 1 - sqrt(n + 1 - y)."""

    variant = "piecewise-quad-inverse"
    spaces = (INTERVAL,)
    rigorous_lipschitz = True

    def apply(self, space, pts):
        n = np.floor(pts)
        return np.where(n >= 0, n + np.sqrt(np.maximum(pts - n, 0.0)), n + 1 - np.sqrt(np.maximum(n + 1 - pts, 0.0)))

    def inverse(self):
        return PiecewiseQuad()

    def params(self):
        return {}

    @staticmethod
    def _slope(gap):
        with np.errstate(divide="ignore"):
            return np.where(gap > 0, 0.5 / np.sqrt(np.maximum(gap, 0.0)), np.inf)

    def _hull_bound(self, lo, hi):
        n = np.floor(lo)
        right = self._slope(np.where(n >= 0, lo - n, n + 1 - lo))
        m = np.ceil(hi) - 1
        left = self._slope(np.where(m >= 0, hi - m, m + 1 - hi))
        inner = np.floor(lo) + 1 <= np.ceil(hi) - 1
        return np.where(inner, np.inf, np.maximum(right, left))

    def cell_lipschitz(self, grid, cells=None):
        lo, hi = grid.chart_box(cells)
        return self._hull_bound(lo[:, 0], hi[:, 0])

    def set_lipschitz(self, grid, cells):
        lo, hi = grid.chart_box(cells)
        return float(self._hull_bound(np.array([lo.min()]), np.array([hi.max()]))[0])


class Moebius(BaseMap):
    """
    z -> (a z + b) / (c z + d) as the homogeneous action on (z1, z2).
    On the circle the map must preserve |z| = 1.
    """

    variant = "moebius"
    spaces = (CIRCLE, RIEMANN_SPHERE)

    def __init__(self, a: complex, b: complex, c: complex, d: complex):
        self.M = np.array([[a, b], [c, d]], dtype=np.complex128)
        self.det = complex(np.linalg.det(self.M))
        if abs(self.det) <= DET_TOL:
            raise ConfigurationError(f"moebius map needs ad - bc != 0, got {self.det}")

    def check_space(self, space):
        super().check_space(space)
        if space.kind == CIRCLE:
            angles = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
            w = self._circle_image(np.exp(1j * angles))
            if not np.allclose(np.abs(w), 1.0, atol=1e-9):
                raise ConfigurationError("moebius map does not preserve the unit circle")

    def _circle_image(self, z):
        (a, b), (c, d) = self.M
        den = c * z + d
        if np.any(np.abs(den) <= DET_TOL):
            raise DomainError("moebius pole on the unit circle")
        return (a * z + b) / den

    def apply(self, space, pts):
        if space.kind == CIRCLE:
            return np.angle(self._circle_image(np.exp(1j * pts[:, 0])))[:, None]
        return pts @ self.M.T

    def inverse(self):
        (a, b), (c, d) = self.M
        return Moebius(d, -b, -c, a)

    def params(self):
        return {"matrix": [[[v.real, v.imag] for v in row] for row in self.M]}

    def derivative(self, space: Space, pts: np.ndarray) -> np.ndarray:
        """Pointwise metric derivative (arc metric on the circle, spherical on the sphere)."""
        if space.kind == CIRCLE:
            (_, _), (c, d) = self.M
            return abs(self.det) / np.abs(c * np.exp(1j * pts[:, 0]) + d) ** 2
        mv = pts @ self.M.T
        return abs(self.det) * np.sum(np.abs(pts) ** 2, axis=1) / np.sum(np.abs(mv) ** 2, axis=1)

    def lipschitz_bound(self, grid, cells=None):
        cells = np.arange(grid.size) if cells is None else np.asarray(cells, dtype=np.int64)
        pts, _ = grid.boundary_lattice(settings.LIPSCHITZ_SAMPLES, cells)
        deriv = self.derivative(grid.space, pts).reshape(len(cells), -1)
        top = float(deriv.max())
        # constant derivative means a spherical isometry: the sampled value is exact
        if np.ptp(deriv) <= 1e-12 * max(top, 1.0):
            return deriv.max(axis=1), True
        return deriv.max(axis=1) * settings.LIPSCHITZ_INFLATION, False

    def cell_lipschitz(self, grid, cells=None):
        return self.lipschitz_bound(grid, cells)[0]


class Projective3(BaseMap):
    """[x:y:z] -> [A (x, y, z)] on the real projective plane"""

    variant = "projective3"
    spaces = (PROJECTIVE_PLANE,)

    def __init__(self, A: Sequence[Sequence[float]], invertible: Optional[bool] = None):
        self.A = np.asarray(A, dtype=np.float64)
        if self.A.shape != (3, 3):
            raise ConfigurationError(f"projective3 needs a 3x3 matrix, got shape {self.A.shape}")
        if not np.all(np.isfinite(self.A)) or not np.any(self.A):
            raise ConfigurationError("projective3 matrix must be finite and nonzero")
        det = float(np.linalg.det(self.A))
        singular = abs(det) <= DET_TOL * max(1.0, float(np.abs(self.A).max()) ** 3)
        if invertible and singular:
            raise ConfigurationError(f"projective3 marked invertible but det(A) = {det}")
        self._invertible = (not singular) if invertible is None else bool(invertible)

    def apply(self, space, pts):
        return pts @ self.A.T

    def inverse(self):
        if not self._invertible:
            return None
        return Projective3(np.linalg.inv(self.A), invertible=True)

    def params(self):
        return {"matrix": self.A.tolist()}


class Tabulated1D(BaseMap):
    """Piecewise-linear map through a sample table, constant outside the table range."""

    variant = "tabulated1d"
    spaces = (INTERVAL,)
    rigorous_lipschitz = True

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        self.xs = np.asarray(xs, dtype=np.float64)
        self.ys = np.asarray(ys, dtype=np.float64)
        if self.xs.ndim != 1 or self.xs.shape != self.ys.shape or len(self.xs) < 2:
            raise ConfigurationError("tabulated1d needs two equal-length tables with at least 2 entries")
        if np.any(np.diff(self.xs) <= 0):
            raise ConfigurationError("tabulated1d xs must be strictly increasing")
        self._slopes = np.abs(np.diff(self.ys) / np.diff(self.xs))

    def apply(self, space, pts):
        return np.interp(pts[:, 0], self.xs, self.ys)[:, None]

    def inverse(self):
        steps = np.diff(self.ys)
        if np.all(steps > 0):
            return Tabulated1D(self.ys, self.xs)
        if np.all(steps < 0):
            return Tabulated1D(self.ys[::-1], self.xs[::-1])
        return None

    def params(self):
        return {"xs": self.xs.tolist(), "ys": self.ys.tolist()}

    def _hull_bound(self, lo: float, hi: float) -> float:
        seg = (self.xs[1:] > lo) & (self.xs[:-1] < hi)
        return float(self._slopes[seg].max()) if seg.any() else 0.0

    def cell_lipschitz(self, grid, cells=None):
        lo, hi = grid.chart_box(cells)
        return np.array([self._hull_bound(l, h) for l, h in zip(lo[:, 0], hi[:, 0])])

    def set_lipschitz(self, grid, cells):
        lo, hi = grid.chart_box(cells)
        return self._hull_bound(float(lo.min()), float(hi.max()))


MAP_VARIANTS = {
    cls.variant: cls
    for cls in (Affine1D, Affine2D, PiecewiseQuad, PiecewiseQuadInverse, Moebius, Projective3, Tabulated1D)
}

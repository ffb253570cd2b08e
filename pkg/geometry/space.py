from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from utils.errors import ConfigurationError, DomainError

TWO_PI = 2.0 * math.pi
CANONICAL_TOL = 1e-12

INTERVAL = "interval"
CIRCLE = "circle"
BOX2 = "box2"
RIEMANN_SPHERE = "riemann-sphere"
PROJECTIVE_PLANE = "projective-plane"

SPACE_KINDS = (INTERVAL, CIRCLE, BOX2, RIEMANN_SPHERE, PROJECTIVE_PLANE)


@dataclass(frozen=True)
class Space:
    """
    Compact metric space

    Points are numpy arrays of shape (n, dim):
      interval / circle : one real coordinate (circle stores the angle in [0, 2pi))
      box2              : (x, y)
      riemann-sphere    : normalized complex pair, larger-modulus coordinate real positive
      projective-plane  : unit 3-vector, first nonzero coordinate positive
    """

    kind: str
    bounds: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in SPACE_KINDS:
            raise ConfigurationError(f"unknown space kind '{self.kind}'")
        if self.kind == INTERVAL:
            if len(self.bounds) != 2 or not self.bounds[0] < self.bounds[1]:
                raise ConfigurationError(f"interval needs a < b, got {self.bounds}")
        elif self.kind == BOX2:
            if len(self.bounds) != 4:
                raise ConfigurationError(f"box2 needs 4 bounds, got {self.bounds}")
            ax, bx, ay, by = self.bounds
            if not (ax < bx and ay < by):
                raise ConfigurationError(f"box2 needs ax < bx and ay < by, got {self.bounds}")
        elif self.bounds:
            raise ConfigurationError(f"{self.kind} takes no bounds")
        if not all(math.isfinite(b) for b in self.bounds):
            raise ConfigurationError(f"non-finite bounds {self.bounds}")

    # ── constructors ─────────────────────────────────────────
    @classmethod
    def interval(cls, a: float, b: float) -> "Space":
        return cls(INTERVAL, (float(a), float(b)))

    @classmethod
    def circle(cls) -> "Space":
        return cls(CIRCLE)

    @classmethod
    def box2(cls, ax: float, bx: float, ay: float, by: float) -> "Space":
        return cls(BOX2, (float(ax), float(bx), float(ay), float(by)))

    @classmethod
    def riemann_sphere(cls) -> "Space":
        return cls(RIEMANN_SPHERE)

    @classmethod
    def projective_plane(cls) -> "Space":
        return cls(PROJECTIVE_PLANE)

    # ── shape information ───────────────────────────────────
    @property
    def dim(self) -> int:
        return {INTERVAL: 1, CIRCLE: 1, BOX2: 2, RIEMANN_SPHERE: 2, PROJECTIVE_PLANE: 3}[self.kind]

    @property
    def dtype(self):
        return np.complex128 if self.kind == RIEMANN_SPHERE else np.float64

    @property
    def antipodal(self) -> bool:
        """True when the metric is a min over +/- representatives"""
        return self.kind == PROJECTIVE_PLANE

    @property
    def has_boundary(self) -> bool:
        return self.kind in (INTERVAL, BOX2)

    @property
    def diameter(self) -> float:
        if self.kind == INTERVAL:
            return self.bounds[1] - self.bounds[0]
        if self.kind == BOX2:
            ax, bx, ay, by = self.bounds
            return math.hypot(bx - ax, by - ay)
        if self.kind == CIRCLE:
            return math.pi
        if self.kind == RIEMANN_SPHERE:
            return 2.0
        return math.sqrt(2.0)

    # ── points ───────────────────────────────────────────────
    def as_points(self, p) -> np.ndarray:
        """Reshape a point, a list of points or a scalar to an (n, dim) array."""
        arr = np.asarray(p, dtype=self.dtype)
        if self.dim == 1:
            return arr.reshape(-1, 1)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise DomainError(f"{self.kind} points need {self.dim} coordinates, got shape {arr.shape}")
        return arr

    def canonical(self, p) -> np.ndarray:
        """Canonical representatives; zero homogeneous vectors raise DomainError."""
        pts = np.array(self.as_points(p), copy=True)
        if not np.all(np.isfinite(pts)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(pts), axis=1))[0])
            raise DomainError(f"non-finite {self.kind} point at row {bad}", index=bad)

        if self.kind == CIRCLE:
            pts = np.mod(pts, TWO_PI)
            pts[pts >= TWO_PI] = 0.0
            return pts
        if self.kind in (INTERVAL, BOX2):
            return pts

        norms = np.linalg.norm(pts, axis=1)
        zero = norms <= CANONICAL_TOL
        if np.any(zero):
            bad = int(np.flatnonzero(zero)[0])
            raise DomainError(f"zero homogeneous vector at row {bad}", index=bad)
        pts = pts / norms[:, None]

        if self.kind == RIEMANN_SPHERE:
            lead = np.where(np.abs(pts[:, 0]) >= np.abs(pts[:, 1]), 0, 1)
            rows = np.arange(len(pts))
            anchor = pts[rows, lead]
            phase = anchor / np.abs(anchor)
            pts = pts / phase[:, None]
            pts[rows, lead] = np.abs(pts[rows, lead])
            return pts

        # projective plane: first coordinate above tolerance is positive
        first = np.argmax(np.abs(pts) > CANONICAL_TOL, axis=1)
        signs = np.sign(pts[np.arange(len(pts)), first])
        return pts * signs[:, None]

    def random_points(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == INTERVAL:
            a, b = self.bounds
            return rng.uniform(a, b, size=(n, 1))
        if self.kind == CIRCLE:
            return rng.uniform(0.0, TWO_PI, size=(n, 1))
        if self.kind == BOX2:
            ax, bx, ay, by = self.bounds
            return np.column_stack([rng.uniform(ax, bx, n), rng.uniform(ay, by, n)])
        if self.kind == RIEMANN_SPHERE:
            raw = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
            return self.canonical(raw)
        return self.canonical(rng.normal(size=(n, 3)))

    # ── metric ───────────────────────────────────────────────
    def embed(self, p) -> np.ndarray:
        """
        Euclidean embedding used by KD-tree queries.

        The metric is a monotone function of the embedded distance
        (see metric_from_chord); on the projective plane the caller
        must also query the antipodal copy.
        """
        pts = self.as_points(p)
        if self.kind in (INTERVAL, BOX2, PROJECTIVE_PLANE):
            return np.asarray(pts, dtype=np.float64)
        if self.kind == CIRCLE:
            return np.column_stack([np.cos(pts[:, 0]), np.sin(pts[:, 0])])
        return hopf(pts)

    def metric_from_chord(self, c):
        c = np.asarray(c, dtype=np.float64)
        if self.kind == CIRCLE:
            return 2.0 * np.arcsin(np.clip(c / 2.0, 0.0, 1.0))
        return c

    def chord_from_metric(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.kind == CIRCLE:
            return np.where(r >= math.pi, 2.0 + 1e-9, 2.0 * np.sin(np.minimum(r, math.pi) / 2.0))
        return r

    def pairwise(self, p, q) -> np.ndarray:
        """Row-wise distances between broadcast-compatible point arrays."""
        P, Q = self.as_points(p), self.as_points(q)
        if self.kind == INTERVAL:
            return np.abs(P[:, 0] - Q[:, 0])
        if self.kind == BOX2:
            return np.linalg.norm(P - Q, axis=1)
        if self.kind == CIRCLE:
            d = np.mod(np.abs(P[:, 0] - Q[:, 0]), TWO_PI)
            return np.minimum(d, TWO_PI - d)
        if self.kind == RIEMANN_SPHERE:
            return np.linalg.norm(hopf(P) - hopf(Q), axis=1)
        return np.minimum(np.linalg.norm(P - Q, axis=1), np.linalg.norm(P + Q, axis=1))


def hopf(pairs: np.ndarray) -> np.ndarray:
    """Map normalized complex pairs (z1, z2) to the unit sphere in R^3."""
    z1, z2 = pairs[:, 0], pairs[:, 1]
    n2 = np.abs(z1) ** 2 + np.abs(z2) ** 2
    w = z1 * np.conj(z2)
    return np.column_stack([2.0 * w.real, 2.0 * w.imag, np.abs(z1) ** 2 - np.abs(z2) ** 2]) / n2[:, None]


def distance(space: Space, p, q):
    """
    Metric of the space. Single points give a float, batches an array.
    Non-canonical input (zero homogeneous vectors) raises DomainError.
    """
    P, Q = space.canonical(p), space.canonical(q)
    d = space.pairwise(P, Q)
    if len(d) == 1:
        return float(d[0])
    return d


def parse_space(kind: str, bounds: Optional[list[float]] = None) -> Space:
    return Space(kind, tuple(float(b) for b in (bounds or ())))

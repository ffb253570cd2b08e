from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from geometry.cellset import CellSet
from geometry.grid import Grid
from geometry.space import BOX2, CIRCLE, INTERVAL, PROJECTIVE_PLANE, RIEMANN_SPHERE
from toolkit.presets import ANTIPODAL_DISK, DIRECT, EQUIRECTANGULAR
from utils.errors import ConfigurationError, GridMismatchError
from utils.logger import log

RED = (255, 0, 0)
GREEN = (0, 170, 0)
BLACK = (0, 0, 0)
WHITE = (255, 255, 255)
LETTER_COLORS = (RED, GREEN, (0, 90, 255), (230, 150, 0))

ONE_D = (INTERVAL, CIRCLE)


@dataclass(frozen=True)
class Layer:
    """Cells or points painted in one color. Points may carry a per-point color."""

    color: tuple[int, int, int] = RED
    cells: Optional[CellSet] = None
    points: Optional[np.ndarray] = None
    point_colors: Optional[np.ndarray] = None      # (n, 3) uint8, overrides color

    def __post_init__(self):
        if (self.cells is None) == (self.points is None):
            raise ConfigurationError("a layer holds either cells or points")


@dataclass(frozen=True)
class RenderSpec:
    size: tuple[int, int]                           # width, height in pixels
    layers: list[Layer] = field(default_factory=list)
    projection: str = DIRECT
    background: tuple[int, int, int] = WHITE

    @classmethod
    def square(cls, size: int, layers: list[Layer], projection: str = DIRECT) -> "RenderSpec":
        return cls((int(size), int(size)), list(layers), projection)


def _check(spec: RenderSpec, grid: Grid) -> None:
    width, height = spec.size
    if width <= 0 or height <= 0:
        raise ConfigurationError(f"image size must be positive, got {spec.size}")
    if not spec.layers:
        raise ConfigurationError("nothing to render: no layers")
    kind = grid.space.kind
    allowed = {
        DIRECT: (INTERVAL, CIRCLE, BOX2),
        EQUIRECTANGULAR: (RIEMANN_SPHERE,),
        ANTIPODAL_DISK: (PROJECTIVE_PLANE,),
    }.get(spec.projection)
    if allowed is None:
        raise ConfigurationError(f"unknown projection '{spec.projection}'")
    if kind not in allowed:
        raise ConfigurationError(f"{spec.projection} projection does not apply to {kind}")
    for layer in spec.layers:
        if layer.cells is not None and layer.cells.grid != grid:
            raise GridMismatchError("layer cell set is over a different grid")


# ── pixel -> cell ────────────────────────────────────────────
def _pixel_cells(grid: Grid, projection: str, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell under every pixel center, plus a mask of pixels that show the space."""
    u = (np.arange(width) + 0.5) / width
    v = (np.arange(height) + 0.5) / height
    if grid.space.kind in ONE_D:
        x = grid.lows[0] + u * (grid.highs[0] - grid.lows[0])
        cols = grid.locate(grid.from_chart(x[:, None]))[0]
        return np.broadcast_to(cols, (height, width)), np.ones((height, width), dtype=bool)

    uu, vv = np.meshgrid(u, v)
    if projection == ANTIPODAL_DISK:
        X, Y = 2.0 * uu - 1.0, 1.0 - 2.0 * vv
        inside = X ** 2 + Y ** 2 < 1.0
        Z = np.sqrt(np.clip(1.0 - X ** 2 - Y ** 2, 0.0, 1.0))
        pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
        pts[~inside.ravel()] = (0.0, 0.0, 1.0)
        cells = grid.locate(pts)[0].reshape(height, width)
        return cells, inside

    if projection == EQUIRECTANGULAR:
        uv = np.column_stack([vv.ravel() * np.pi, uu.ravel() * 2.0 * np.pi])
    else:
        uv = np.column_stack([grid.lows[0] + uu.ravel() * (grid.highs[0] - grid.lows[0]),
                              grid.highs[1] - vv.ravel() * (grid.highs[1] - grid.lows[1])])
    cells = grid.locate(grid.from_chart(uv))[0].reshape(height, width)
    return cells, np.ones((height, width), dtype=bool)


# ── point -> pixel ───────────────────────────────────────────
def _point_pixels(grid: Grid, projection: str, points: np.ndarray, width: int, height: int):
    space = grid.space
    pts = space.canonical(points)
    if space.kind in ONE_D:
        x = grid.to_chart(pts)[:, 0]
        frac = (x - grid.lows[0]) / (grid.highs[0] - grid.lows[0])
        return np.clip((frac * width).astype(np.int64), 0, width - 1), None
    if projection == ANTIPODAL_DISK:
        p = np.where(pts[:, 2:3] < 0, -pts, pts)
        fu, fv = (p[:, 0] + 1.0) / 2.0, (1.0 - p[:, 1]) / 2.0
    elif projection == EQUIRECTANGULAR:
        chart = grid.to_chart(pts)
        fu, fv = chart[:, 1] / (2.0 * np.pi), chart[:, 0] / np.pi
    else:
        fu = (pts[:, 0] - grid.lows[0]) / (grid.highs[0] - grid.lows[0])
        fv = (grid.highs[1] - pts[:, 1]) / (grid.highs[1] - grid.lows[1])
    cols = np.clip((fu * width).astype(np.int64), 0, width - 1)
    rows = np.clip((fv * height).astype(np.int64), 0, height - 1)
    return cols, rows


def render(spec: RenderSpec, grid: Grid, path: Optional[str | Path] = None) -> np.ndarray:
    """
    Paint the layers in order onto an RGB array and optionally save it as a
    binary PPM. 1D spaces give one horizontal band per layer.
    """
    _check(spec, grid)
    width, height = spec.size
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[...] = spec.background
    pixel_cells, visible = _pixel_cells(grid, spec.projection, width, height)
    one_d = grid.space.kind in ONE_D

    for k, layer in enumerate(spec.layers):
        if one_d:
            top = k * height // len(spec.layers)
            bottom = (k + 1) * height // len(spec.layers)
            band = np.zeros((height, 1), dtype=bool)
            band[top:bottom] = True
        else:
            band = np.ones((height, 1), dtype=bool)

        if layer.cells is not None:
            paint = layer.cells.mask[pixel_cells] & visible & band
            img[paint] = layer.color
            continue

        cols, rows = _point_pixels(grid, spec.projection, layer.points, width, height)
        colors = (np.broadcast_to(np.asarray(layer.color, dtype=np.uint8), (len(cols), 3))
                  if layer.point_colors is None else np.asarray(layer.point_colors, dtype=np.uint8))
        if rows is None:
            img[top:bottom, cols] = colors[None, :, :]
        else:
            img[rows, cols] = colors

    if path is not None:
        save_ppm(img, path)
    return img


def save_ppm(img: np.ndarray, path: str | Path) -> None:
    Image.fromarray(np.ascontiguousarray(img)).save(path, format="PPM")
    log.info(f"[Render] wrote {path} ({img.shape[1]}x{img.shape[0]})")

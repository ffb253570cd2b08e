from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config.settings import settings
from dynamics.ifs import IFSSpec
from dynamics.maps import (
    Affine1D, Affine2D, BaseMap, Moebius, PiecewiseQuad, PiecewiseQuadInverse, Projective3, Tabulated1D,
)
from geometry.grid import Grid, make_grid
from geometry.space import PROJECTIVE_PLANE, RIEMANN_SPHERE, parse_space
from relation.transition import PADDED, SAMPLED
from toolkit.presets import (
    ANTIPODAL_DISK, DIRECT, EQUIRECTANGULAR, FAMILY, PresetPayload, get_preset,
)
from utils.errors import ConfigurationError
from utils.logger import log

ATTRACTORS = "attractors"
REPELLER = "repeller"
CHAIN = "chain"
CMW = "cmw"
CODING = "coding"
CHAOS_TASK = "chaos"
RENDER = "render"
TASKS = (ATTRACTORS, REPELLER, CHAIN, CMW, CODING, CHAOS_TASK, RENDER)
NEEDS_INVERSE = (REPELLER, CMW)

TaskName = Literal["attractors", "repeller", "chain", "cmw", "coding", "chaos", "render"]
Row3 = Annotated[list[float], Field(min_length=3, max_length=3)]
Row2 = Annotated[list[float], Field(min_length=2, max_length=2)]
ComplexValue = Union[float, tuple[float, float]]      # number or [re, im]


def _complex(v: ComplexValue) -> complex:
    if isinstance(v, tuple):
        return complex(v[0], v[1])
    return complex(v)


# ── schema ───────────────────────────────────────────────────
class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Affine1DModel(_Strict):
    variant: Literal["affine1d"]
    a: float
    b: float = 0.0

    def build(self) -> BaseMap:
        return Affine1D(self.a, self.b)


class Affine2DModel(_Strict):
    variant: Literal["affine2d"]
    matrix: Annotated[list[Row2], Field(min_length=2, max_length=2)]
    t: Row2 = Field(default_factory=lambda: [0.0, 0.0])

    def build(self) -> BaseMap:
        return Affine2D(self.matrix, self.t)


class PiecewiseQuadModel(_Strict):
    variant: Literal["piecewise-quad"]

    def build(self) -> BaseMap:
        return PiecewiseQuad()


class PiecewiseQuadInverseModel(_Strict):
    variant: Literal["piecewise-quad-inverse"]

    def build(self) -> BaseMap:
        return PiecewiseQuadInverse()


class MoebiusModel(_Strict):
    variant: Literal["moebius"]
    a: ComplexValue
    b: ComplexValue
    c: ComplexValue
    d: ComplexValue

    def build(self) -> BaseMap:
        return Moebius(_complex(self.a), _complex(self.b), _complex(self.c), _complex(self.d))


class Projective3Model(_Strict):
    variant: Literal["projective3"]
    matrix: Annotated[list[Row3], Field(min_length=3, max_length=3)]
    invertible: Optional[bool] = None

    def build(self) -> BaseMap:
        return Projective3(self.matrix, self.invertible)


class Tabulated1DModel(_Strict):
    variant: Literal["tabulated1d"]
    xs: Annotated[list[float], Field(min_length=2)]
    ys: Annotated[list[float], Field(min_length=2)]

    def build(self) -> BaseMap:
        return Tabulated1D(self.xs, self.ys)


MapModel = Annotated[
    Union[Affine1DModel, Affine2DModel, PiecewiseQuadModel, PiecewiseQuadInverseModel,
          MoebiusModel, Projective3Model, Tabulated1DModel],
    Field(discriminator="variant"),
]


class SpaceModel(_Strict):
    kind: Literal["interval", "circle", "box2", "riemann-sphere", "projective-plane"]
    bounds: list[float] = Field(default_factory=list)


class IFSModel(_Strict):
    label: str = ""
    maps: Annotated[list[MapModel], Field(min_length=1)]


class RelationModel(_Strict):
    mode: Optional[Literal["sampled", "padded"]] = None
    padding: Optional[Annotated[float, Field(ge=0)]] = None
    samples_per_cell: Optional[Annotated[int, Field(ge=1)]] = None
    chain_mode: Optional[Literal["sampled", "padded"]] = None


class ScenarioFile(_Strict):
    """On-disk scenario (JSON)."""

    preset: Optional[str] = None
    m: Optional[Annotated[int, Field(ge=0)]] = None
    n: Optional[Annotated[int, Field(ge=0)]] = None
    space: Optional[SpaceModel] = None
    resolution: Optional[Annotated[list[int], Field(min_length=1, max_length=2)]] = None
    ifs: Optional[IFSModel] = None
    relation: RelationModel = Field(default_factory=RelationModel)
    tasks: Optional[list[TaskName]] = None
    output_dir: Optional[str] = None
    seed: Optional[int] = None
    epsilon: Optional[Annotated[float, Field(ge=0)]] = None
    image_size: Optional[Annotated[int, Field(ge=1)]] = None
    search: Optional[Literal["family", "chaos"]] = None
    projection: Optional[Literal["direct", "equirectangular", "antipodal-disk"]] = None
    notes: list[str] = Field(default_factory=list)


# ── resolved scenario ────────────────────────────────────────
@dataclass(frozen=True)
class Scenario:
    name: str
    ifs: IFSSpec
    grid: Grid
    relation_mode: str
    padding: Optional[float]
    samples_per_cell: int
    tasks: tuple[str, ...]
    output_dir: Path
    seed: int
    epsilon: Optional[float] = None
    chain_mode: Optional[str] = None             # relation mode for the chain graph, None = main relation
    image_size: int = 512
    search: str = FAMILY
    projection: str = DIRECT
    preset: Optional[str] = None
    notes: tuple[str, ...] = ()
    expectations: dict = field(default_factory=dict)
    forward_invariant: bool = True

    def with_overrides(self, output_dir: Optional[str | Path] = None, seed: Optional[int] = None,
                       tasks: Optional[list[str]] = None) -> "Scenario":
        changes = {}
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        if seed is not None:
            changes["seed"] = int(seed)
        if tasks is not None:
            changes["tasks"] = _check_tasks(tasks, self.ifs)
        return replace(self, **changes)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "preset": self.preset,
            "ifs": self.ifs.describe(),
            "resolution": list(self.grid.resolution),
            "grid_hash": self.grid.hash,
            "relation": {"mode": self.relation_mode, "padding": self.padding,
                         "samples_per_cell": self.samples_per_cell, "chain_mode": self.chain_mode},
            "tasks": list(self.tasks),
            "seed": self.seed,
            "epsilon": self.epsilon,
            "image_size": self.image_size,
            "search": self.search,
            "projection": self.projection,
            "notes": list(self.notes),
            "forward_invariant": self.forward_invariant,
        }


def _check_tasks(tasks, ifs: IFSSpec) -> tuple[str, ...]:
    unknown = [t for t in tasks if t not in TASKS]
    if unknown:
        raise ConfigurationError(f"unknown task(s) {unknown}; known: {', '.join(TASKS)}")
    if not ifs.invertible:
        blocked = [t for t in tasks if t in NEEDS_INVERSE]
        if blocked:
            raise ConfigurationError(f"task(s) {blocked} need an invertible IFS")
    return tuple(t for t in TASKS if t in tasks)


def _default_tasks(ifs: IFSSpec) -> tuple[str, ...]:
    if ifs.invertible:
        return TASKS
    return tuple(t for t in TASKS if t not in NEEDS_INVERSE)


def _default_projection(kind: str) -> str:
    if kind == RIEMANN_SPHERE:
        return EQUIRECTANGULAR
    if kind == PROJECTIVE_PLANE:
        return ANTIPODAL_DISK
    return DIRECT


def check_forward_invariance(ifs: IFSSpec, grid: Grid, per_axis: int = 3) -> bool:
    """Boundary cells of a bounded domain must map inside it; failure only warns."""
    space = ifs.space
    if not space.has_boundary:
        return True
    idx = np.indices(grid.resolution).reshape(len(grid.resolution), -1).T
    edge = np.any((idx == 0) | (idx == np.asarray(grid.resolution) - 1), axis=1)
    pts, _ = grid.boundary_lattice(per_axis, np.flatnonzero(edge))
    lows, highs = grid.lows, grid.highs
    tol = 1e-9 * np.maximum(1.0, highs - lows)
    for i, f in enumerate(ifs.maps, start=1):
        img = f.eval(space, pts)
        outside = np.any((img < lows - tol) | (img > highs + tol), axis=1)
        if outside.any():
            log.warning(f"[Scenario] map {i} sends {int(outside.sum())} boundary sample(s) outside the declared domain")
            return False
    return True


def _payload(model: ScenarioFile) -> PresetPayload:
    if model.preset is not None:
        preset = get_preset(model.preset)
        if preset.takes_mn:
            kwargs = {k: v for k, v in (("m", model.m), ("n", model.n)) if v is not None}
            return preset.build(**kwargs)
        if model.m is not None or model.n is not None:
            raise ConfigurationError(f"preset '{preset.name}' takes no m/n parameters")
        return preset.build()

    missing = [k for k in ("space", "resolution", "ifs") if getattr(model, k) is None]
    if missing:
        raise ConfigurationError(f"scenario needs 'preset' or all of space/resolution/ifs; missing {missing}")
    space = parse_space(model.space.kind, model.space.bounds)
    maps = []
    for i, m in enumerate(model.ifs.maps):
        try:
            maps.append(m.build())
        except ConfigurationError as exc:
            raise ConfigurationError(f"ifs.maps.{i}: {exc}") from exc
    return PresetPayload(space=space, resolution=tuple(model.resolution), maps=tuple(maps),
                         label=model.ifs.label or "custom", projection=_default_projection(space.kind))


def resolve(model: ScenarioFile, name: str = "scenario") -> Scenario:
    """Expand presets, build the IFS and grid, apply scenario overrides."""
    if model.preset is not None and (model.space is not None or model.ifs is not None):
        raise ConfigurationError("a preset fixes the space and the IFS; drop 'space'/'ifs' or 'preset'")
    payload = _payload(model)

    ifs = IFSSpec(payload.space, payload.maps, payload.label, payload.notes)
    grid = make_grid(payload.space, model.resolution or payload.resolution)
    tasks = _check_tasks(model.tasks, ifs) if model.tasks is not None else _default_tasks(ifs)
    mode = model.relation.mode or payload.relation_mode or settings.RELATION_MODE
    if mode not in (SAMPLED, PADDED):
        raise ConfigurationError(f"unknown relation mode '{mode}'")
    samples = model.relation.samples_per_cell or payload.samples_per_cell or settings.SAMPLES_PER_CELL

    projection = model.projection or payload.projection
    if projection == EQUIRECTANGULAR and payload.space.kind != RIEMANN_SPHERE:
        raise ConfigurationError("equirectangular projection needs the Riemann sphere")
    if projection == ANTIPODAL_DISK and payload.space.kind != PROJECTIVE_PLANE:
        raise ConfigurationError("antipodal-disk projection needs the projective plane")

    scenario = Scenario(
        name=name,
        ifs=ifs,
        grid=grid,
        relation_mode=mode,
        padding=model.relation.padding,
        samples_per_cell=int(samples),
        tasks=tasks,
        output_dir=Path(model.output_dir or Path(settings.OUTPUT_DIR) / name),
        seed=settings.SEED if model.seed is None else int(model.seed),
        epsilon=payload.epsilon if model.epsilon is None else model.epsilon,
        chain_mode=model.relation.chain_mode or payload.chain_mode,
        image_size=int(model.image_size or settings.IMAGE_SIZE),
        search=model.search or payload.search,
        projection=projection,
        preset=model.preset,
        notes=tuple(payload.notes) + tuple(model.notes),
        expectations=dict(payload.expectations),
        forward_invariant=check_forward_invariance(ifs, grid),
    )
    log.info(f"[Scenario] {name}: {ifs.label} on {grid!r}, tasks {list(tasks)}")
    return scenario


def _format_errors(exc: ValidationError, source: str) -> str:
    lines = []
    for err in exc.errors():
        if err["type"] == "json_invalid":
            lines.append(f"{source}: {err['msg']}")
            continue
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{source}: {where}: {err['msg']}")
    return "\n".join(lines)


def parse_scenario(text: str, source: str = "<scenario>", name: Optional[str] = None) -> Scenario:
    try:
        model = ScenarioFile.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigurationError(_format_errors(exc, source)) from exc
    return resolve(model, name or Path(source).stem)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"scenario file not found: {path}")
    return parse_scenario(path.read_text(encoding="utf-8"), source=str(path), name=path.stem)


def preset_scenario(name: str, **overrides) -> Scenario:
    """Scenario for a bundled preset with default settings (extra keys as in a scenario file)."""
    return resolve(ScenarioFile(preset=name, **overrides), name)

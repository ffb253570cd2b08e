from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from dynamics.maps import Affine1D, BaseMap, Moebius, PiecewiseQuad, Projective3
from geometry.space import Space
from relation.transition import SAMPLED
from utils.errors import ConfigurationError

FAMILY = "family"
CHAOS = "chaos"

DIRECT = "direct"
EQUIRECTANGULAR = "equirectangular"
ANTIPODAL_DISK = "antipodal-disk"


@dataclass(frozen=True)
class PresetPayload:
    """Everything a preset fixes; scenario keys may still override resolution and relation options."""

    space: Space
    resolution: tuple[int, ...]
    maps: tuple[BaseMap, ...]
    label: str
    relation_mode: Optional[str] = None
    samples_per_cell: Optional[int] = None
    chain_mode: Optional[str] = None
    epsilon: Optional[float] = None
    search: str = FAMILY
    projection: str = DIRECT
    notes: tuple[str, ...] = ()
    expectations: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    build: Callable[..., PresetPayload]
    takes_mn: bool = False


def _ex_multiple(m: int = 2, n: int = 3) -> PresetPayload:
    if m < 0 or n < 0:
        raise ConfigurationError(f"ex-multiple needs m, n >= 0, got m={m}, n={n}")
    return PresetPayload(
        space=Space.interval(-m - 0.6, n + 0.6),
        resolution=(2000,),
        maps=(PiecewiseQuad(),),
        label=f"ex-multiple(m={m}, n={n})",
        chain_mode=SAMPLED,
        epsilon=0.0,
        notes=(
            "every [-m', n'] with 0 <= m' <= m, 0 <= n' <= n is an attractor",
            "chain recurrence on the sampled relation with epsilon 0 keeps R on the integer cells",
        ),
        expectations={"min_attractors": (m + 1) * (n + 1), "recurrent_points": list(range(-m, n + 1))},
    )


def _ex_proj_line() -> PresetPayload:
    return PresetPayload(
        space=Space.projective_plane(),
        resolution=(64, 64),
        maps=(Projective3(np.diag([1.0, 2.0, 2.0])),),
        label="ex-proj-line",
        relation_mode=SAMPLED,
        samples_per_cell=3,
        projection=ANTIPODAL_DISK,
        notes=(
            "map diag(1,2,2): the line x = 0 attracts forward orbits",
            "diag(2,1,1) is the inverse orientation; under it the line is the repeller",
        ),
        expectations={"strict": "not_strict"},
    )


def _ex_rotation() -> PresetPayload:
    return PresetPayload(
        space=Space.circle(),
        resolution=(360,),
        maps=(Moebius(1j, 0, 0, 1),),
        label="ex-rotation",
        relation_mode=SAMPLED,
        samples_per_cell=1,
        notes=("rotation by a quarter turn: no proper attractor",),
        expectations={"no_proper_block": True, "chain_recurrent_everywhere": True},
    )


def _paper_projective_pair() -> PresetPayload:
    f1 = [[41, -19, 19], [-19, 41, 19], [19, 19, 41]]
    f2 = [[-10, -1, 19], [-10, 21, 1], [10, 10, 10]]
    return PresetPayload(
        space=Space.projective_plane(),
        resolution=(128, 128),
        maps=(Projective3(f1), Projective3(f2)),
        label="paper-projective-pair",
        relation_mode=SAMPLED,
        samples_per_cell=3,
        search=CHAOS,
        projection=ANTIPODAL_DISK,
        notes=(
            "two projective maps with a unique nontrivial strict attractor made of lines",
            "f1 fixes the line orthogonal to (1, 1, -1) pointwise, so the fibers along 111... do not shrink",
        ),
        expectations={"chaos_containment": 1.0},
    )


def _moebius_demo() -> PresetPayload:
    return PresetPayload(
        space=Space.riemann_sphere(),
        resolution=(32, 64),
        maps=(Moebius(0.5 + 0.3j, 0.6, 0, 1), Moebius(0.5 - 0.3j, -0.6, 0, 1)),
        label="moebius-demo",
        search=CHAOS,
        projection=EQUIRECTANGULAR,
        notes=("representative loxodromic pair, not a reproduction of published maps",),
        expectations={"point_fibered": True},
    )


def _contractive_halves() -> PresetPayload:
    return PresetPayload(
        space=Space.interval(0.0, 1.0),
        resolution=(256,),
        maps=(Affine1D(0.5, 0.0), Affine1D(0.5, 0.5)),
        label="contractive-halves",
        notes=("x/2 and x/2 + 1/2: the attractor is the whole interval",),
        expectations={"point_fibered": True, "chaos_containment": 1.0},
    )


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset("ex-multiple", "piecewise quadratic map fixing every integer; parameters m, n", _ex_multiple, True),
        Preset("ex-proj-line", "projective map diag(1,2,2) whose attractor is a line", _ex_proj_line),
        Preset("ex-rotation", "quarter-turn rotation of the circle", _ex_rotation),
        Preset("paper-projective-pair", "two projective maps with a fractal attractor", _paper_projective_pair),
        Preset("moebius-demo", "two loxodromic Moebius maps on the Riemann sphere", _moebius_demo),
        Preset("contractive-halves", "x/2 and x/2 + 1/2 on [0, 1]", _contractive_halves),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset '{name}'; known presets: {', '.join(sorted(PRESETS))}") from None

from __future__ import annotations

from dataclasses import dataclass

from dynamics.ifs import IFSSpec
from dynamics.maps import BaseMap
from geometry.cellset import CellSet
from geometry.grid import Grid
from utils.errors import ContractError


def lipschitz_estimate(f: BaseMap, grid: Grid, S: CellSet) -> float:
    """
    Upper estimate of sup d(f(x), f(y)) / d(x, y) over the cells of S.

    Analytic derivative bounds for the affine, quadratic and tabulated
    variants; inflated samples for Moebius and projective maps.
    """
    if S.is_empty:
        raise ContractError("lipschitz_estimate needs a nonempty cell set")
    return f.set_lipschitz(grid, S.indices)


@dataclass(frozen=True)
class Contractivity:
    per_map: tuple[float, ...]
    bound: float
    contractive: bool
    rigorous: bool

    def to_dict(self) -> dict:
        return {
            "per_map": list(self.per_map),
            "bound": self.bound,
            "contractive": self.contractive,
            "rigorous": self.rigorous,
        }


def contractivity(ifs: IFSSpec, grid: Grid, S: CellSet) -> Contractivity:
    """Largest Lipschitz estimate over the maps on S; contractive when below 1."""
    per_map = tuple(lipschitz_estimate(f, grid, S) for f in ifs.maps)
    bound = max(per_map)
    return Contractivity(
        per_map=per_map,
        bound=bound,
        contractive=bound < 1.0,
        rigorous=all(f.lipschitz_bound(grid, S.indices)[1] for f in ifs.maps),
    )

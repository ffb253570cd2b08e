from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dynamics.maps import BaseMap
from geometry.space import Space
from utils.errors import CapabilityError, ConfigurationError


@dataclass(frozen=True)
class IFSSpec:
    """F = (X; f_1, ..., f_N). Maps are listed in letter order (letter n -> maps[n-1])."""

    space: Space
    maps: tuple[BaseMap, ...]
    label: str = ""
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps:
            raise ConfigurationError("an IFS needs at least one map")
        for f in self.maps:
            f.check_space(self.space)

    @property
    def n_maps(self) -> int:
        return len(self.maps)

    @property
    def invertible(self) -> bool:
        return all(f.invertible for f in self.maps)

    def eval(self, letter: int, p) -> np.ndarray:
        """Apply map number `letter` (1-based) to canonical points."""
        return self.maps[letter - 1].eval(self.space, p)

    def image_points(self, p) -> np.ndarray:
        """Union of the images of p under every map, stacked in map order."""
        return np.vstack([f.eval(self.space, p) for f in self.maps])

    def invert(self) -> "IFSSpec":
        inverses = []
        for i, f in enumerate(self.maps, start=1):
            inv = f.inverse()
            if inv is None:
                raise CapabilityError(f"map {i} ({f.variant}) of '{self.label}' is not invertible")
            inverses.append(inv)
        return IFSSpec(self.space, tuple(inverses), f"{self.label}*", self.notes)

    def describe(self) -> dict:
        return {
            "label": self.label,
            "space": {"kind": self.space.kind, "bounds": list(self.space.bounds)},
            "maps": [f.describe() for f in self.maps],
            "invertible": self.invertible,
        }


def invert(ifs: IFSSpec) -> IFSSpec:
    return ifs.invert()

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from config.settings import settings
from dynamics.ifs import IFSSpec
from geometry.space import CIRCLE, Space
from utils.errors import ContractError
from utils.logger import log


@dataclass(frozen=True)
class ChaosTrace:
    """Orbit points kept after burn-in, with the letter that produced each one."""

    points: np.ndarray
    letters: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def frame(self, space: Space) -> pd.DataFrame:
        pts = self.points
        if np.iscomplexobj(pts):
            cols = {}
            for k in range(pts.shape[1]):
                cols[f"z{k + 1}_re"] = pts[:, k].real
                cols[f"z{k + 1}_im"] = pts[:, k].imag
        else:
            names = ["x", "y", "z"] if space.dim > 1 else ["theta" if space.kind == CIRCLE else "x"]
            cols = {names[k]: pts[:, k] for k in range(pts.shape[1])}
        return pd.DataFrame({"letter": self.letters, **cols})

    def to_csv(self, path: str | Path, space: Space) -> None:
        self.frame(space).to_csv(path, index=False, float_format="%.17g")


def chaos_game(ifs: IFSSpec, x0, n_steps: Optional[int] = None, burn_in: Optional[int] = None,
               seed: Optional[int] = None) -> ChaosTrace:
    """Random orbit x <- f_n(x) with seeded letters; the first burn_in points are dropped."""
    n_steps = int(settings.CHAOS_STEPS if n_steps is None else n_steps)
    burn_in = int(settings.CHAOS_BURN_IN if burn_in is None else burn_in)
    if burn_in < 0 or n_steps <= burn_in:
        raise ContractError(f"chaos game needs n_steps > burn_in >= 0, got {n_steps}, {burn_in}")

    rng = np.random.default_rng(settings.SEED if seed is None else int(seed))
    letters = rng.integers(1, ifs.n_maps + 1, size=n_steps)
    x = ifs.space.canonical(x0)[:1]
    out = np.empty((n_steps - burn_in, x.shape[1]), dtype=x.dtype)
    for step, letter in enumerate(letters):
        x = ifs.eval(int(letter), x)
        if step >= burn_in:
            out[step - burn_in] = x[0]
    log.info(f"[Coding] chaos game: {len(out)} point(s) after {burn_in} burn-in step(s)")
    return ChaosTrace(out, letters[burn_in:])

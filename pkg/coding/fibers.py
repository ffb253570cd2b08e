from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from coding.address import Address
from config.settings import settings
from dynamics.ifs import IFSSpec
from geometry.cellset import CellSet
from utils.errors import ContractError
from utils.logger import log

POINT_FIBERED = "point_fibered"
NOT_POINT_FIBERED = "not_point_fibered"
INCONCLUSIVE = "inconclusive"


def fiber(ifs: IFSSpec, sigma: Address, depth: int, x) -> np.ndarray:
    """
    f_{sigma_1} o f_{sigma_2} o ... o f_{sigma_depth} applied to x.
    sigma_depth acts first. Returns canonical points, one row per start.
    """
    if depth < 1:
        raise ContractError(f"fiber depth must be >= 1, got {depth}")
    pts = ifs.space.canonical(x)
    for letter in sigma.letters(depth)[::-1]:
        pts = ifs.eval(int(letter), pts)
    return pts


def _diameter(ifs: IFSSpec, pts: np.ndarray) -> tuple[float, int, int]:
    ii, jj = np.triu_indices(len(pts), 1)
    d = ifs.space.pairwise(pts[ii], pts[jj])
    k = int(np.argmax(d))
    return float(d[k]), int(ii[k]), int(jj[k])


def _point_json(p) -> list:
    arr = np.asarray(p)
    if np.iscomplexobj(arr):
        return [[float(v.real), float(v.imag)] for v in arr]
    return [float(v) for v in arr]


@dataclass
class FiberReport:
    """
    Sampled point-fibered test. `diameters[k]` is the largest diameter of
    f_{sigma|k}(starts) over the sampled addresses (k = 0 is the start set).
    """

    n_addresses: int
    n_points: int
    depth: int
    tol: float
    verdict: str
    diameters: np.ndarray
    final: np.ndarray                      # per address at full depth
    rate: float
    addresses: list[Address] = field(default_factory=list)
    starts: Optional[np.ndarray] = None
    witness: Optional[dict] = None

    @property
    def point_fibered(self) -> bool:
        return self.verdict == POINT_FIBERED

    def truncation_bound(self, depth: int) -> float:
        """rate^depth * initial diameter; infinite without a contraction rate."""
        if not self.rate < 1.0:
            return math.inf
        return float(self.rate ** depth * self.diameters[0])

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({"depth": np.arange(len(self.diameters)), "diameter": self.diameters})

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "addresses": self.n_addresses,
            "points": self.n_points,
            "depth": self.depth,
            "tol": self.tol,
            "rate": self.rate,
            "diameters": [float(d) for d in self.diameters],
            "witness": self.witness,
        }


def point_fibered_test(ifs: IFSSpec, region: CellSet, n_addresses: Optional[int] = None,
                       n_points: Optional[int] = None, depth: Optional[int] = None,
                       tol: Optional[float] = None, seed: Optional[int] = None) -> FiberReport:
    """
    Shrink test for the fibers of sampled addresses.

    Starts are the centers of cells drawn from `region`. The verdict is
    point_fibered when every address ends below tol, not_point_fibered when
    some address ends above tol without having shrunk below its depth-1
    diameter (that address and pair of starts is the witness), and
    inconclusive otherwise.
    """
    n_addresses = int(settings.FIBER_ADDRESSES if n_addresses is None else n_addresses)
    n_points = int(settings.FIBER_POINTS if n_points is None else n_points)
    depth = int(settings.FIBER_DEPTH if depth is None else depth)
    tol = float(settings.FIBER_TOL if tol is None else tol)
    if region.is_empty:
        raise ContractError("point_fibered_test needs a nonempty region")
    if n_addresses < 2 or n_points < 2:
        raise ContractError("point_fibered_test needs at least 2 addresses and 2 start points")
    if depth < 2:
        raise ContractError(f"point_fibered_test needs depth >= 2, got {depth}")

    root = np.random.SeedSequence(settings.SEED if seed is None else int(seed))
    start_seq, *address_seqs = root.spawn(n_addresses + 1)
    cells = np.random.default_rng(start_seq).choice(region.indices, size=n_points, replace=len(region) < n_points)
    starts = region.grid.centers[cells]

    addresses = [Address.random(ifs.n_maps, int(s.generate_state(1)[0])) for s in address_seqs]
    table = np.zeros((n_addresses, depth + 1))
    pairs = np.zeros((n_addresses, 2), dtype=np.int64)
    for a, sigma in enumerate(addresses):
        table[a, 0], _, _ = _diameter(ifs, starts)
        for k in range(1, depth + 1):
            table[a, k], i, j = _diameter(ifs, fiber(ifs, sigma, k, starts))
        pairs[a] = (i, j)

    diameters = table.max(axis=0)
    final = table[:, depth]
    if diameters[1] > 0:
        rate = float((diameters[depth] / diameters[1]) ** (1.0 / (depth - 1)))
    else:
        rate = 0.0

    witness = None
    if np.all(final < tol):
        verdict = POINT_FIBERED
    else:
        stuck = np.flatnonzero((final > tol) & (final >= table[:, 1] - tol))
        if len(stuck):
            a = int(stuck[np.argmax(final[stuck])])
            i, j = pairs[a]
            verdict = NOT_POINT_FIBERED
            witness = {
                "address": addresses[a].word(min(depth, 24)),
                "points": [_point_json(starts[i]), _point_json(starts[j])],
                "diameter": float(final[a]),
            }
        else:
            verdict = INCONCLUSIVE

    log.info(f"[Coding] point-fibered test: {verdict}, final diameter {diameters[depth]:.3g}, rate {rate:.3g}")
    return FiberReport(n_addresses, n_points, depth, tol, verdict, diameters, final, rate,
                       addresses, starts, witness)


@dataclass
class CommuteReport:
    passed: bool
    depth: int
    bound: float
    max_error: float
    errors: np.ndarray                      # (address, letter)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "depth": self.depth,
            "bound": self.bound,
            "max_error": self.max_error,
            "per_letter_max": [float(e) for e in self.errors.max(axis=0)],
        }


def coding_commute_check(ifs: IFSSpec, report: FiberReport, n_addresses: Optional[int] = None,
                         depth: Optional[int] = None, tol: Optional[float] = None,
                         same_start: bool = False) -> CommuteReport:
    """
    Finite-depth check of pi(n sigma) = f_n(pi(sigma)) for each letter n.

    Compares fiber(n sigma, depth + 1, x) with f_n(fiber(sigma, depth, y)).
    With y = x both sides are the same composition and agree to rounding, so
    y is a second sampled start and the check holds only when fibers forget
    their start. The allowed error is tol plus twice the truncation bound
    from the measured contraction rate. `same_start=True` runs the
    single-start form instead.
    """
    if report is None or not report.point_fibered:
        raise ContractError("coding_commute_check needs a point_fibered report", report=report)
    available = min(report.n_addresses, len(report.addresses))
    n_addresses = available if n_addresses is None else int(n_addresses)
    depth = report.depth if depth is None else int(depth)
    tol = float(report.tol if tol is None else tol)
    if not 1 <= n_addresses <= available:
        raise ContractError(f"coding_commute_check needs 1..{available} addresses, got {n_addresses}")
    if depth < 1:
        raise ContractError(f"coding_commute_check needs depth >= 1, got {depth}")

    x = report.starts[:1]
    y = x if same_start else report.starts[-1:]
    errors = np.zeros((n_addresses, ifs.n_maps))
    for a, sigma in enumerate(report.addresses[:n_addresses]):
        inner = fiber(ifs, sigma, depth, y)
        for n in range(1, ifs.n_maps + 1):
            lhs = fiber(ifs, sigma.prepend(n), depth + 1, x)
            rhs = ifs.eval(n, inner)
            errors[a, n - 1] = float(ifs.space.pairwise(lhs, rhs)[0])

    bound = tol + 2.0 * report.truncation_bound(depth)
    worst = float(errors.max())
    passed = worst <= bound
    log.info(f"[Coding] coding map commutes: {passed} (max error {worst:.3g}, bound {bound:.3g})")
    return CommuteReport(passed, depth, bound, worst, errors)

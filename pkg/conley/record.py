from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from config.settings import settings
from conley.blocks import attractor_from_block, basin, is_block, omega_limit
from geometry.cellset import CellSet
from relation.transition import TransitionRelation
from utils.errors import ContractError

STRICT = "strict"
NOT_STRICT = "not_strict"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class StrictVerdict:
    verdict: str
    checked: int
    candidates: int
    witness: Optional[int] = None
    witness_omega: Optional[CellSet] = None

    def to_dict(self, grid=None) -> dict:
        out = {"verdict": self.verdict, "checked": self.checked, "candidates": self.candidates,
               "witness": self.witness}
        if self.witness is not None:
            out["witness_omega"] = self.witness_omega.indices.tolist()
            if grid is not None:
                out["witness_center"] = _point_json(grid.centers[self.witness])
        return out


def _point_json(p) -> list:
    arr = np.asarray(p)
    if np.iscomplexobj(arr):
        return [[float(v.real), float(v.imag)] for v in arr]
    return [float(v) for v in arr]


def is_strict(rel: TransitionRelation, A: CellSet, B: CellSet, sample_budget: Optional[int] = None,
              seed: Optional[int] = None) -> StrictVerdict:
    """
    Compare omega({c}) with A for singleton cells c of B.

    Cells of B outside A are tried first. A violation whose omega is a proper
    subset of A is preferred as the witness; otherwise the first violation is
    returned. Exhausting all of B without a violation gives `strict`, a
    partial sample gives `inconclusive`.
    """
    if not A <= B:
        raise ContractError("is_strict needs A inside B")
    budget = int(settings.STRICT_SAMPLE_BUDGET if sample_budget is None else sample_budget)
    if budget < 1:
        raise ContractError(f"strictness sample budget must be >= 1, got {budget}")
    rng = np.random.default_rng(settings.SEED if seed is None else seed)

    outer, inner = (B - A).indices, A.indices
    pool = np.concatenate([outer, inner])
    exhaustive = len(pool) <= budget
    if not exhaustive:
        take_outer = min(len(outer), budget)
        picked_outer = np.sort(rng.choice(outer, size=take_outer, replace=False)) if take_outer else outer[:0]
        rest = budget - take_outer
        picked_inner = np.sort(rng.choice(inner, size=rest, replace=False)) if rest else inner[:0]
        pool = np.concatenate([picked_outer, picked_inner])

    first: Optional[tuple[int, CellSet]] = None
    checked = 0
    for cell in pool:
        checked += 1
        omega = omega_limit(rel, CellSet.from_indices(rel.grid, [int(cell)]))
        if omega == A:
            continue
        if omega <= A:
            return StrictVerdict(NOT_STRICT, checked, len(B), int(cell), omega)
        if first is None:
            first = (int(cell), omega)

    if first is not None:
        return StrictVerdict(NOT_STRICT, checked, len(B), first[0], first[1])
    return StrictVerdict(STRICT if exhaustive else INCONCLUSIVE, checked, len(B))


@dataclass
class ConleyRecord:
    """One attractor's dossier: block Q, attractor A, basin B, dual A*, strictness."""

    block: CellSet
    attractor: CellSet
    basin: CellSet
    dual: Optional[CellSet] = None
    strict: Optional[StrictVerdict] = None
    provenance: dict = field(default_factory=dict)

    def check(self, rel: TransitionRelation) -> list[str]:
        """Violated record invariants (empty when the record is consistent)."""
        problems = []
        if not self.attractor <= self.block:
            problems.append("attractor not inside block")
        if not self.attractor <= self.basin:
            problems.append("attractor not inside basin")
        if rel.image(self.attractor) != self.attractor:
            problems.append("image(attractor) != attractor")
        if attractor_from_block(rel, self.block, check=False) != omega_limit(rel, self.block):
            problems.append("block attractor differs from omega limit of the block")
        if self.dual is not None:
            if not (self.dual & self.basin).is_empty:
                problems.append("dual meets basin")
            if not (self.dual & self.attractor).is_empty:
                problems.append("dual meets attractor")
            outside = ~self.block
            if not rel.reverse().image(outside) <= outside:
                problems.append("complement of block not forward-invariant under the reversed relation")
        return problems

    def summary(self) -> dict:
        grid = self.attractor.grid
        out = {
            "block": len(self.block),
            "attractor": len(self.attractor),
            "basin": len(self.basin),
            "dual": None if self.dual is None else len(self.dual),
            "provenance": self.provenance,
        }
        if self.strict is not None:
            out["strict"] = self.strict.to_dict(grid)
        return out

    def export(self, directory: Path, tag: str) -> None:
        self.block.to_csv(directory / f"{tag}_block.csv")
        self.attractor.to_csv(directory / f"{tag}_attractor.csv")
        self.basin.to_csv(directory / f"{tag}_basin.csv")
        if self.dual is not None:
            self.dual.to_csv(directory / f"{tag}_dual.csv")


def build_record(rel: TransitionRelation, Q: CellSet, provenance: Optional[dict] = None) -> ConleyRecord:
    """Record for a certified block: attractor and basin filled in, dual and strictness left to callers."""
    report = is_block(rel, Q)
    if not report:
        raise ContractError("build_record needs an attractor block", report=report)
    A = attractor_from_block(rel, Q, check=False)
    return ConleyRecord(block=Q, attractor=A, basin=basin(rel, A), provenance=dict(provenance or {}))

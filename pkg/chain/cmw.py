from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Optional

import numpy as np

from chain.graph import ChainGraph, chain_recurrent
from config.settings import settings
from conley.blocks import find_block, omega_limit
from geometry.cellset import CellSet
from relation.transition import TransitionRelation
from utils.errors import BlockNotFoundError, CapabilityError, ContractError
from utils.logger import log

PASS = "pass"
PASS_PAIRS = "pass (pairs only)"
FAIL = "fail"


@dataclass(frozen=True)
class BasicAttractor:
    component: int
    cells: CellSet
    has_block: bool                   # a block exists for it in the base relation


def basic_attractors(cg: ChainGraph) -> list[BasicAttractor]:
    """
    Forward closure of every recurrent component, deduplicated. Each closure
    is invariant under the chain graph; `has_block` reports whether its omega
    limit under the base relation is certified by a block.
    """
    full = CellSet.full(cg.grid)
    seen: dict[bytes, BasicAttractor] = {}
    for comp in np.flatnonzero(cg.recurrent):
        cells = cg.graph.forward_closure(cg.component(int(comp)))
        if cells.key() in seen:
            continue
        try:
            find_block(cg.base, omega_limit(cg.base, cells), full)
            blocked = True
        except BlockNotFoundError:
            blocked = False
        seen[cells.key()] = BasicAttractor(int(comp), cells, blocked)
    return sorted(seen.values(), key=lambda b: (int(b.cells.indices[0]), len(b.cells)))


def chain_dual(cg: ChainGraph, A: CellSet) -> CellSet:
    """
    Dual of a forward-closed A on the chain graph: cells from which a
    recurrent component outside A is reachable (a backward sweep).
    """
    outside = cg.recurrent.copy()
    hit = np.zeros(cg.n_components, dtype=bool)
    np.logical_or.at(hit, cg.labels, ~A.mask)
    seeds = CellSet(cg.grid, (outside & hit)[cg.labels])
    return cg.graph.backward_closure(seeds)


@dataclass
class CMWReport:
    epsilon: float
    status: str
    exhaustive: bool
    R: CellSet
    I: CellSet
    difference: CellSet
    family: list[tuple[CellSet, CellSet]] = field(default_factory=list)   # (A, A*)
    basics: list[BasicAttractor] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def summary(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "status": self.status,
            "exhaustive": self.exhaustive,
            "basic_attractors": [
                {"component": b.component, "cells": len(b.cells), "has_block": b.has_block} for b in self.basics
            ],
            "family_size": len(self.family),
            "chain_recurrent": len(self.R),
            "intersection": len(self.I),
            "difference": self.difference.indices.tolist(),
        }

    def export(self, directory: Path) -> None:
        self.R.to_csv(directory / "cmw_R.csv")
        self.I.to_csv(directory / "cmw_I.csv")
        self.difference.to_csv(directory / "cmw_diff.csv")
        for i, (A, dual) in enumerate(self.family):
            A.to_csv(directory / f"cmw_A_{i:03d}.csv")
            dual.to_csv(directory / f"cmw_dual_{i:03d}.csv")


def cmw_verify(cg: ChainGraph, rel: Optional[TransitionRelation] = None, cap: Optional[int] = None) -> CMWReport:
    """
    Intersect A | A* over the union-closure of the basic attractors and
    compare with the chain-recurrent set. More than `cap` basics fall back
    to singles and pairs, downgrading a pass to "pass (pairs only)".
    """
    rel = rel or cg.base
    if not rel.meta.invertible:
        raise CapabilityError("cmw_verify needs an invertible IFS")
    cap = int(settings.CMW_CAP if cap is None else cap)
    if cap < 1:
        raise ContractError(f"cmw cap must be >= 1, got {cap}")
    grid = cg.grid

    basics = basic_attractors(cg)
    exhaustive = len(basics) <= cap
    if not exhaustive:
        log.warning(f"[Chain] {len(basics)} basic attractors exceed cap {cap}; intersecting over pairs only")
    sizes = range(0, len(basics) + 1) if exhaustive else (0, 1, 2)

    family: dict[bytes, tuple[CellSet, CellSet]] = {}
    for k in sizes:
        for combo in combinations(basics, k):
            mask = np.zeros(grid.size, dtype=bool)
            for b in combo:
                mask |= b.cells.mask
            A = CellSet(grid, mask)
            if A.key() not in family:
                family[A.key()] = (A, chain_dual(cg, A))

    I = CellSet.full(grid)
    for A, dual in family.values():
        I = I & (A | dual)
    R = chain_recurrent(cg)
    diff = I ^ R
    if not diff.is_empty:
        status = FAIL
    else:
        status = PASS if exhaustive else PASS_PAIRS

    members = sorted(family.values(), key=lambda pair: (len(pair[0]), pair[0].key()))
    log.info(f"[Chain] cmw: {len(basics)} basic, {len(members)} attractors, |R|={len(R)}, |I|={len(I)} -> {status}")
    return CMWReport(cg.epsilon, status, exhaustive, R, I, diff, members, basics)

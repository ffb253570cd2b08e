from __future__ import annotations

from itertools import combinations

import numpy as np

from config.settings import settings
from conley.blocks import attractor_from_block, find_block, omega_limit
from geometry.cellset import CellSet
from relation.transition import TransitionRelation
from utils.errors import BlockNotFoundError, ContractError
from utils.logger import log


def _sort_key(S: CellSet) -> tuple:
    idx = S.indices
    return (len(idx), int(idx[0]) if len(idx) else -1, S.key())


def attractor_family(rel: TransitionRelation, cap: int | None = None) -> list[tuple[CellSet, CellSet]]:
    """
    Certified (attractor, block) pairs of the relation.

    One candidate per recurrent component (omega limit of its forward closure),
    kept when its smallest block reproduces it; then closed under unions of up
    to `cap` generators. The global attractor of the whole space is always
    included. Sorted by size, then by first cell.
    """
    cap = int(settings.CMW_CAP if cap is None else cap)
    if cap < 1:
        raise ContractError(f"union cap must be >= 1, got {cap}")
    grid = rel.grid
    full = CellSet.full(grid)
    count, labels, recurrent = rel.components()

    generators: dict[bytes, tuple[CellSet, CellSet]] = {}
    failures = 0
    for comp in np.flatnonzero(recurrent):
        seed = CellSet(grid, labels == comp)
        candidate = omega_limit(rel, rel.forward_closure(seed))
        if candidate.key() in generators:
            continue
        try:
            block = find_block(rel, candidate, full)
        except BlockNotFoundError:
            failures += 1
            continue
        generators[candidate.key()] = (candidate, block)

    if failures:
        log.warning(f"[Conley] {failures} recurrent component(s) gave no certified attractor")

    family = dict(generators)
    gens = sorted(generators.values(), key=lambda pair: _sort_key(pair[0]))
    if len(gens) > cap:
        log.warning(f"[Conley] {len(gens)} generators exceed cap {cap}; unions use pairs only")
        sizes = [2]
    else:
        sizes = range(2, len(gens) + 1)
    for k in sizes:
        for combo in combinations(gens, k):
            A = combo[0][0]
            Q = combo[0][1]
            for a, q in combo[1:]:
                A, Q = A | a, Q | q
            family.setdefault(A.key(), (A, Q))

    global_attractor = attractor_from_block(rel, full, check=False)
    family.setdefault(global_attractor.key(), (global_attractor, full))

    out = sorted(family.values(), key=lambda pair: _sort_key(pair[0]))
    log.info(f"[Conley] attractor family: {len(out)} member(s) from {len(gens)} generator(s)")
    return out

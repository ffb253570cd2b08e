from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from geometry.cellset import CellSet, hausdorff
from relation.transition import TransitionRelation, strongly_connected
from utils.errors import BlockNotFoundError, CapabilityError, ContractError
from utils.logger import log


def interior(Q: CellSet) -> CellSet:
    """
    Cells of Q all of whose grid neighbors lie in Q. Neighbors missing at a
    domain boundary count as inside.
    """
    outside = (~Q.mask).astype(np.int32)
    touches = Q.grid.neighbors @ outside > 0
    return CellSet(Q.grid, Q.mask & ~touches)


def neighborhood(S: CellSet) -> CellSet:
    """S plus all of its grid neighbors."""
    return CellSet(S.grid, S.grid.closed_neighborhood(S.mask))


@dataclass(frozen=True)
class BlockReport:
    ok: bool
    offending: CellSet                 # image(Q) minus interior(Q)
    image_size: int = 0

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "offending": self.offending.indices.tolist(), "image_size": self.image_size}


def is_block(rel: TransitionRelation, Q: CellSet) -> BlockReport:
    """Q is an attractor block iff image(Q) lies in interior(Q)."""
    img = rel.image(Q)
    bad = img - interior(Q)
    return BlockReport(ok=bad.is_empty, offending=bad, image_size=len(img))


def attractor_from_block(rel: TransitionRelation, Q: CellSet, check: bool = True) -> CellSet:
    """
    A_0 = Q, A_{k+1} = image(A_k) & Q until stable. The sequence descends, so
    it stops after at most |Q| steps and the limit satisfies image(A) = A.
    """
    if check:
        report = is_block(rel, Q)
        if not report:
            raise ContractError(f"not an attractor block: {len(report.offending)} image cell(s) outside the interior",
                                report=report)
    current = Q
    while True:
        nxt = rel.image(current) & Q
        if nxt == current:
            return current
        current = nxt


def omega_limit(rel: TransitionRelation, S: CellSet, max_steps: Optional[int] = None) -> CellSet:
    """Union of one period of the eventually periodic sequence image^k(S)."""
    if S.is_empty:
        raise ContractError("omega_limit needs a nonempty cell set")
    seen: dict[bytes, int] = {}
    history: list[CellSet] = []
    current = S
    limit = max_steps if max_steps is not None else 1 << 62
    for step in range(limit):
        key = current.key()
        if key in seen:
            period = history[seen[key]:]
            mask = np.logical_or.reduce([c.mask for c in period])
            return CellSet(S.grid, mask)
        seen[key] = step
        history.append(current)
        current = rel.image(current)
    raise ContractError(f"omega_limit did not cycle within {limit} steps")


def find_block(rel: TransitionRelation, A: CellSet, N: CellSet) -> CellSet:
    """
    Smallest attractor block around A, required to lie in N.

    O_0 = A, O_{k+1} = neighborhood(image(O_k)), Q = union of the O_k: the
    forward closure of A under c -> neighborhood(F#(c)). A set is a block
    exactly when it is closed under that step, so every block containing A
    contains Q, and failure here means no block for A inside N exists on this
    grid. Shrinking N through preimage_all decides the same existence
    question but ends at the largest block inside N instead.
    """
    if not A <= N:
        raise ContractError("find_block needs A inside N")
    if rel.image(A) != A:
        raise ContractError("find_block needs image(A) = A")

    Q = A
    layer = A
    steps = 0
    while True:
        layer = neighborhood(rel.image(layer))
        steps += 1
        if not layer <= N:
            raise BlockNotFoundError(
                f"block growth left the neighborhood after {steps} step(s)",
                {"steps": steps, "escaped": (layer - N).indices[:16].tolist(), "grown": len(Q)},
            )
        if layer <= Q:
            break
        Q = Q | layer

    attractor = attractor_from_block(rel, Q, check=False)
    if attractor != A:
        raise BlockNotFoundError(
            "the smallest block around A has a larger attractor",
            {"steps": steps, "block": len(Q), "attractor": len(attractor), "target": len(A)},
        )
    return Q


def basin(rel: TransitionRelation, A: CellSet) -> CellSet:
    """
    Cells all of whose reachable recurrent components lie in A: the
    complement of the backward closure of every other recurrent component.
    """
    if rel.image(A) != A:
        raise ContractError("basin needs image(A) = A")
    count, labels, recurrent = rel.components()
    inside = np.ones(count, dtype=bool)
    np.logical_and.at(inside, labels, A.mask)
    bad = recurrent & ~inside
    seeds = CellSet(A.grid, bad[labels])
    return ~rel.backward_closure(seeds)


def dual_repeller(rel: TransitionRelation, Q: CellSet, check: bool = True) -> CellSet:
    """
    Attractor of the reversed relation grown from the complement of the block Q.
    Q must be a block of `rel`; with check=False the caller vouches for it.
    """
    if not rel.meta.invertible:
        raise CapabilityError("dual repeller needs an invertible IFS")
    if check:
        report = is_block(rel, Q)
        if not report:
            raise ContractError(f"dual repeller needs a block: {len(report.offending)} image cell(s) "
                                f"outside the interior", report=report)
    return attractor_from_block(rel.reverse(), ~Q, check=False)


@dataclass(frozen=True)
class NoBlockCertificate:
    """Blocks are the forward-closed sets of the graph c -> neighborhood(F#(c))."""

    proper_block_exists: bool
    components: int
    example_block: Optional[CellSet] = None

    def to_dict(self) -> dict:
        return {
            "proper_block_exists": self.proper_block_exists,
            "components": self.components,
            "example_block_size": None if self.example_block is None else len(self.example_block),
        }


def no_block_certificate(rel: TransitionRelation) -> NoBlockCertificate:
    """
    A proper nonempty block exists iff the block graph is not strongly
    connected; the forward closure of a sink component is then one.
    """
    grid = rel.grid
    closed = grid.neighbors + sparse.identity(grid.size, dtype=np.int32, format="csr")
    block_graph = ((rel.union @ closed) > 0).astype(np.int32).tocsr()
    count, labels, _ = strongly_connected(block_graph)
    if count == 1:
        return NoBlockCertificate(False, 1)

    sources, targets = block_graph.nonzero()
    leaving = np.zeros(count, dtype=bool)
    leaving[labels[sources][labels[sources] != labels[targets]]] = True
    sink = int(np.flatnonzero(~leaving)[0])
    example = CellSet(grid, labels == sink)
    log.info(f"[Conley] block graph has {count} components; sink component of {len(example)} cell(s) is a block")
    return NoBlockCertificate(True, count, example)


def convergence_profile(rel: TransitionRelation, S: CellSet, A: CellSet, steps: int) -> list[float]:
    """Hausdorff distance from image^k(S) to A for k = 0..steps."""
    profile = []
    current = S
    for _ in range(steps + 1):
        profile.append(hausdorff(rel.grid, current, A))
        current = rel.image(current)
    return profile


def attractor_in(rel: TransitionRelation, N: CellSet) -> tuple[CellSet, CellSet]:
    """
    A = omega_limit(N), certified by a block inside N.
    Returns (attractor, block); raises BlockNotFoundError when N holds none,
    including when the omega limit itself leaves N.
    """
    A = omega_limit(rel, N)
    if not A <= N:
        raise BlockNotFoundError(
            "the omega limit of N leaves N",
            {"escaped": (A - N).indices[:16].tolist(), "attractor": len(A), "neighborhood": len(N)},
        )
    Q = find_block(rel, A, N)
    return A, Q

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import networkx as nx
import numpy as np

from dynamics.ifs import IFSSpec
from geometry.cellset import CellSet
from geometry.grid import Grid
from relation.transition import TransitionRelation, strongly_connected
from utils.errors import ContractError, GridMismatchError
from utils.logger import log


@dataclass(frozen=True)
class ChainGraph:
    """
    epsilon-chain graph: c -> c' iff c' lies in dilate(image({c}), epsilon).

    `graph` is a single-map relation over the same grid, so every relation
    operator (image, closures, components) applies to it directly.
    """

    base: TransitionRelation
    epsilon: float
    graph: TransitionRelation
    labels: np.ndarray
    recurrent: np.ndarray            # per component
    condensation: nx.DiGraph

    @property
    def grid(self) -> Grid:
        return self.base.grid

    @property
    def n_components(self) -> int:
        return len(self.recurrent)

    def component(self, label: int) -> CellSet:
        return CellSet(self.grid, self.labels == label)

    def recurrent_components(self) -> list[CellSet]:
        return [self.component(int(c)) for c in np.flatnonzero(self.recurrent)]

    def reverse(self) -> "ChainGraph":
        """Chain graph with every edge reversed (same components)."""
        return _assemble(self.base.reverse(), self.epsilon, self.graph.reverse())

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "edges": int(self.graph.union.nnz),
            "components": self.n_components,
            "recurrent_components": int(self.recurrent.sum()),
            "condensation_acyclic": nx.is_directed_acyclic_graph(self.condensation),
        }


def _assemble(base: TransitionRelation, epsilon: float, graph: TransitionRelation) -> ChainGraph:
    count, labels, recurrent = strongly_connected(graph.union)
    cond = nx.DiGraph()
    sizes = np.bincount(labels, minlength=count)
    cond.add_nodes_from((int(c), {"size": int(sizes[c]), "recurrent": bool(recurrent[c])}) for c in range(count))
    src, dst = graph.union.nonzero()
    between = labels[src] != labels[dst]
    pairs = np.unique(np.column_stack([labels[src][between], labels[dst][between]]), axis=0)
    cond.add_edges_from((int(a), int(b)) for a, b in pairs)
    return ChainGraph(base, float(epsilon), graph, labels, recurrent, cond)


def chain_graph(rel: TransitionRelation, grid: Optional[Grid] = None, epsilon: Optional[float] = None) -> ChainGraph:
    """epsilon defaults to one cell width."""
    grid = grid or rel.grid
    if grid.hash != rel.grid.hash:
        raise GridMismatchError("chain_graph: grid does not match the relation")
    epsilon = grid.cell_width if epsilon is None else float(epsilon)
    if epsilon < 0:
        raise ContractError(f"epsilon must be nonnegative, got {epsilon}")

    dilation = grid.dilation_matrix(epsilon)
    adjacency = (rel.union @ dilation) > 0
    graph = TransitionRelation(grid, [adjacency], replace(rel.meta, mode=f"chain({epsilon:.6g})"))
    cg = _assemble(rel, epsilon, graph)
    log.info(f"[Chain] eps={epsilon:.4g}: {graph.union.nnz} edges, {cg.n_components} components, "
             f"{int(cg.recurrent.sum())} recurrent")
    return cg


def chain_recurrent(cg: ChainGraph) -> CellSet:
    """Cells lying on at least one directed cycle of the chain graph."""
    return CellSet(cg.grid, cg.recurrent[cg.labels])


def is_epsilon_chain(ifs: IFSSpec, points, epsilon: float) -> bool:
    """True when every step lands within epsilon of some map image of the previous point."""
    pts = ifs.space.canonical(points)
    if len(pts) < 2:
        return True
    prev, nxt = pts[:-1], pts[1:]
    gaps = np.min([ifs.space.pairwise(nxt, f.eval(ifs.space, prev)) for f in ifs.maps], axis=0)
    return bool(np.all(gaps < epsilon))

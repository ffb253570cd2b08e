from .graph import ChainGraph, chain_graph, chain_recurrent, is_epsilon_chain
from .cmw import (
    FAIL, PASS, PASS_PAIRS, BasicAttractor, CMWReport,
    basic_attractors, chain_dual, cmw_verify,
)

__all__ = [
    "ChainGraph", "chain_graph", "chain_recurrent", "is_epsilon_chain",
    "FAIL", "PASS", "PASS_PAIRS", "BasicAttractor", "CMWReport",
    "basic_attractors", "chain_dual", "cmw_verify",
]

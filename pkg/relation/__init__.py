from .transition import (
    PADDED, SAMPLED, RelationMeta, TransitionRelation,
    build_relation, edge_agreement, strongly_connected,
)
from .storage import export_relation_csv, load_relation, save_relation

__all__ = [
    "PADDED", "SAMPLED", "RelationMeta", "TransitionRelation",
    "build_relation", "edge_agreement", "strongly_connected",
    "export_relation_csv", "load_relation", "save_relation",
]

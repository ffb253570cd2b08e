from .blocks import (
    BlockReport, NoBlockCertificate,
    attractor_from_block, attractor_in, basin, convergence_profile, dual_repeller,
    find_block, interior, is_block, neighborhood, no_block_certificate, omega_limit,
)
from .record import INCONCLUSIVE, NOT_STRICT, STRICT, ConleyRecord, StrictVerdict, build_record, is_strict
from .family import attractor_family

__all__ = [
    "BlockReport", "NoBlockCertificate",
    "attractor_from_block", "attractor_in", "basin", "convergence_profile", "dual_repeller",
    "find_block", "interior", "is_block", "neighborhood", "no_block_certificate", "omega_limit",
    "INCONCLUSIVE", "NOT_STRICT", "STRICT", "ConleyRecord", "StrictVerdict", "build_record", "is_strict",
    "attractor_family",
]

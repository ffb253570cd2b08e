from .maps import (
    BaseMap, Affine1D, Affine2D, PiecewiseQuad, PiecewiseQuadInverse,
    Moebius, Projective3, Tabulated1D, MAP_VARIANTS,
)
from .ifs import IFSSpec, invert
from .lipschitz import Contractivity, contractivity, lipschitz_estimate

__all__ = [
    "BaseMap", "Affine1D", "Affine2D", "PiecewiseQuad", "PiecewiseQuadInverse",
    "Moebius", "Projective3", "Tabulated1D", "MAP_VARIANTS",
    "IFSSpec", "invert",
    "Contractivity", "contractivity", "lipschitz_estimate",
]

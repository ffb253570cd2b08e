from .space import Space, distance, parse_space
from .grid import Grid, make_grid
from .cellset import CellSet, dilate, hausdorff, directed_distance

__all__ = [
    "Space", "distance", "parse_space",
    "Grid", "make_grid",
    "CellSet", "dilate", "hausdorff", "directed_distance",
]

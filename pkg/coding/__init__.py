from .address import PSEUDORANDOM, REPEAT_LAST, Address, code_distance
from .fibers import (
    INCONCLUSIVE, NOT_POINT_FIBERED, POINT_FIBERED,
    CommuteReport, FiberReport, coding_commute_check, fiber, point_fibered_test,
)
from .chaos import ChaosTrace, chaos_game

__all__ = [
    "PSEUDORANDOM", "REPEAT_LAST", "Address", "code_distance",
    "INCONCLUSIVE", "NOT_POINT_FIBERED", "POINT_FIBERED",
    "CommuteReport", "FiberReport", "coding_commute_check", "fiber", "point_fibered_test",
    "ChaosTrace", "chaos_game",
]

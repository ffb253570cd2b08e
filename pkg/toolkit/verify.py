from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from chain.graph import chain_recurrent
from coding.fibers import POINT_FIBERED
from conley.blocks import attractor_from_block, omega_limit
from geometry.cellset import CellSet, dilate
from toolkit.reports import write_json
from toolkit.runner import RunResult
from utils.logger import log


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: Optional[bool]                 # None: not applicable to this run
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _fixed_set_law(res: RunResult) -> CheckOutcome:
    if not res.records:
        return CheckOutcome("fixed-set law", None, "no certified attractor")
    bad = [i for i, r in enumerate(res.records) if res.relation.image(r.attractor) != r.attractor]
    return CheckOutcome("fixed-set law", not bad, f"image(A) != A for members {bad}" if bad else "")


def _containments(res: RunResult) -> CheckOutcome:
    if not res.records:
        return CheckOutcome("containments", None, "no certified attractor")
    bad = [i for i, r in enumerate(res.records) if not (r.attractor <= r.block and r.attractor <= r.basin)]
    return CheckOutcome("containments", not bad, f"A outside block or basin for members {bad}" if bad else "")


def _disjointness(res: RunResult) -> CheckOutcome:
    duals = [(i, r) for i, r in enumerate(res.records) if r.dual is not None]
    if not duals:
        return CheckOutcome("disjointness", None, "no dual repellers computed")
    bad = [i for i, r in duals if not ((r.dual & r.attractor).is_empty and (r.dual & r.basin).is_empty)]
    return CheckOutcome("disjointness", not bad, f"dual meets attractor or basin for members {bad}" if bad else "")


def _block_omega(res: RunResult) -> CheckOutcome:
    if not res.records:
        return CheckOutcome("block/omega agreement", None, "no certified attractor")
    rel = res.relation
    bad = [i for i, r in enumerate(res.records)
           if attractor_from_block(rel, r.block, check=False) != omega_limit(rel, r.block)]
    return CheckOutcome("block/omega agreement", not bad, f"members {bad}" if bad else "")


def _cmw(res: RunResult) -> CheckOutcome:
    if res.cmw is None:
        return CheckOutcome("cmw identity", None, "cmw not run")
    return CheckOutcome("cmw identity", res.cmw.passed,
                        f"status {res.cmw.status}, |I ^ R| = {len(res.cmw.difference)}")


def _expectations(res: RunResult) -> list[CheckOutcome]:
    exp = res.scenario.expectations
    grid = res.scenario.grid
    out = []
    if "min_attractors" in exp:
        full = CellSet.full(grid)
        proper = sum(1 for r in res.records if r.attractor != full and not r.attractor.is_empty)
        out.append(CheckOutcome("attractor count", proper >= exp["min_attractors"],
                                f"{proper} proper certified attractor(s), expected at least {exp['min_attractors']}"))
    if "recurrent_points" in exp and res.chain is not None:
        R = chain_recurrent(res.chain)
        points = CellSet.from_points(grid, np.asarray(exp["recurrent_points"], dtype=np.float64))
        near = dilate(grid, points, grid.cell_width)
        ok = points <= R and R <= near
        out.append(CheckOutcome("chain-recurrent points", ok, f"|R| = {len(R)}"))
    if "chain_recurrent_everywhere" in exp and res.chain is not None:
        R = chain_recurrent(res.chain)
        out.append(CheckOutcome("chain recurrence everywhere", len(R) == grid.size, f"|R| = {len(R)}"))
    if "no_proper_block" in exp and res.certificate is not None:
        out.append(CheckOutcome("no proper block", not res.certificate.proper_block_exists,
                                f"{res.certificate.components} block-graph component(s)"))
    if "strict" in exp and res.primary is not None:
        verdict = res.records[res.primary].strict
        out.append(CheckOutcome("strictness", verdict is not None and verdict.verdict == exp["strict"],
                                f"verdict {None if verdict is None else verdict.verdict}"))
    if "point_fibered" in exp and res.fibers is not None:
        out.append(CheckOutcome("point fibered", (res.fibers.verdict == POINT_FIBERED) == exp["point_fibered"],
                                f"verdict {res.fibers.verdict}"))
    if "chaos_containment" in exp and "chaos_containment" in res.report.get("checks", {}):
        got = res.report["checks"]["chaos_containment"]
        out.append(CheckOutcome("chaos containment", got >= exp["chaos_containment"], f"fraction {got:.6f}"))
    return out


CHECKS: tuple[Callable[[RunResult], CheckOutcome], ...] = (
    _fixed_set_law, _containments, _disjointness, _block_omega, _cmw,
)


def verify_run(res: RunResult) -> list[CheckOutcome]:
    """Evaluate the named checks on a finished run and write verify.json next to the report."""
    outcomes = [CheckOutcome(f"task {name}", status == "ok", res.errors.get(name, ""))
                for name, status in sorted(res.status.items())]
    outcomes += [check(res) for check in CHECKS]
    outcomes += _expectations(res)
    for o in outcomes:
        if o.passed is False:
            log.error(f"[Verify] {o.name}: FAIL {o.detail}")
        elif o.passed:
            log.info(f"[Verify] {o.name}: pass")
    write_json(res.output_dir / "verify.json", {"checks": [o.to_dict() for o in outcomes]})
    return outcomes


def all_passed(outcomes: list[CheckOutcome]) -> bool:
    return all(o.passed is not False for o in outcomes)

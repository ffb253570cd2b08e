from __future__ import annotations

import asyncio
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from chain.cmw import CMWReport, cmw_verify
from chain.graph import ChainGraph, chain_graph, chain_recurrent
from coding.chaos import ChaosTrace, chaos_game
from coding.fibers import CommuteReport, FiberReport, coding_commute_check, point_fibered_test
from config.settings import settings
from conley.blocks import (
    NoBlockCertificate, attractor_from_block, attractor_in, convergence_profile, dual_repeller,
    is_block, no_block_certificate, omega_limit,
)
from conley.family import attractor_family
from conley.record import ConleyRecord, build_record, is_strict
from dynamics.ifs import IFSSpec
from dynamics.lipschitz import contractivity
from geometry.cellset import CellSet, dilate
from relation.storage import save_relation
from relation.transition import SAMPLED, TransitionRelation, build_relation, edge_agreement
from toolkit.presets import CHAOS
from toolkit.render import BLACK, LETTER_COLORS, RED, Layer, RenderSpec, render
from toolkit.reports import clear_failed_marker, write_failed_marker, write_json
from toolkit.scenario import (
    ATTRACTORS, CHAIN, CHAOS_TASK, CMW, CODING, RENDER, REPELLER, TASKS, Scenario,
)
from utils.errors import BlockNotFoundError, ConleyIFSError, ContractError
from utils.logger import log

OK = "ok"
FAILED = "failed"
SKIPPED = "skipped"

DEPENDS = {
    REPELLER: (ATTRACTORS,),
    CMW: (CHAIN,),
    CODING: (ATTRACTORS,),
    RENDER: (ATTRACTORS, CHAOS_TASK),
}


def task_dependencies(task: str, invertible: bool) -> tuple[str, ...]:
    deps = DEPENDS.get(task, ())
    if task == RENDER and invertible:
        deps = deps + (REPELLER,)
    return deps


def task_closure(tasks, invertible: bool) -> tuple[str, ...]:
    """Requested tasks plus everything they depend on, in pipeline order."""
    need = set(tasks)
    stack = list(tasks)
    while stack:
        for dep in task_dependencies(stack.pop(), invertible):
            if dep not in need:
                need.add(dep)
                stack.append(dep)
    return tuple(t for t in TASKS if t in need)


def locate_attractor(rel: TransitionRelation, ifs: IFSSpec, seed: int) -> tuple[CellSet, Optional[CellSet]]:
    """
    Attractor near a chaos-game orbit. For r = 1 .. BLOCK_MARGIN_CELLS the
    orbit cells dilated by r cells are tried as a block, then as the
    neighborhood a block is grown in. Without any block the omega limit of
    the one-cell dilation is returned uncertified.
    """
    grid = rel.grid
    rng = np.random.default_rng(seed)
    trace = chaos_game(ifs, ifs.space.random_points(rng, 1), n_steps=min(settings.CHAOS_STEPS, 20_000),
                       burn_in=settings.CHAOS_BURN_IN, seed=seed)
    seen = CellSet.from_points(grid, trace.points)
    h = grid.cell_width
    for r in range(1, settings.BLOCK_MARGIN_CELLS + 1):
        N = dilate(grid, seen, r * h)
        if is_block(rel, N):
            log.info(f"[Runner] orbit cells dilated by {r} cell(s) form a block")
            return attractor_from_block(rel, N, check=False), N
        try:
            A, Q = attractor_in(rel, N)
        except BlockNotFoundError as exc:
            log.debug(f"[Runner] no block within {r} cell(s) of the orbit: {exc}")
            continue
        log.info(f"[Runner] block of {len(Q)} cell(s) grown within {r} cell(s) of the orbit")
        return A, Q
    log.warning(f"[Runner] no block within {settings.BLOCK_MARGIN_CELLS} cell(s) of the orbit; "
                f"attractor left uncertified")
    return omega_limit(rel, dilate(grid, seen, h)), None


@dataclass
class RunResult:
    scenario: Scenario
    output_dir: Path
    tasks: tuple[str, ...]
    status: dict[str, str] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    relation: Optional[TransitionRelation] = None
    records: list[ConleyRecord] = field(default_factory=list)
    primary: Optional[int] = None
    attractor: Optional[CellSet] = None           # cells used by coding, chaos checks and render
    certificate: Optional[NoBlockCertificate] = None
    chain: Optional[ChainGraph] = None
    cmw: Optional[CMWReport] = None
    fibers: Optional[FiberReport] = None
    commute: Optional[CommuteReport] = None
    chaos: Optional[ChaosTrace] = None

    @property
    def ok(self) -> bool:
        return all(s == OK for s in self.status.values()) and len(self.status) == len(self.tasks)


class PipelineRun:
    """
    One scenario run. The relation is built first; tasks then run as named
    asyncio tasks, each waiting for its dependencies and doing its numeric
    work in a worker thread. Every task writes only its own files.
    """

    def __init__(self, scenario: Scenario, threads: Optional[int] = None):
        self.scenario = scenario
        self.threads = int(settings.THREADS if threads is None else threads)
        if self.threads < 1:
            raise ContractError(f"threads must be >= 1, got {self.threads}")
        self.out = Path(scenario.output_dir)
        self.ifs = scenario.ifs
        self.grid = scenario.grid
        tasks = task_closure(scenario.tasks, self.ifs.invertible)
        self.result = RunResult(scenario, self.out, tasks)
        self._summaries: dict[str, dict] = {}
        self._jobs: dict[str, asyncio.Task] = {}
        self._sem: Optional[asyncio.Semaphore] = None
        self._center: Optional[TransitionRelation] = None
        self._chain_base: Optional[TransitionRelation] = None

    @property
    def rel(self) -> TransitionRelation:
        return self.result.relation

    async def run(self) -> RunResult:
        res = self.result
        self.out.mkdir(parents=True, exist_ok=True)
        clear_failed_marker(self.out)
        log.info(f"[Runner] {self.scenario.name}: tasks {list(res.tasks)} -> {self.out}")

        try:
            res.relation = await asyncio.to_thread(self._build_relation)
        except Exception as exc:
            if isinstance(exc, ConleyIFSError):
                log.error(f"[Runner] relation build failed: {exc}")
            else:
                log.exception(f"[Runner] relation build crashed: {exc}")
            for name in res.tasks:
                res.status[name] = SKIPPED
                res.errors[name] = f"relation build failed: {exc}"
            res.errors["relation"] = str(exc)
            self._finish()
            return res

        self._sem = asyncio.Semaphore(self.threads)
        for name in res.tasks:
            self._jobs[name] = asyncio.create_task(self._run_task(name), name=f"Task:{name}")
        await asyncio.gather(*self._jobs.values())
        self._finish()
        return res

    async def _run_task(self, name: str) -> None:
        res = self.result
        deps = task_dependencies(name, self.ifs.invertible)
        for dep in deps:
            await self._jobs[dep]
        broken = [d for d in deps if res.status.get(d) != OK]
        if broken:
            res.status[name] = SKIPPED
            res.errors[name] = f"dependency {broken[0]} did not complete"
            log.warning(f"[Runner] task {name} skipped: {res.errors[name]}")
            return

        async with self._sem:
            try:
                summary = await asyncio.to_thread(getattr(self, f"_do_{name}"))
            except ConleyIFSError as exc:
                res.status[name] = FAILED
                res.errors[name] = f"{type(exc).__name__}: {exc}"
                log.error(f"[Runner] task {name} failed: {exc}")
                return
            except Exception as exc:
                res.status[name] = FAILED
                res.errors[name] = f"{type(exc).__name__}: {exc}"
                log.exception(f"[Runner] task {name} crashed: {exc}")
                return
        res.status[name] = OK
        self._summaries[name] = summary
        log.info(f"[Runner] task {name} done")

    # ── relation ─────────────────────────────────────────────
    def _build_relation(self) -> TransitionRelation:
        sc = self.scenario
        rel = build_relation(self.grid, self.ifs, sc.relation_mode, sc.padding, sc.samples_per_cell, self.threads)
        save_relation(rel, self.out / "relation.cifsrel")
        return rel

    def _center_relation(self) -> TransitionRelation:
        """Single-valued relation of cell centers; strictness is judged on it."""
        if self._center is None:
            if self.rel.meta.mode == SAMPLED and self.rel.meta.samples_per_cell == 1:
                self._center = self.rel
            else:
                self._center = build_relation(self.grid, self.ifs, SAMPLED, None, 1, 1)
        return self._center

    def _chain_relation(self) -> TransitionRelation:
        """Relation the chain graph is built on: the main one unless the scenario names another mode."""
        sc = self.scenario
        if sc.chain_mode is None or sc.chain_mode == self.rel.meta.mode:
            return self.rel
        if self._chain_base is None:
            self._chain_base = build_relation(self.grid, self.ifs, sc.chain_mode, sc.padding, sc.samples_per_cell, 1)
        return self._chain_base

    # ── tasks ────────────────────────────────────────────────
    def _do_attractors(self) -> dict:
        res, rel, grid, sc = self.result, self.rel, self.grid, self.scenario
        full = CellSet.full(grid)
        certified = True
        if sc.search == CHAOS:
            A, Q = locate_attractor(rel, self.ifs, sc.seed)
            pairs = [(A, Q)] if Q is not None else []
            certified = Q is not None
            if Q is None:
                res.attractor = A
        else:
            pairs = attractor_family(rel)

        center = self._center_relation()
        for i, (_, Q) in enumerate(pairs):
            rec = build_record(rel, Q, {"index": i, "search": sc.search})
            rec.strict = is_strict(center, rec.attractor, rec.basin, seed=sc.seed)
            rec.export(self.out, f"attractor_{i:02d}")
            res.records.append(rec)

        proper = [i for i, r in enumerate(res.records) if r.attractor != full and not r.attractor.is_empty]
        if proper:
            res.primary = max(proper, key=lambda i: (len(res.records[i].attractor), -i))
            res.attractor = res.records[res.primary].attractor
        elif res.attractor is None:
            res.attractor = attractor_from_block(rel, full, check=False)
        res.certificate = no_block_certificate(rel)

        summary = {
            "search": sc.search,
            "certified": certified,
            "count": len(res.records),
            "nontrivial": len(proper),
            "primary": res.primary,
            "members": [dict(r.summary(), index=i) for i, r in enumerate(res.records)],
            "no_block_certificate": res.certificate.to_dict(),
            "contractivity": contractivity(self.ifs, grid, res.attractor).to_dict(),
        }
        if not proper:
            summary["message"] = "no nontrivial attractor block found"
        if res.primary is not None:
            rec = res.records[res.primary]
            summary["convergence"] = convergence_profile(rel, rec.block, rec.attractor, 8)
        res.attractor.to_csv(self.out / "attractor.csv")
        write_json(self.out / "attractors.json", summary)
        return summary

    def _do_repeller(self) -> dict:
        res, rel = self.result, self.rel
        members = []
        for i, rec in enumerate(res.records):
            rec.dual = dual_repeller(rel, rec.block)
            rec.dual.to_csv(self.out / f"attractor_{i:02d}_dual.csv")
            members.append({"index": i, "dual": len(rec.dual), "problems": rec.check(rel)})
        sc = self.scenario
        inverse = build_relation(self.grid, self.ifs.invert(), sc.relation_mode, sc.padding, sc.samples_per_cell, 1)
        summary = {"members": members, "edge_agreement": edge_agreement(rel.reverse(), inverse)}
        write_json(self.out / "repeller.json", summary)
        return summary

    def _do_chain(self) -> dict:
        res = self.result
        res.chain = chain_graph(self._chain_relation(), epsilon=self.scenario.epsilon)
        R = chain_recurrent(res.chain)
        R.to_csv(self.out / "chain_recurrent.csv")
        summary = dict(res.chain.to_dict(), chain_recurrent=len(R))
        write_json(self.out / "chain.json", summary)
        return summary

    def _do_cmw(self) -> dict:
        res = self.result
        res.cmw = cmw_verify(res.chain)
        res.cmw.export(self.out)
        summary = res.cmw.summary()
        write_json(self.out / "cmw.json", summary)
        return summary

    def _do_coding(self) -> dict:
        res = self.result
        res.fibers = point_fibered_test(self.ifs, res.attractor, seed=self.scenario.seed)
        res.fibers.table().to_csv(self.out / "fiber_diameters.csv", index=False, float_format="%.17g")
        summary = {"fiber": res.fibers.to_dict()}
        if res.fibers.point_fibered:
            res.commute = coding_commute_check(self.ifs, res.fibers)
            summary["commute"] = res.commute.to_dict()
        else:
            summary["commute"] = {"skipped": f"fibers are {res.fibers.verdict}"}
        write_json(self.out / "coding.json", summary)
        return summary

    def _do_chaos(self) -> dict:
        res, sc = self.result, self.scenario
        rng = np.random.default_rng(sc.seed)
        res.chaos = chaos_game(self.ifs, self.ifs.space.random_points(rng, 1), seed=sc.seed)
        res.chaos.to_csv(self.out / "chaos_points.csv", self.ifs.space)
        return {"points": len(res.chaos)}

    def _do_render(self) -> dict:
        res, sc = self.result, self.scenario
        layers = [Layer(RED, cells=res.attractor)]
        if res.primary is not None and res.records[res.primary].dual is not None:
            layers.append(Layer(BLACK, cells=res.records[res.primary].dual))
        render(RenderSpec.square(sc.image_size, layers, sc.projection), self.grid, self.out / "attractor.ppm")

        colors = np.asarray(LETTER_COLORS, dtype=np.uint8)[(res.chaos.letters - 1) % len(LETTER_COLORS)]
        points = Layer(RED, points=res.chaos.points, point_colors=colors)
        render(RenderSpec.square(sc.image_size, [points], sc.projection), self.grid, self.out / "chaos.ppm")
        return {"images": ["attractor.ppm", "chaos.ppm"]}

    # ── report ───────────────────────────────────────────────
    def _cross_checks(self) -> dict:
        res = self.result
        checks = {}
        if res.chaos is not None and res.attractor is not None:
            near = dilate(self.grid, res.attractor, self.grid.cell_width)
            inside = near.mask[self.grid.point_to_cell(res.chaos.points)]
            checks["chaos_containment"] = float(inside.mean())
        return checks

    def _finish(self) -> None:
        res = self.result
        rel = res.relation
        res.report = {
            "scenario": self.scenario.describe(),
            "relation": None if rel is None else dict(rel.meta.to_dict(), edges=int(rel.union.nnz),
                                                      edges_per_map=[int(m.nnz) for m in rel.per_map]),
            "tasks": {name: dict(self._summaries.get(name, {}), status=res.status.get(name, SKIPPED),
                                 error=res.errors.get(name)) for name in res.tasks},
            "checks": self._cross_checks(),
        }
        write_json(self.out / "report.json", res.report)
        if res.errors:
            write_failed_marker(self.out, res.errors)
            log.warning(f"[Runner] {len(res.errors)} task(s) did not complete; see {self.out / 'FAILED'}")
        else:
            log.info(f"[Runner] {self.scenario.name}: all tasks completed")


async def run_scenario(scenario: Scenario, threads: Optional[int] = None) -> RunResult:
    return await PipelineRun(scenario, threads).run()

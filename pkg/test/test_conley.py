from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from scipy import sparse

from conley.blocks import (
    attractor_from_block, attractor_in, basin, convergence_profile, dual_repeller, find_block,
    interior, is_block, no_block_certificate, omega_limit,
)
from conley.family import attractor_family
from conley.record import INCONCLUSIVE, NOT_STRICT, STRICT, build_record, is_strict
from dynamics.ifs import IFSSpec
from dynamics.maps import PiecewiseQuad
from geometry.cellset import CellSet
from geometry.grid import Grid
from geometry.space import Space
from relation.transition import PADDED, SAMPLED, TransitionRelation, build_relation
from utils.errors import BlockNotFoundError, CapabilityError, ContractError


def cells(grid, *idx):
    return CellSet.from_indices(grid, idx)


class TestBlocks:
    """x/2 on eight cells of [0, 1]: every orbit falls into cell 0"""

    def test_interior(self, half_rel):
        grid = half_rel.grid
        assert interior(cells(grid, 0, 1, 2, 3)) == cells(grid, 0, 1, 2)

    def test_left_half_is_a_block(self, half_rel):
        grid = half_rel.grid
        Q = cells(grid, 0, 1, 2, 3)
        assert half_rel.image(Q) == cells(grid, 0, 1)
        assert is_block(half_rel, Q)

    def test_non_block(self, half_rel):
        """{2, 3} maps to cell 1, outside its interior"""
        Q = cells(half_rel.grid, 2, 3)
        report = is_block(half_rel, Q)
        assert not report
        assert report.offending == cells(half_rel.grid, 1)
        with pytest.raises(ContractError):
            attractor_from_block(half_rel, Q)

    def test_attractor_from_block(self, half_rel):
        grid = half_rel.grid
        A = attractor_from_block(half_rel, cells(grid, 0, 1, 2, 3))
        assert A == cells(grid, 0)
        assert half_rel.image(A) == A

    def test_omega_of_every_cell(self, half_rel):
        grid = half_rel.grid
        for k in range(8):
            assert omega_limit(half_rel, cells(grid, k)) == cells(grid, 0)

    def test_omega_of_empty_set(self, half_rel):
        with pytest.raises(ContractError):
            omega_limit(half_rel, CellSet.empty(half_rel.grid))

    def test_find_block_is_smallest(self, half_rel):
        """Growth from {0} stops at {0, 1}, inside every other block around it"""
        grid = half_rel.grid
        N = CellSet.covering(grid, [0.0], [0.4])
        Q = find_block(half_rel, cells(grid, 0), N)
        assert Q == cells(grid, 0, 1)
        assert is_block(half_rel, Q)
        assert Q <= cells(grid, 0, 1, 2, 3)

    def test_find_block_needs_room(self, half_rel):
        grid = half_rel.grid
        with pytest.raises(BlockNotFoundError) as err:
            find_block(half_rel, cells(grid, 0), cells(grid, 0))
        assert err.value.diagnostic["steps"] == 1

    def test_find_block_needs_invariant_set(self, half_rel):
        grid = half_rel.grid
        with pytest.raises(ContractError):
            find_block(half_rel, cells(grid, 1), CellSet.full(grid))

    def test_attractor_in(self, half_rel):
        grid = half_rel.grid
        A, Q = attractor_in(half_rel, cells(grid, 0, 1, 2, 3, 4))
        assert A == cells(grid, 0)
        assert Q == cells(grid, 0, 1)

    def test_attractor_in_needs_the_omega_limit_inside(self, half_rel):
        """{2, .., 5} falls onto cell 0, which it does not contain"""
        grid = half_rel.grid
        with pytest.raises(BlockNotFoundError) as err:
            attractor_in(half_rel, cells(grid, 2, 3, 4, 5))
        assert err.value.diagnostic["escaped"] == [0]

    def test_basin_is_everything(self, half_rel):
        grid = half_rel.grid
        assert basin(half_rel, cells(grid, 0)) == CellSet.full(grid)

    def test_dual_of_global_attractor_is_empty(self, half_rel):
        grid = half_rel.grid
        Q = cells(grid, 0, 1)
        dual = dual_repeller(half_rel, Q)
        assert dual.is_empty
        assert dual == ~basin(half_rel, cells(grid, 0))

    def test_dual_needs_inverses(self, half_rel):
        meta = replace(half_rel.meta, invertible=False)
        rel = TransitionRelation(half_rel.grid, half_rel.per_map, meta)
        with pytest.raises(CapabilityError):
            dual_repeller(rel, cells(rel.grid, 0, 1))

    def test_dual_needs_a_block(self, half_rel):
        with pytest.raises(ContractError):
            dual_repeller(half_rel, cells(half_rel.grid, 2, 3))

    def test_convergence_profile(self, half_rel):
        """Hausdorff distance of image^k(X) to {0}: 7, 3, 1, 0 cells"""
        grid = half_rel.grid
        profile = convergence_profile(half_rel, CellSet.full(grid), cells(grid, 0), 4)
        assert profile == pytest.approx([0.875, 0.375, 0.125, 0.0, 0.0])


class TestRotationHasNoBlock:
    """Quarter turn on eight arcs"""

    def test_two_arcs_are_not_a_block(self, rotation_rel):
        assert not is_block(rotation_rel, cells(rotation_rel.grid, 0, 1))

    def test_omega_is_the_orbit(self, rotation_rel):
        grid = rotation_rel.grid
        assert omega_limit(rotation_rel, cells(grid, 0)) == cells(grid, 0, 2, 4, 6)

    def test_certificate(self, rotation_rel):
        """The block graph is strongly connected, so only the empty set and X are blocks"""
        cert = no_block_certificate(rotation_rel)
        assert not cert.proper_block_exists
        assert cert.components == 1

    def test_family_is_only_the_whole_circle(self, rotation_rel):
        family = attractor_family(rotation_rel)
        full = CellSet.full(rotation_rel.grid)
        assert len(family) == 1
        assert family[0][0] == full


class TestFamilyAndRecords:
    """Certified attractors and their dossiers"""

    def test_half_map_family(self, half_rel):
        grid = half_rel.grid
        family = attractor_family(half_rel)
        assert [(A.indices.tolist(), Q.indices.tolist()) for A, Q in family] == [([0], [0, 1])]
        assert cells(grid, 0) == family[0][0]

    def test_family_needs_a_positive_cap(self, half_rel):
        with pytest.raises(ContractError):
            attractor_family(half_rel, cap=0)

    def test_certificate_finds_a_block(self, half_rel):
        cert = no_block_certificate(half_rel)
        assert cert.proper_block_exists
        assert is_block(half_rel, cert.example_block)
        assert cert.example_block == cells(half_rel.grid, 0, 1)

    def test_record(self, half_rel, tmp_path):
        grid = half_rel.grid
        rec = build_record(half_rel, cells(grid, 0, 1, 2, 3), {"source": "test"})
        assert rec.attractor == cells(grid, 0)
        assert rec.basin == CellSet.full(grid)
        rec.dual = dual_repeller(half_rel, rec.block)
        assert rec.check(half_rel) == []
        rec.export(tmp_path, "a")
        assert {p.name for p in tmp_path.iterdir()} == {"a_block.csv", "a_attractor.csv", "a_basin.csv", "a_dual.csv"}
        assert rec.summary()["attractor"] == 1

    def test_record_needs_block(self, half_rel):
        with pytest.raises(ContractError):
            build_record(half_rel, cells(half_rel.grid, 2, 3))


class TestStrictness:
    """Singleton omega limits against the attractor"""

    def test_contraction_is_strict(self, half_rel):
        grid = half_rel.grid
        verdict = is_strict(half_rel, cells(grid, 0), CellSet.full(grid))
        assert verdict.verdict == STRICT
        assert verdict.checked == 8

    def test_contractive_halves_are_strict(self, halves_ifs):
        """Every cell's omega limit under the two half-maps is the whole interval"""
        grid = Grid(halves_ifs.space, (64,))
        rel = build_relation(grid, halves_ifs, SAMPLED, samples_per_cell=1)
        full = CellSet.full(grid)
        assert attractor_from_block(rel, full) == full
        verdict = is_strict(rel, full, full, sample_budget=64)
        assert verdict.verdict == STRICT
        assert verdict.checked == 64

    def test_rotation_is_not_strict(self, rotation_rel):
        """omega of one arc is half the circle"""
        grid = rotation_rel.grid
        full = CellSet.full(grid)
        verdict = is_strict(rotation_rel, full, full)
        assert verdict.verdict == NOT_STRICT
        assert verdict.witness == 0
        assert verdict.witness_omega == cells(grid, 0, 2, 4, 6)

    def test_partial_sample_is_inconclusive(self, half_rel):
        grid = half_rel.grid
        verdict = is_strict(half_rel, cells(grid, 0), CellSet.full(grid), sample_budget=3, seed=1)
        assert verdict.verdict == INCONCLUSIVE
        assert verdict.checked == 3

    def test_needs_attractor_inside_basin(self, half_rel):
        grid = half_rel.grid
        with pytest.raises(ContractError):
            is_strict(half_rel, cells(grid, 0, 5), cells(grid, 0))

    def test_needs_a_positive_budget(self, half_rel):
        grid = half_rel.grid
        with pytest.raises(ContractError):
            is_strict(half_rel, cells(grid, 0), CellSet.full(grid), sample_budget=0)


# ── lattice laws on random blocks ────────────────────────────
@lru_cache(maxsize=None)
def _lattice_system():
    """Integer-fixing map on 400 cells plus its block graph c -> neighborhood(F#(c))."""
    ifs = IFSSpec(Space.interval(-2.6, 3.6), (PiecewiseQuad(),), "lattice")
    grid = Grid(ifs.space, (400,))
    rel = build_relation(grid, ifs, PADDED)
    closed = grid.neighbors + sparse.identity(grid.size, dtype=np.int32, format="csr")
    block_graph = TransitionRelation(grid, [(rel.union @ closed) > 0], rel.meta)
    return rel, block_graph


def _random_block(block_graph, seeds):
    """Forward-closed sets of the block graph are exactly the blocks."""
    return block_graph.forward_closure(CellSet.from_indices(block_graph.grid, seeds))


seed_sets = st.lists(st.integers(0, 399), min_size=1, max_size=3)


class TestLatticeLaws:
    """Unions and intersections of blocks"""

    @given(seed_sets, seed_sets)
    @hsettings(max_examples=200, deadline=None)
    def test_union_and_intersection(self, s1, s2):
        rel, block_graph = _lattice_system()
        Q1, Q2 = _random_block(block_graph, s1), _random_block(block_graph, s2)
        assert is_block(rel, Q1) and is_block(rel, Q2)
        assert is_block(rel, Q1 | Q2)
        assert is_block(rel, Q1 & Q2)

        A1, A2 = attractor_from_block(rel, Q1), attractor_from_block(rel, Q2)
        assert attractor_from_block(rel, Q1 | Q2) == A1 | A2
        assert attractor_from_block(rel, Q1 & Q2) <= A1 & A2

    @given(seed_sets)
    @hsettings(max_examples=100, deadline=None)
    def test_block_attractor_is_omega_limit(self, s):
        rel, block_graph = _lattice_system()
        Q = _random_block(block_graph, s)
        assert attractor_from_block(rel, Q) == omega_limit(rel, Q)

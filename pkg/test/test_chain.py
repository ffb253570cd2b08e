import math
from dataclasses import replace

import pytest

from chain.cmw import FAIL, PASS, PASS_PAIRS, basic_attractors, chain_dual, cmw_verify
from chain.graph import chain_graph, chain_recurrent, is_epsilon_chain
from dynamics.ifs import IFSSpec
from dynamics.maps import Affine1D
from geometry.cellset import CellSet
from geometry.grid import Grid
from geometry.space import Space
from relation.transition import SAMPLED, TransitionRelation, build_relation
from utils.errors import CapabilityError, ContractError, GridMismatchError


def cells(grid, *idx):
    return CellSet.from_indices(grid, idx)


@pytest.fixture
def centered_half_rel():
    """x/2 on eight cells of [-1, 1]; 0 sits on the boundary between cells 3 and 4"""
    ifs = IFSSpec(Space.interval(-1.0, 1.0), (Affine1D(0.5),), "half")
    return build_relation(Grid(ifs.space, (8,)), ifs, SAMPLED, samples_per_cell=1)


class TestChainGraph:
    """epsilon-chain graphs and chain recurrence"""

    def test_rotation_without_slack(self, rotation_rel):
        """With epsilon 0 the even and odd arcs form two cycles"""
        cg = chain_graph(rotation_rel, epsilon=0.0)
        grid = rotation_rel.grid
        comps = sorted(c.indices.tolist() for c in cg.recurrent_components())
        assert comps == [[0, 2, 4, 6], [1, 3, 5, 7]]
        assert chain_recurrent(cg) == CellSet.full(grid)

    def test_rotation_with_one_cell_of_slack(self, rotation_rel):
        cg = chain_graph(rotation_rel)
        assert cg.epsilon == pytest.approx(rotation_rel.grid.cell_width)
        assert cg.n_components == 1
        assert chain_recurrent(cg) == CellSet.full(rotation_rel.grid)

    def test_contraction_recurs_only_at_its_fixed_point(self, centered_half_rel):
        cg = chain_graph(centered_half_rel, epsilon=0.0)
        assert chain_recurrent(cg) == cells(centered_half_rel.grid, 3, 4)
        assert cg.to_dict()["condensation_acyclic"]

    def test_recurrence_grows_with_epsilon(self, centered_half_rel):
        h = centered_half_rel.grid.cell_width
        sets = [chain_recurrent(chain_graph(centered_half_rel, epsilon=e * h)) for e in (0.0, 0.5, 1.0, 2.0, 4.0)]
        for smaller, larger in zip(sets, sets[1:]):
            assert smaller <= larger
        assert sets[-1] == CellSet.full(centered_half_rel.grid)

    def test_reverse_keeps_components(self, rotation_rel):
        cg = chain_graph(rotation_rel, epsilon=0.0)
        rev = cg.reverse()
        assert rev.n_components == cg.n_components
        assert chain_recurrent(rev) == chain_recurrent(cg)

    def test_bad_arguments(self, rotation_rel):
        with pytest.raises(ContractError):
            chain_graph(rotation_rel, epsilon=-0.1)
        with pytest.raises(GridMismatchError):
            chain_graph(rotation_rel, grid=Grid(Space.circle(), (16,)))

    def test_is_epsilon_chain(self, rotation_ifs):
        """Quarter turns with small jumps"""
        pts = [0.0, math.pi / 2 + 0.01, math.pi + 0.02]
        assert is_epsilon_chain(rotation_ifs, pts, 0.05)
        assert not is_epsilon_chain(rotation_ifs, pts, 0.005)
        assert is_epsilon_chain(rotation_ifs, [1.0], 0.0)


class TestCMW:
    """Intersection of A | A* over the attractor lattice against chain recurrence"""

    def test_contraction(self, centered_half_rel):
        cg = chain_graph(centered_half_rel, epsilon=0.0)
        report = cmw_verify(cg)
        grid = centered_half_rel.grid
        assert report.status == PASS
        assert report.exhaustive
        assert [b.cells.indices.tolist() for b in report.basics] == [[3], [4]]
        assert len(report.family) == 4
        assert report.I == cells(grid, 3, 4)
        assert report.difference.is_empty

    def test_recurrent_set_lies_in_every_pair(self, centered_half_rel):
        for epsilon in (0.0, None):
            report = cmw_verify(chain_graph(centered_half_rel, epsilon=epsilon))
            for A, dual in report.family:
                assert report.R <= A | dual

    def test_duals(self, centered_half_rel):
        """Each fixed cell's dual is everything flowing to the other one"""
        cg = chain_graph(centered_half_rel, epsilon=0.0)
        grid = centered_half_rel.grid
        assert chain_dual(cg, cells(grid, 3)) == cells(grid, 4, 5, 6, 7)
        assert chain_dual(cg, cells(grid, 4)) == cells(grid, 0, 1, 2, 3)
        assert chain_dual(cg, CellSet.empty(grid)) == CellSet.full(grid)
        assert chain_dual(cg, cells(grid, 3, 4)).is_empty

    def test_rotation(self, rotation_rel):
        """Two interleaved cycles: every arc is chain recurrent and the identity holds"""
        report = cmw_verify(chain_graph(rotation_rel, epsilon=0.0))
        assert report.status == PASS
        assert len(report.basics) == 2
        assert report.R == CellSet.full(rotation_rel.grid)

    def test_default_epsilon(self, centered_half_rel):
        report = cmw_verify(chain_graph(centered_half_rel))
        assert report.passed
        assert report.I == report.R

    def test_cap_downgrades_to_pairs(self, centered_half_rel):
        report = cmw_verify(chain_graph(centered_half_rel, epsilon=0.0), cap=1)
        assert not report.exhaustive
        assert report.status == PASS_PAIRS
        assert report.passed

    def test_cap_must_be_positive(self, centered_half_rel):
        with pytest.raises(ContractError):
            cmw_verify(chain_graph(centered_half_rel, epsilon=0.0), cap=0)

    def test_needs_inverses(self, centered_half_rel):
        meta = replace(centered_half_rel.meta, invertible=False)
        rel = TransitionRelation(centered_half_rel.grid, centered_half_rel.per_map, meta)
        with pytest.raises(CapabilityError):
            cmw_verify(chain_graph(rel))

    def test_export(self, centered_half_rel, tmp_path):
        report = cmw_verify(chain_graph(centered_half_rel, epsilon=0.0))
        report.export(tmp_path)
        names = {p.name for p in tmp_path.iterdir()}
        assert {"cmw_R.csv", "cmw_I.csv", "cmw_diff.csv", "cmw_A_000.csv", "cmw_dual_003.csv"} <= names
        assert report.summary()["status"] != FAIL

    def test_basic_attractors_are_forward_closed(self, rotation_rel):
        cg = chain_graph(rotation_rel, epsilon=0.0)
        for basic in basic_attractors(cg):
            assert cg.graph.image(basic.cells) <= basic.cells
            assert not basic.has_block

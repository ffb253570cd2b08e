import numpy as np
import pandas as pd
import pytest

from coding.address import PSEUDORANDOM, Address, code_distance
from coding.chaos import chaos_game
from coding.fibers import (
    NOT_POINT_FIBERED, POINT_FIBERED, coding_commute_check, fiber, point_fibered_test,
)
from chain.graph import is_epsilon_chain
from dynamics.ifs import IFSSpec
from dynamics.maps import Moebius
from geometry.cellset import CellSet
from geometry.grid import Grid
from geometry.space import Space
from utils.errors import ConfigurationError, ContractError


class TestAddress:
    """Infinite words over 1..N"""

    def test_periodic_tail(self):
        assert Address.periodic_tail(2, "1").letters(5).tolist() == [1, 1, 1, 1, 1]
        assert Address.periodic_tail(2, "12").letters(5).tolist() == [1, 2, 2, 2, 2]
        assert Address.periodic_tail(3, [3, 1]).word(4) == "3111..."

    def test_letters_outside_alphabet(self):
        with pytest.raises(ConfigurationError):
            Address.periodic_tail(2, "13")
        with pytest.raises(ConfigurationError):
            Address(2)

    def test_random_words_are_reproducible(self):
        """Letters do not depend on how deep the word was expanded"""
        a = Address.random(3, seed=5)
        deep = a.letters(200)
        assert a.extension == PSEUDORANDOM
        assert np.array_equal(Address.random(3, seed=5).letters(200), deep)
        assert np.array_equal(a.letters(70), deep[:70])
        assert set(deep.tolist()) <= {1, 2, 3}
        assert not np.array_equal(Address.random(3, seed=6).letters(200), deep)

    def test_shift_and_prepend(self):
        a = Address.random(2, seed=11, prefix=(2, 1))
        assert a.shift().letters(10).tolist() == a.letters(11)[1:].tolist()
        assert a.prepend(1).letters(11).tolist() == [1] + a.letters(10).tolist()
        assert a.prepend(2).shift().letters(30).tolist() == a.letters(30).tolist()

    def test_code_distance(self):
        ones = Address.periodic_tail(2, "1")
        assert code_distance(ones, ones, 40) == 0.0
        assert code_distance(ones, Address.periodic_tail(2, "2"), 40) == 0.5
        assert code_distance(Address.periodic_tail(2, "12"), ones, 40) == 0.25


class TestFiber:
    """Composition along an address"""

    def test_all_ones_goes_to_zero(self, halves_ifs):
        pts = fiber(halves_ifs, Address.periodic_tail(2, "1"), 40, [0.0, 0.3, 1.0])
        assert np.all(np.abs(pts[:, 0]) <= 2.0 ** -40)

    def test_one_then_twos_goes_to_half(self, halves_ifs):
        pts = fiber(halves_ifs, Address.periodic_tail(2, "12"), 40, [0.0, 0.3, 1.0])
        assert np.all(np.abs(pts[:, 0] - 0.5) <= 2.0 ** -40 + 1e-15)

    def test_innermost_letter_acts_first(self, halves_ifs):
        """f1(f2(0)) = 1/4 but f2(f1(0)) = 1/2"""
        assert fiber(halves_ifs, Address.periodic_tail(2, "12"), 2, 0.0)[0, 0] == pytest.approx(0.25)
        assert fiber(halves_ifs, Address.periodic_tail(2, "21"), 2, 0.0)[0, 0] == pytest.approx(0.5)

    def test_depth_must_be_positive(self, halves_ifs):
        with pytest.raises(ContractError):
            fiber(halves_ifs, Address.periodic_tail(2, "1"), 0, 0.5)


class TestPointFibered:
    """Sampled shrink test and the coding map"""

    @pytest.fixture
    def region(self, halves_ifs):
        return CellSet.full(Grid(halves_ifs.space, (64,)))

    def test_halving_table(self, halves_ifs, region):
        """Every composition halves distances: d_k = 2^-k d_0"""
        report = point_fibered_test(halves_ifs, region, n_addresses=16, n_points=8, depth=30, tol=1e-6, seed=3)
        d0 = report.diameters[0]
        assert report.verdict == POINT_FIBERED
        assert report.point_fibered
        assert np.allclose(report.diameters, d0 * 2.0 ** -np.arange(31), rtol=0.0, atol=1e-12)
        assert report.rate == pytest.approx(0.5, rel=1e-6)
        assert report.truncation_bound(10) == pytest.approx(d0 * 2.0 ** -10, rel=1e-5)
        assert report.witness is None

    def test_table_and_dict(self, halves_ifs, region):
        report = point_fibered_test(halves_ifs, region, n_addresses=4, n_points=4, depth=24, tol=1e-3, seed=3)
        table = report.table()
        assert isinstance(table, pd.DataFrame)
        assert list(table.columns) == ["depth", "diameter"]
        assert len(table) == 25
        assert report.to_dict()["verdict"] == POINT_FIBERED

    def test_same_seed_same_report(self, halves_ifs, region):
        a = point_fibered_test(halves_ifs, region, n_addresses=4, n_points=4, depth=8, seed=9)
        b = point_fibered_test(halves_ifs, region, n_addresses=4, n_points=4, depth=8, seed=9)
        assert np.array_equal(a.starts, b.starts)
        assert np.array_equal(a.diameters, b.diameters)

    def test_rotation_never_shrinks(self, rotation_ifs):
        """An isometry keeps every fiber as wide as its start set"""
        region = CellSet.full(Grid(rotation_ifs.space, (32,)))
        report = point_fibered_test(rotation_ifs, region, n_addresses=4, n_points=4, depth=12, seed=2)
        assert report.verdict == NOT_POINT_FIBERED
        assert report.witness is not None
        assert report.witness["diameter"] == pytest.approx(report.diameters[0])
        with pytest.raises(ContractError):
            coding_commute_check(rotation_ifs, report)

    def test_bad_arguments(self, halves_ifs, region):
        with pytest.raises(ContractError):
            point_fibered_test(halves_ifs, CellSet.empty(region.grid))
        with pytest.raises(ContractError):
            point_fibered_test(halves_ifs, region, n_addresses=1)
        with pytest.raises(ContractError):
            point_fibered_test(halves_ifs, region, depth=1)
        with pytest.raises(ContractError):
            point_fibered_test(halves_ifs, region, n_addresses=0)
        with pytest.raises(ContractError):
            point_fibered_test(halves_ifs, region, depth=0)
        with pytest.raises(ContractError):
            point_fibered_test(halves_ifs, region, n_points=0)

    def test_coding_map_commutes(self, halves_ifs, region):
        """pi(n sigma) = f_n(pi(sigma))"""
        report = point_fibered_test(halves_ifs, region, n_addresses=8, n_points=4, depth=40, seed=4)
        commute = coding_commute_check(halves_ifs, report)
        assert commute.passed
        assert commute.errors.shape == (8, 2)
        assert commute.max_error <= commute.bound

    def test_commute_arguments(self, halves_ifs, region):
        report = point_fibered_test(halves_ifs, region, n_addresses=4, n_points=4, depth=40, seed=4)
        assert report.point_fibered
        with pytest.raises(ContractError):
            coding_commute_check(halves_ifs, report, n_addresses=0)
        with pytest.raises(ContractError):
            coding_commute_check(halves_ifs, report, depth=0)
        with pytest.raises(ContractError):
            coding_commute_check(halves_ifs, report, n_addresses=5)

    def test_same_start_agrees_to_rounding(self, halves_ifs, region):
        """With one start both sides are the same composition"""
        report = point_fibered_test(halves_ifs, region, n_addresses=8, n_points=4, depth=40, seed=4)
        commute = coding_commute_check(halves_ifs, report, same_start=True)
        assert commute.passed
        assert commute.max_error == pytest.approx(0.0, abs=1e-12)


class TestChaosGame:
    """Random orbits"""

    def test_orbit(self, halves_ifs):
        trace = chaos_game(halves_ifs, 0.3, n_steps=1000, burn_in=10, seed=1)
        assert len(trace) == 990
        assert np.all((trace.points >= 0.0) & (trace.points <= 1.0))
        assert set(trace.letters.tolist()) == {1, 2}
        assert trace.points[1, 0] == pytest.approx(halves_ifs.eval(int(trace.letters[1]), trace.points[0])[0, 0])
        assert is_epsilon_chain(halves_ifs, trace.points, 1e-9)

    def test_seeded(self, halves_ifs):
        a = chaos_game(halves_ifs, 0.3, n_steps=200, burn_in=0, seed=7)
        b = chaos_game(halves_ifs, 0.3, n_steps=200, burn_in=0, seed=7)
        assert np.array_equal(a.points, b.points)

    def test_needs_steps_after_burn_in(self, halves_ifs):
        with pytest.raises(ContractError):
            chaos_game(halves_ifs, 0.3, n_steps=10, burn_in=10)
        with pytest.raises(ContractError):
            chaos_game(halves_ifs, 0.3, n_steps=0, burn_in=0)

    def test_zero_burn_in_is_honored(self, halves_ifs):
        trace = chaos_game(halves_ifs, 0.3, n_steps=5, burn_in=0, seed=1)
        assert len(trace.points) == 5

    def test_csv_columns(self, rotation_ifs, tmp_path):
        trace = chaos_game(rotation_ifs, 0.1, n_steps=20, burn_in=0, seed=1)
        trace.to_csv(tmp_path / "chaos.csv", rotation_ifs.space)
        frame = pd.read_csv(tmp_path / "chaos.csv")
        assert list(frame.columns) == ["letter", "theta"]
        assert len(frame) == 20

    def test_sphere_columns(self):
        ifs = IFSSpec(Space.riemann_sphere(), (Moebius(0.5, 0, 0, 1), Moebius(0.5, 0.5, 0, 1)))
        trace = chaos_game(ifs, [0j, 1 + 0j], n_steps=20, burn_in=0, seed=1)
        assert list(trace.frame(ifs.space).columns) == ["letter", "z1_re", "z1_im", "z2_re", "z2_im"]

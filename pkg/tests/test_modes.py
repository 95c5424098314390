"""Mode solver checks against closed-form empty-cavity results.

With no planes the eigenproblem is u'' + q^2 u = 0, u(0) = u(L) = 0, whose
solutions are known exactly: Omega_n = n pi c / L, u_n = sqrt(2/L) sin(n pi
z/L), confinement L_c/L - sin(2 pi n L_c/L)/(2 pi n). Every solver path is
validated against these before the planes are switched on.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photherm import modes
from photherm.constants import SPEED_OF_LIGHT as C
from photherm.params import PhysicalParams

FULL_EMPTY_COUNT = 6366  # floor(omega_max L / (pi c)) at defaults
REDUCED_EMPTY_COUNT = 636


@pytest.fixture(scope="module")
def empty_full():
    return PhysicalParams(plane_strength=0.0)


@pytest.fixture(scope="module")
def empty_roots(empty_full):
    return modes.scan_eigenfrequencies(empty_full)


def empty_gamma(n: np.ndarray, ratio: float) -> np.ndarray:
    return ratio - np.sin(2.0 * math.pi * n * ratio) / (2.0 * math.pi * n)


class TestEmptyCavity:
    def test_census_count(self, empty_roots):
        assert empty_roots.size == FULL_EMPTY_COUNT

    def test_roots_match_analytic(self, empty_full, empty_roots):
        n = np.arange(1, empty_roots.size + 1)
        exact = n * math.pi * C / empty_full.cavity_length
        assert np.max(np.abs(empty_roots / exact - 1.0)) < 1e-11

    def test_subinterval_completeness(self, empty_full, empty_roots):
        scale = empty_full.cavity_length / (math.pi * C)
        for lo, hi in [(1e14, 2e14), (3.7e13, 3.9e13), (4.9e14, 5e14)]:
            found = np.count_nonzero((empty_roots > lo) & (empty_roots <= hi))
            assert found == math.floor(hi * scale) - math.floor(lo * scale)

    def test_reduced_census_count(self, empty_full):
        p = empty_full.replace(cavity_length=empty_full.cavity_length / 10.0)
        assert modes.scan_eigenfrequencies(p).size == REDUCED_EMPTY_COUNT

    def test_mismatch_zero_at_eigenfrequencies(self, empty_full):
        for n in (1, 7, 100, 6000):
            om = n * math.pi * C / empty_full.cavity_length
            assert abs(modes.mismatch(om, empty_full)) < 1e-8

    def test_mismatch_alternates_between_roots(self, empty_full):
        vals = [
            modes.mismatch((n + 0.5) * math.pi * C / empty_full.cavity_length, empty_full)
            for n in range(1, 8)
        ]
        assert all(abs(v) > 0.9 for v in vals)
        assert all(vals[i] * vals[i + 1] < 0 for i in range(len(vals) - 1))

    def test_gamma_closed_form(self, empty_full):
        table = modes.solve_modes(empty_full, omega_max=2e13)
        n = np.arange(1, table.n_modes + 1)
        ratio = empty_full.crystal_length / empty_full.cavity_length
        assert np.max(np.abs(table.gamma_conf - empty_gamma(n, ratio))) < 1e-12

    def test_peak_count_tracks_wavelength(self, empty_full):
        table = modes.solve_modes(empty_full, omega_max=2e13)
        n = np.arange(1, table.n_modes + 1)
        # sin(n pi z / L) has one positive hump per full wavelength in (0, L_c)
        expected = n * empty_full.crystal_length / (2.0 * empty_full.cavity_length)
        assert np.max(np.abs(table.m_peak - expected)) <= 1.0


class TestScanRange:
    def test_empty_below_fundamental(self):
        p = PhysicalParams()
        roots = modes.scan_eigenfrequencies(
            p, omega_max=0.99 * math.pi * C / (2.0 * p.cavity_length)
        )
        assert roots.size == 0

    def test_plane_census_within_band(self, full_table):
        assert 6000 <= full_table.n_modes <= 7500


class TestNormalization:
    @settings(max_examples=15, deadline=None)
    @given(
        eta=st.floats(min_value=0.0, max_value=1e-4),
        omega_hi=st.floats(min_value=2e13, max_value=6e13),
    )
    def test_norm_includes_delta_terms(self, eta, omega_hi):
        p = PhysicalParams(plane_strength=eta, cavity_length=1.2e-3)
        omega = modes.scan_eigenfrequencies(p, omega_max=omega_hi)
        assert omega.size > 0
        assert np.max(modes.norm_residuals(omega, p)) < 1e-10

    def test_norm_residual_full_scale(self, full_params, full_table):
        res = modes.norm_residuals(full_table.omega[::29], full_params)
        assert np.max(res) < 1e-10


class TestWithPlanes:
    def test_root_continuity_under_eta_perturbation(self, full_params, full_table):
        p2 = full_params.replace(plane_strength=full_params.plane_strength * 1.001)
        om2 = modes.scan_eigenfrequencies(p2)
        assert om2.size == full_table.n_modes  # no swaps or losses
        assert np.max(np.abs(om2 / full_table.omega - 1.0)) < 1e-2

    def test_band_edge_peak_count(self, full_table):
        # lower edge of the second band: one hump per lattice period
        lo_edge = 9.43e13
        sel = np.abs(full_table.omega - lo_edge) / lo_edge < 0.005
        idx = np.nonzero(sel)[0]
        best = idx[np.argmax(full_table.gamma_conf[idx])]
        assert full_table.m_peak[best] == 6
        assert full_table.k_assigned[best] == pytest.approx(
            math.pi / full_table.plane_spacing
        )

    def test_gamma_bounds(self, full_table):
        assert np.all(full_table.gamma_conf > 0.0)
        assert np.all(full_table.gamma_conf < 1.0)

    def test_scalar_and_grid_mismatch_agree(self, full_params):
        om = np.linspace(3e13, 4e14, 57)
        grid = modes.mismatch_grid(om, full_params)
        scalar = np.array([modes.mismatch(o, full_params) for o in om])
        assert np.max(np.abs(grid - scalar)) < 1e-13


class TestModeTable:
    def test_save_load_roundtrip(self, reduced_table, tmp_path):
        path = tmp_path / "table.npz"
        reduced_table.save(path)
        back = modes.ModeTable.load(path)
        assert np.array_equal(back.omega, reduced_table.omega)
        assert np.array_equal(back.gamma_conf, reduced_table.gamma_conf)
        assert np.array_equal(back.m_peak, reduced_table.m_peak)
        assert back.plane_strength == reduced_table.plane_strength
        assert back.n_planes == reduced_table.n_planes

    def test_matches_params(self, reduced_table, reduced_params, full_params):
        assert reduced_table.matches(reduced_params)
        assert not reduced_table.matches(full_params)

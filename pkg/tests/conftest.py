"""Shared fixtures: solved mode tables are expensive, build once per session."""

import pytest

from photherm.params import PhysicalParams, apply_scale
from photherm import atoms, bands, kinetics, modes


@pytest.fixture(scope="session")
def full_params() -> PhysicalParams:
    return PhysicalParams()


@pytest.fixture(scope="session")
def reduced_params(full_params) -> PhysicalParams:
    return apply_scale(full_params, "reduced")


@pytest.fixture(scope="session")
def full_table(full_params):
    return modes.solve_modes(full_params)


@pytest.fixture(scope="session")
def reduced_table(reduced_params):
    return modes.solve_modes(reduced_params)


@pytest.fixture(scope="session")
def full_bands(full_table):
    return bands.band_structure(full_table)


@pytest.fixture(scope="session")
def reduced_bands(reduced_table):
    return bands.band_structure(reduced_table)


@pytest.fixture(scope="session")
def reduced_tables(reduced_table, reduced_params):
    grid = atoms.build_grid(reduced_params)
    return kinetics.build_tables(
        reduced_table.omega, reduced_table.gamma_conf, grid, reduced_params
    )

"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from wflo.farm_domain import FarmGrid, ProximityPairs, TurbineSpec, make_square_grid
from wflo.qip import Layout, MrfModel, QipModel, mrf_energy
from wflo.wake import InteractionMatrix, WakeParams, axial_induction, build_interaction_matrix
from wflo.wind_resource import builtin_wr1

# Frozen reference constants, derived by hand from the closed forms:
# a = (1 - sqrt(1 - 0.88)) / 2; deficits 2a / (1 + alpha*d/R)^2 at R=20, alpha=0.1.
A_088 = 0.3267949192431122
DEFICIT_200 = 0.1633974596215561   # d=200: 2a / (1+1)^2
DEFICIT_400 = 0.0726210931651360   # d=400: 2a / (1+2)^2


def brute_force_mrf_min(model: MrfModel) -> float:
    """Exhaustive minimum energy; independent of any message-passing code."""
    best = math.inf
    for bits in itertools.product((0, 1), repeat=model.n_vertices):
        best = min(best, mrf_energy(model, np.asarray(bits)))
    return best


def lagrangian_energy(w: np.ndarray, k: int, beta: float, x: np.ndarray) -> float:
    """Direct evaluation of the penalized quadratic objective."""
    x = x.astype(float)
    return float(x @ w @ x + beta * (x.sum() - k) ** 2)


def random_mrf(rng: np.random.Generator, n: int, p_edge: float = 0.6, scale: float = 3.0) -> MrfModel:
    edges = [(s, t) for s in range(n) for t in range(s + 1, n) if rng.random() < p_edge]
    pot = rng.normal(size=(len(edges), 4)) * scale
    return MrfModel(
        n_vertices=n,
        unary=rng.normal(size=(n, 2)) * scale,
        edge_s=[e[0] for e in edges],
        edge_t=[e[1] for e in edges],
        edge_pot=pot,
        constant=float(rng.normal()),
    )


def line_grid(n_cells: int, spacing: float = 200.0) -> FarmGrid:
    """Cells in a single north-south line, northernmost first (along WR-1 wind)."""
    ys = -spacing * np.arange(n_cells, dtype=float)
    xs = np.zeros(n_cells)
    return FarmGrid(
        xs=xs, ys=ys, cell_side=spacing,
        bounds=(-spacing / 2, float(ys.min()) - spacing / 2, spacing / 2, spacing / 2),
    )


@pytest.fixture
def mosetti_spec() -> TurbineSpec:
    return TurbineSpec(rotor_radius=20.0, hub_height=60.0, thrust=0.88, power_model="cubic")


@pytest.fixture
def wake_params() -> WakeParams:
    return WakeParams(decay=0.1, induction=A_088)


@pytest.fixture
def line3_qip(mosetti_spec, wake_params) -> QipModel:
    """Three cells 200 m apart along a north wind: the smallest wake chain."""
    grid = line_grid(3)
    w = build_interaction_matrix(grid, builtin_wr1(), mosetti_spec, wake_params)
    return QipModel(w=w, k=2)


@pytest.fixture
def line16_qip(mosetti_spec, wake_params) -> QipModel:
    grid = line_grid(16)
    w = build_interaction_matrix(grid, builtin_wr1(), mosetti_spec, wake_params)
    return QipModel(w=w, k=3)

"""Reference solvers: exact enumeration, greedy construction, swap local search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from wflo.decode import InfeasibleLayoutError, repair_swap
from wflo.farm_domain import FarmGrid, TurbineSpec
from wflo.qip import Layout, QipModel
from wflo.wake import WakeParams
from wflo.wind_resource import WindRose

DEFAULT_ENUMERATION_BUDGET = 10_000_000


@dataclass(frozen=True)
class TruePowerObjective:
    """Evaluate candidates on expected farm power instead of the surrogate."""

    grid: FarmGrid
    rose: WindRose
    spec: TurbineSpec
    params: WakeParams


def brute_force(
    qip: QipModel,
    objective: str | TruePowerObjective = "surrogate",
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> tuple[Layout, float]:
    """Exhaustive optimum over all feasible k-subsets.

    Minimizes the surrogate interaction energy, or maximizes expected power
    when given a TruePowerObjective. Ties resolve to the lexicographically
    first subset. Errors out before enumerating more than ``budget`` subsets.
    """
    n, k = qip.n, qip.k
    total = math.comb(n, k)
    if total > budget:
        raise ValueError(f"C({n}, {k}) = {total} exceeds the enumeration budget of {budget}")
    conflicts = qip.exclusions.adjacency(n) if qip.exclusions.pairs else None
    s_mat = qip.w.entries + qip.w.entries.T
    maximize = isinstance(objective, TruePowerObjective)
    if not maximize and objective != "surrogate":
        raise ValueError(f"unknown objective {objective!r}")
    if maximize:
        from wflo.evaluation import evaluate_layout  # local import: avoids a cycle

    best_value = -np.inf if maximize else np.inf
    best_subset: tuple[int, ...] | None = None
    for subset in combinations(range(n), k):
        if conflicts is not None:
            idx = np.fromiter(subset, dtype=np.int64, count=k)
            if conflicts[np.ix_(idx, idx)].any():
                continue
        else:
            idx = np.fromiter(subset, dtype=np.int64, count=k)
        if maximize:
            layout = Layout.from_indices(idx, n)
            value = evaluate_layout(layout, objective.grid, objective.rose, objective.spec, objective.params).expected_power
            if value > best_value:
                best_value, best_subset = value, subset
        else:
            value = s_mat[np.ix_(idx, idx)].sum() / 2.0
            if value < best_value:
                best_value, best_subset = value, subset
    if best_subset is None:
        raise InfeasibleLayoutError(f"no feasible layout with {k} turbines exists")
    return Layout.from_indices(best_subset, n), float(best_value)


def greedy_construct(qip: QipModel) -> Layout:
    """Add turbines one at a time, each minimizing the marginal interaction increase.

    Ties resolve to the lowest cell index; excluded cells are skipped.
    """
    n, k = qip.n, qip.k
    s_mat = qip.w.entries + qip.w.entries.T
    conflicts = qip.exclusions.adjacency(n) if qip.exclusions.pairs else None
    selected = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)
    marginal = np.zeros(n)
    for _ in range(k):
        cost = np.where(selected | blocked, np.inf, marginal)
        pick = int(np.argmin(cost))
        if not np.isfinite(cost[pick]):
            raise InfeasibleLayoutError(f"greedy construction stuck before reaching {k} turbines")
        selected[pick] = True
        marginal += s_mat[pick]
        if conflicts is not None:
            blocked |= conflicts[pick]
    return Layout(assignment=selected.astype(np.int8))


def _random_feasible(qip: QipModel, rng: np.random.Generator, attempts: int = 1000) -> Layout:
    """Rejection-sample a feasible k-subset; falls back to a greedy random fill."""
    n, k = qip.n, qip.k
    conflicts = qip.exclusions.adjacency(n) if qip.exclusions.pairs else None
    for _ in range(attempts):
        idx = rng.choice(n, size=k, replace=False)
        if conflicts is None or not conflicts[np.ix_(idx, idx)].any():
            return Layout.from_indices(idx, n)
    # Dense exclusions: walk a random permutation and keep compatible cells.
    order = rng.permutation(n)
    chosen: list[int] = []
    for cell in order:
        cell = int(cell)
        if conflicts is not None and any(conflicts[cell, c] for c in chosen):
            continue
        chosen.append(cell)
        if len(chosen) == k:
            return Layout.from_indices(chosen, n)
    raise InfeasibleLayoutError(f"could not sample a feasible layout with {k} turbines")


def local_search(qip: QipModel, restarts: int = 1, seed: int = 0) -> tuple[Layout, float]:
    """Swap descent from a greedy start plus seeded random restarts.

    Returns the best layout found and its surrogate energy; reproducible
    for a fixed (seed, instance) pair.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    rng = np.random.default_rng(seed)
    best_layout = repair_swap(greedy_construct(qip), qip)
    best_value = qip.surrogate_energy(best_layout)
    for _ in range(restarts - 1):
        start = _random_feasible(qip, rng)
        candidate = repair_swap(start, qip)
        value = qip.surrogate_energy(candidate)
        if value < best_value - 1e-15:
            best_layout, best_value = candidate, value
    return best_layout, float(best_value)

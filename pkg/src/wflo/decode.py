"""Turn solver min-marginals into feasible layouts and repair them locally."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from wflo.farm_domain import FarmGrid, ProximityPairs
from wflo.qip import Layout, QipModel
from wflo.trws import SolveReport


class InfeasibleLayoutError(ValueError):
    """Raised when no layout satisfying the budget and exclusions can be built."""


def round_top_k(report: SolveReport, k: int, exclusions: ProximityPairs) -> Layout:
    """Greedy top-k rounding of solver min-marginals.

    Cells are ranked by min-marginal advantage (label-0 energy minus label-1
    energy, descending: the cells the solver most wants occupied come
    first), then picked greedily while skipping anything excluded by an
    already-picked cell. Exact ties resolve to the lower cell index.
    """
    marginals = report.min_marginals
    n = marginals.shape[0]
    if k < 0 or k > n:
        raise InfeasibleLayoutError(f"budget k={k} out of range for {n} cells")
    if k == 0:
        return Layout(assignment=np.zeros(n, dtype=np.int8))
    advantage = marginals[:, 0] - marginals[:, 1]
    order = np.lexsort((np.arange(n), -advantage))
    conflicts = _conflict_sets(exclusions)
    chosen: list[int] = []
    blocked: set[int] = set()
    for cell in order:
        cell = int(cell)
        if cell in blocked:
            continue
        chosen.append(cell)
        blocked.update(conflicts.get(cell, ()))
        if len(chosen) == k:
            break
    if len(chosen) < k:
        raise InfeasibleLayoutError(f"only {len(chosen)} mutually compatible cells exist, need {k}")
    return Layout.from_indices(chosen, n)


def _conflict_sets(exclusions: ProximityPairs) -> dict[int, set[int]]:
    conflicts: dict[int, set[int]] = {}
    for i, j in exclusions.pairs:
        conflicts.setdefault(i, set()).add(j)
        conflicts.setdefault(j, set()).add(i)
    return conflicts


def _check_feasible(layout: Layout, qip: QipModel) -> None:
    if layout.k != qip.k:
        raise InfeasibleLayoutError(f"layout has {layout.k} turbines, budget is {qip.k}")
    on = set(int(i) for i in layout.indices)
    for i, j in qip.exclusions.pairs:
        if i in on and j in on:
            raise InfeasibleLayoutError(f"layout violates exclusion pair ({i}, {j})")


def repair_swap(layout: Layout, qip: QipModel, max_passes: int = 10_000) -> Layout:
    """Best-improvement 1-swap descent on the surrogate objective X^T W X.

    Each pass moves the single turbine whose relocation to an empty,
    exclusion-compatible cell lowers the interaction energy the most;
    stops at a local minimum or after ``max_passes`` moves. Energy never
    increases and feasibility is preserved.
    """
    _check_feasible(layout, qip)
    n = qip.n
    s_mat = qip.w.entries + qip.w.entries.T
    excl = qip.exclusions.adjacency(n) if qip.exclusions.pairs else None
    selected = layout.assignment.astype(bool).copy()

    for _ in range(max_passes):
        sel_idx = np.flatnonzero(selected)
        empty_idx = np.flatnonzero(~selected)
        if empty_idx.size == 0 or sel_idx.size == 0:
            break
        # Interaction of every cell with the current selection.
        coupling = s_mat[:, sel_idx].sum(axis=1)
        removal_gain = coupling[sel_idx]                       # drop turbine i: -coupling[i]
        delta = coupling[empty_idx][:, None] - s_mat[np.ix_(empty_idx, sel_idx)] - removal_gain[None, :]
        if excl is not None:
            conflict_count = excl[:, sel_idx].sum(axis=1)
            cand_conflicts = conflict_count[empty_idx]
            allowed = (cand_conflicts[:, None] == 0) | (
                (cand_conflicts[:, None] == 1) & excl[np.ix_(empty_idx, sel_idx)]
            )
            delta = np.where(allowed, delta, np.inf)
        flat = int(np.argmin(delta))
        best = delta.flat[flat]
        if not best < -1e-12:
            break
        e, i = divmod(flat, sel_idx.size)
        selected[sel_idx[i]] = False
        selected[empty_idx[e]] = True
    return Layout(assignment=selected.astype(np.int8))


def save_layout(layout: Layout, grid: FarmGrid, path: str | Path) -> None:
    """Layout CSV: one selected cell per row with its centroid coordinates."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_index", "x_m", "y_m"])
        for i in layout.indices:
            writer.writerow([int(i), repr(float(grid.xs[i])), repr(float(grid.ys[i]))])


def load_layout(path: str | Path, n: int) -> Layout:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "cell_index" not in reader.fieldnames:
            raise ValueError(f"{path}: expected CSV header cell_index,x_m,y_m")
        indices = [int(row["cell_index"]) for row in reader]
    return Layout.from_indices(indices, n)

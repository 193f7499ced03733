"""Quadratic integer program and its penalty reformulation as a pairwise MRF.

The turbine-count constraint e^T X = K is folded into the objective as a
quadratic penalty beta * (e^T X - K)^2. Expanding over binary variables
gives unary coefficient beta*(1 - 2K) on every vertex, pairwise 2*beta on
every unordered pair, and a constant beta*K^2, so the MRF energy equals
X^T W X + beta * (e^T X - K)^2 exactly for every assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wflo.farm_domain import ProximityPairs
from wflo.wake import InteractionMatrix


@dataclass(frozen=True, eq=False)
class Layout:
    """Binary cell-selection vector."""

    assignment: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.assignment, dtype=np.int8)
        if arr.ndim != 1:
            raise ValueError("layout assignment must be a 1-D vector")
        if np.any((arr != 0) & (arr != 1)):
            raise ValueError("layout entries must be 0 or 1")
        object.__setattr__(self, "assignment", arr)

    @classmethod
    def from_indices(cls, indices, n: int) -> "Layout":
        arr = np.zeros(n, dtype=np.int8)
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError("cell index out of range")
        arr[idx] = 1
        return cls(assignment=arr)

    @property
    def n(self) -> int:
        return int(self.assignment.size)

    @property
    def k(self) -> int:
        return int(self.assignment.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.assignment)


@dataclass(frozen=True)
class QipModel:
    """Minimize X^T W X over binary X subject to exactly k ones and exclusions."""

    w: InteractionMatrix
    k: int
    exclusions: ProximityPairs = field(default_factory=lambda: ProximityPairs(pairs=(), min_separation=0.0))

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.w.n:
            raise ValueError(f"turbine budget k={self.k} must lie in [1, {self.w.n}]")
        for i, j in self.exclusions.pairs:
            if not (0 <= i < self.w.n and 0 <= j < self.w.n):
                raise ValueError(f"exclusion pair ({i}, {j}) references an invalid cell")

    @property
    def n(self) -> int:
        return self.w.n

    def surrogate_energy(self, layout: Layout | np.ndarray) -> float:
        x = layout.assignment if isinstance(layout, Layout) else np.asarray(layout)
        x = x.astype(float)
        return float(x @ self.w.entries @ x)


@dataclass(frozen=True, eq=False)
class MrfModel:
    """Pairwise binary MRF with an explicit constant energy offset.

    Edges are stored once with s < t, sorted by (s, t); edge potential rows
    are (phi(0,0), phi(0,1), phi(1,0), phi(1,1)).
    """

    n_vertices: int
    unary: np.ndarray       # (N, 2)
    edge_s: np.ndarray      # (E,) int32
    edge_t: np.ndarray      # (E,) int32
    edge_pot: np.ndarray    # (E, 4)
    constant: float = 0.0

    def __post_init__(self) -> None:
        unary = np.asarray(self.unary, dtype=float).reshape(self.n_vertices, 2)
        es = np.asarray(self.edge_s, dtype=np.int32)
        et = np.asarray(self.edge_t, dtype=np.int32)
        pot = np.asarray(self.edge_pot, dtype=float).reshape(es.size, 4)
        if np.any(es >= et):
            raise ValueError("edges must be stored with s < t")
        if es.size:
            key = es.astype(np.int64) * self.n_vertices + et
            if np.any(np.diff(key) <= 0):
                raise ValueError("edges must be sorted by (s, t) without duplicates")
            if et.max() >= self.n_vertices or es.min() < 0:
                raise ValueError("edge endpoint out of range")
        if not (np.all(np.isfinite(unary)) and np.all(np.isfinite(pot))):
            raise ValueError("potentials must be finite")
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "edge_s", es)
        object.__setattr__(self, "edge_t", et)
        object.__setattr__(self, "edge_pot", pot)

    @property
    def n_edges(self) -> int:
        return int(self.edge_s.size)

    @property
    def edges(self) -> list[tuple[int, int, float, float, float, float]]:
        return [
            (int(s), int(t), *map(float, pot))
            for s, t, pot in zip(self.edge_s, self.edge_t, self.edge_pot)
        ]


def _sorted_edges(n: int, edge_dict: dict[tuple[int, int], np.ndarray]):
    keys = sorted(edge_dict)
    if keys:
        es = np.fromiter((k[0] for k in keys), dtype=np.int32, count=len(keys))
        et = np.fromiter((k[1] for k in keys), dtype=np.int32, count=len(keys))
        pot = np.vstack([edge_dict[k] for k in keys])
    else:
        es = np.empty(0, dtype=np.int32)
        et = np.empty(0, dtype=np.int32)
        pot = np.empty((0, 4), dtype=float)
    return es, et, pot


def build_penalized_mrf(qip: QipModel, beta: float) -> MrfModel:
    """Pairwise MRF whose energy equals the penalized quadratic objective."""
    if not beta > 0:
        raise ValueError("penalty factor beta must be positive")
    n, k = qip.n, qip.k
    w = qip.w.entries
    unary = np.zeros((n, 2), dtype=float)
    unary[:, 1] = beta * (1.0 - 2.0 * k)

    pair_w = w + w.T
    iu, ju = np.triu_indices(n, k=1)
    phi11 = pair_w[iu, ju] + 2.0 * beta
    keep = phi11 != 0.0
    es = iu[keep].astype(np.int32)
    et = ju[keep].astype(np.int32)
    pot = np.zeros((es.size, 4), dtype=float)
    pot[:, 3] = phi11[keep]
    return MrfModel(
        n_vertices=n, unary=unary, edge_s=es, edge_t=et, edge_pot=pot, constant=beta * float(k) ** 2
    )


def add_exclusions(model: MrfModel, exclusions: ProximityPairs, penalty_m: float) -> MrfModel:
    """New model with ``penalty_m`` added to phi(1,1) of every excluded pair."""
    if not penalty_m > 0:
        raise ValueError("exclusion penalty must be positive")
    if not exclusions.pairs:
        return model
    n = model.n_vertices
    pairs = exclusions.as_array()
    keys = pairs[:, 0] * n + pairs[:, 1]
    edge_keys = model.edge_s.astype(np.int64) * n + model.edge_t
    pos = np.searchsorted(edge_keys, keys)
    pos_clipped = np.minimum(pos, max(edge_keys.size - 1, 0))
    present = edge_keys.size > 0
    hit = (edge_keys[pos_clipped] == keys) if present else np.zeros(keys.size, dtype=bool)

    pot = model.edge_pot.copy()
    np.add.at(pot[:, 3], pos_clipped[hit], penalty_m)
    es, et = model.edge_s, model.edge_t
    if not hit.all():
        missing = pairs[~hit]
        extra_pot = np.zeros((missing.shape[0], 4))
        extra_pot[:, 3] = penalty_m
        es = np.concatenate([es, missing[:, 0].astype(np.int32)])
        et = np.concatenate([et, missing[:, 1].astype(np.int32)])
        pot = np.vstack([pot, extra_pot])
        order = np.argsort(es.astype(np.int64) * n + et, kind="stable")
        es, et, pot = es[order], et[order], pot[order]
    return MrfModel(
        n_vertices=n, unary=model.unary.copy(), edge_s=es, edge_t=et, edge_pot=pot,
        constant=model.constant,
    )


def mrf_energy(model: MrfModel, x: Layout | np.ndarray) -> float:
    """Total energy of an assignment: unary + pairwise + constant."""
    arr = x.assignment if isinstance(x, Layout) else np.asarray(x)
    if arr.size != model.n_vertices:
        raise ValueError(f"assignment length {arr.size} does not match {model.n_vertices} vertices")
    arr = arr.astype(np.int64)
    e = model.unary[np.arange(model.n_vertices), arr].sum()
    if model.n_edges:
        idx = 2 * arr[model.edge_s] + arr[model.edge_t]
        e += model.edge_pot[np.arange(model.n_edges), idx].sum()
    return float(e + model.constant)


def default_beta(qip: QipModel) -> float:
    """Penalty large enough that shrinking any budget violation always pays.

    One plus the sum of the k largest row sums of W + W^T bounds the
    interaction increase from adding any k turbines, so every global
    minimizer of the penalized model carries exactly k ones.
    """
    row_sums = (qip.w.entries + qip.w.entries.T).sum(axis=1)
    top = np.sort(row_sums)[-qip.k:]
    return 1.0 + float(top.sum())


def save_model(model: MrfModel, path: str | Path) -> None:
    """Line-oriented dump: ``u s phi0 phi1`` and ``e s t phi00 phi01 phi10 phi11``."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"n {model.n_vertices} {model.n_edges} {model.constant!r}\n")
        for s in range(model.n_vertices):
            fh.write(f"u {s} {model.unary[s, 0]!r} {model.unary[s, 1]!r}\n")
        for s, t, p00, p01, p10, p11 in model.edges:
            fh.write(f"e {s} {t} {p00!r} {p01!r} {p10!r} {p11!r}\n")


def load_model(path: str | Path) -> MrfModel:
    path = Path(path)
    unary = edge = None
    edges: dict[tuple[int, int], np.ndarray] = {}
    constant = 0.0
    n = 0
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "n":
                n = int(parts[1])
                constant = float(parts[3]) if len(parts) > 3 else 0.0
                unary = np.zeros((n, 2), dtype=float)
            elif parts[0] == "u":
                unary[int(parts[1])] = [float(parts[2]), float(parts[3])]
            elif parts[0] == "e":
                s, t = int(parts[1]), int(parts[2])
                edges[(s, t)] = np.asarray([float(v) for v in parts[3:7]])
            else:
                raise ValueError(f"{path}: unknown record {parts[0]!r}")
    if unary is None:
        raise ValueError(f"{path}: missing model header")
    es, et, pot = _sorted_edges(n, edges)
    return MrfModel(n_vertices=n, unary=unary, edge_s=es, edge_t=et, edge_pot=pot, constant=constant)

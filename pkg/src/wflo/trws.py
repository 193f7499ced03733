"""Sequential tree-reweighted message passing for pairwise binary MRFs.

The model graph is covered by monotonic chains under the fixed vertex
order (model index order): at every vertex, incoming edges are paired
with outgoing edges, so the number of chains through vertex s is
max(in-degree, out-degree) and each edge lies on exactly one chain. The
chain weights are uniform.

Sweeps alternate a forward and a backward pass. At each vertex the
min-marginals of all chains (and triplet-cluster blocks, when present)
are averaged, then pending messages are sent with the min-sum update and
immediately folded into the reparameterized potentials. Each message is
normalized to have minimum zero; the subtracted constants, accumulated
over a backward pass together with the chain-start node terms and the
block minima, are exactly the combined lower bound of the decomposition.
Averaging exact min-marginals never lowers that bound, which yields the
monotone lower-bound trace.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from wflo.qip import Layout, MrfModel, mrf_energy

_OTHER_AXES = ((2, 3), (1, 3), (1, 2))  # table axes to minimize over, per vertex slot


@dataclass(frozen=True)
class SolverConfig:
    max_sweeps: int = 2000
    tolerance: float = 1e-9
    cutoff_seconds: float = 3600.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        if self.cutoff_seconds <= 0:
            raise ValueError("cutoff_seconds must be positive")


@dataclass
class ChainDecomposition:
    """Monotonic chains covering every edge exactly once, with uniform weights."""

    vertex_order: np.ndarray
    chains: list[list[int]]
    rho: np.ndarray


@dataclass
class SolveReport:
    best_assignment: Layout
    best_energy: float
    lower_bound_trace: list[float]
    sweeps: int
    wall_time: float
    converged: bool
    min_marginals: np.ndarray  # (N, 2): label-0 best, label-1 best

    @property
    def lower_bound(self) -> float:
        return self.lower_bound_trace[-1] if self.lower_bound_trace else float("-inf")

    @property
    def gap(self) -> float:
        return self.best_energy - self.lower_bound

    def to_dict(self) -> dict:
        return {
            "best_energy": self.best_energy,
            "lower_bound": self.lower_bound,
            "gap": self.gap,
            "sweeps": self.sweeps,
            "wall_time": self.wall_time,
            "converged": self.converged,
            "selected_cells": [int(i) for i in self.best_assignment.indices],
            "lower_bound_trace": [float(v) for v in self.lower_bound_trace],
        }


def decompose(model: MrfModel) -> ChainDecomposition:
    """Greedy monotonic-chain cover: pair incoming with outgoing edges per vertex."""
    if model.n_vertices < 1:
        raise ValueError("cannot decompose an empty model")
    n = model.n_vertices
    out_ptr = _node_pointers(model.edge_s, n)
    chains: list[list[int]] = []
    open_at: dict[int, list[int]] = {}
    for s in range(n):
        targets = model.edge_t[out_ptr[s]: out_ptr[s + 1]]
        incoming = open_at.pop(s, [])
        for idx, t in enumerate(targets):
            t = int(t)
            if idx < len(incoming):
                cid = incoming[idx]
                chains[cid].append(t)
            else:
                chains.append([s, t])
                cid = len(chains) - 1
            open_at.setdefault(t, []).append(cid)
    m = len(chains)
    rho = np.full(m, 1.0 / m) if m else np.empty(0)
    return ChainDecomposition(vertex_order=np.arange(n), chains=chains, rho=rho)


def _node_pointers(sorted_nodes: np.ndarray, n: int) -> np.ndarray:
    counts = np.bincount(sorted_nodes, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr


class MessageState:
    """Messages plus reparameterized potentials for one solve.

    The stored ``unary``/``pot`` arrays start as copies of the model and are
    only changed by energy-preserving operations (message reparameterization
    bookkeeping lives in ``m_fwd``/``m_bwd``; cluster exchanges move mass
    between unaries and cluster tables), so ``energy_of`` always agrees with
    the original model.
    """

    def __init__(self, model: MrfModel):
        if model.n_vertices < 1:
            raise ValueError("cannot build a message state for an empty model")
        self.model = model
        self.n = model.n_vertices
        self.unary = model.unary.copy()
        self.edge_s = model.edge_s
        self.edge_t = model.edge_t
        self.pot = model.edge_pot.copy()
        self.constant = float(model.constant)
        e = model.n_edges
        self.m_fwd = np.zeros((e, 2))  # message lower -> higher vertex, function of x_t
        self.m_bwd = np.zeros((e, 2))  # message higher -> lower vertex, function of x_s
        self.out_ptr = _node_pointers(self.edge_s, self.n)
        in_order = np.argsort(self.edge_t, kind="stable").astype(np.int64)
        self.in_order = in_order
        self.in_ptr = _node_pointers(self.edge_t[in_order], self.n)
        n_minus = np.bincount(self.edge_t, minlength=self.n)
        n_plus = np.bincount(self.edge_s, minlength=self.n)
        self.degree = n_minus + n_plus
        self.n_chains = np.maximum(n_minus, n_plus)
        self.start_count = np.maximum(0, n_plus - n_minus)
        self.cluster_vertices = np.empty((0, 3), dtype=np.int64)
        self.cluster_tables = np.empty((0, 2, 2, 2))
        self._edge_key = self.edge_s.astype(np.int64) * self.n + self.edge_t
        self._refresh_weights()

    # -- structure ---------------------------------------------------------

    def _refresh_weights(self) -> None:
        n_clusters = np.zeros(self.n, dtype=np.int64)
        by_vertex: list[list[list[int]]] = [[[], [], []] for _ in range(self.n)]
        for cid, verts in enumerate(self.cluster_vertices):
            for pos in range(3):
                v = int(verts[pos])
                n_clusters[v] += 1
                by_vertex[v][pos].append(cid)
        self._clusters_at = [
            [np.asarray(by_vertex[v][pos], dtype=np.int64) for pos in range(3)] for v in range(self.n)
        ]
        total = self.n_chains + n_clusters
        self.gamma = np.where(total > 0, 1.0 / np.maximum(total, 1), 0.0)
        self._has_cluster = n_clusters > 0

    def find_edge(self, s: int, t: int) -> int:
        a, b = (s, t) if s < t else (t, s)
        key = a * self.n + b
        idx = int(np.searchsorted(self._edge_key, key))
        if idx >= self._edge_key.size or self._edge_key[idx] != key:
            raise KeyError(f"no edge between {s} and {t}")
        return idx

    def add_cluster(self, vertices: tuple[int, int, int]) -> int:
        """Register a triplet block with a zero table; all three edges must exist."""
        i, j, k = sorted(int(v) for v in vertices)
        if len({i, j, k}) != 3:
            raise ValueError("a cluster needs three distinct vertices")
        for a, b in ((i, j), (i, k), (j, k)):
            self.find_edge(a, b)
        self.cluster_vertices = np.vstack([self.cluster_vertices, [i, j, k]])
        self.cluster_tables = np.concatenate([self.cluster_tables, np.zeros((1, 2, 2, 2))])
        self._refresh_weights()
        return int(self.cluster_vertices.shape[0] - 1)

    def absorb_cluster_edges(self, cid: int) -> None:
        """Fold the three reparameterized edge tables of a cluster into its block.

        Each edge keeps its scalar minimum in the model constant and is left
        with an identically-zero reparameterized table, so the energy of
        every assignment is unchanged while the block then carries the joint
        (triangle-consistent) interaction.
        """
        i, j, k = (int(v) for v in self.cluster_vertices[cid])
        for (a, b), axes in (((i, j), (0, 1)), ((i, k), (0, 2)), ((j, k), (1, 2))):
            e = self.find_edge(a, b)
            table = self.reparam_edge(e)
            floor = float(table.min())
            lifted = np.zeros((1, 1, 1))
            shape = [1, 1, 1]
            shape[axes[0]] = 2
            shape[axes[1]] = 2
            self.cluster_tables[cid] += (table - floor).reshape(shape)
            self.constant += floor
            # Leave the edge energetically empty: pot == m_fwd + m_bwd.
            self.pot[e] = (self.m_bwd[e][:, None] + self.m_fwd[e][None, :]).reshape(4)

    # -- reparameterized views ----------------------------------------------

    def reparam_unary(self, s: int) -> np.ndarray:
        """phi_bar_s: stored unary plus every incoming message."""
        d = self.unary[s].copy()
        in_ids = self.in_order[self.in_ptr[s]: self.in_ptr[s + 1]]
        if in_ids.size:
            d += self.m_fwd[in_ids].sum(axis=0)
        o0, o1 = self.out_ptr[s], self.out_ptr[s + 1]
        if o1 > o0:
            d += self.m_bwd[o0:o1].sum(axis=0)
        return d

    def reparam_edge(self, e: int) -> np.ndarray:
        """phi_bar_st as a (2, 2) table over (x_s, x_t) with s < t."""
        return self.pot[e].reshape(2, 2) - self.m_fwd[e][None, :] - self.m_bwd[e][:, None]

    def energy_of(self, x: np.ndarray) -> float:
        """Energy of an assignment under the reparameterized potentials.

        Messages cancel between unary and pairwise terms, so this reduces to
        the stored tables plus cluster blocks plus the tracked constant; it
        must always equal the original model energy.
        """
        arr = np.asarray(x, dtype=np.int64)
        e = self.unary[np.arange(self.n), arr].sum()
        if self.edge_s.size:
            idx = 2 * arr[self.edge_s] + arr[self.edge_t]
            e += self.pot[np.arange(self.edge_s.size), idx].sum()
        for cid, (i, j, k) in enumerate(self.cluster_vertices):
            e += self.cluster_tables[cid, arr[i], arr[j], arr[k]]
        return float(e + self.constant)

    # -- sweep machinery ------------------------------------------------------

    def _vertex_aggregate(self, s: int):
        """Current min-marginal sum at s and per-cluster min-marginals."""
        d = self.reparam_unary(s)
        mus = None
        if self._has_cluster[s]:
            mus = []
            for pos in range(3):
                ids = self._clusters_at[s][pos]
                if ids.size:
                    mu = self.cluster_tables[ids].min(axis=_OTHER_AXES[pos])
                    d = d + mu.sum(axis=0)
                    mus.append((pos, ids, mu))
        return d, mus

    def _exchange_clusters(self, s: int, nu: np.ndarray, mus) -> None:
        """Averaging step for cluster blocks: set every block's marginal at s to nu."""
        if not mus:
            return
        for pos, ids, mu in mus:
            delta = nu[None, :] - mu
            shape = [len(ids), 1, 1, 1]
            shape[pos + 1] = 2
            self.cluster_tables[ids] += delta.reshape(shape)
            self.unary[s] -= delta.sum(axis=0)

    def forward_pass(self) -> np.ndarray:
        """Forward sweep; returns a conditionally decoded assignment.

        The conditional decode fixes vertices in sweep order: vertex s takes
        the label minimizing its aggregated potential plus the actual
        pairwise cost against already-fixed earlier neighbors (their
        incoming messages replaced by the realized edge potentials). On
        models with near-tied min-marginals this resolves the degeneracy
        far better than thresholding.
        """
        labels = np.zeros(self.n, dtype=np.int8)
        for s in range(self.n):
            if self.degree[s] == 0:
                labels[s] = 1 if self.unary[s, 1] < self.unary[s, 0] else 0
                continue
            d, mus = self._vertex_aggregate(s)
            in_ids = self.in_order[self.in_ptr[s]: self.in_ptr[s + 1]]
            cond = d.copy()
            if in_ids.size:
                cond -= self.m_fwd[in_ids].sum(axis=0)
                fixed = labels[self.edge_s[in_ids]].astype(np.int64)
                rows = self.pot[in_ids]
                cond[0] += rows[np.arange(in_ids.size), 2 * fixed].sum()
                cond[1] += rows[np.arange(in_ids.size), 2 * fixed + 1].sum()
            labels[s] = 1 if cond[1] < cond[0] else 0
            nu = self.gamma[s] * d
            self._exchange_clusters(s, nu, mus)
            o0, o1 = self.out_ptr[s], self.out_ptr[s + 1]
            if o1 > o0:
                a = nu[None, :] - self.m_bwd[o0:o1]
                cand = a[:, :, None] + self.pot[o0:o1].reshape(-1, 2, 2)
                new = cand.min(axis=1)
                new -= new.min(axis=1, keepdims=True)
                self.m_fwd[o0:o1] = new
        return labels

    def backward_pass(self):
        """Backward sweep; returns (lower bound, decoded labels, min-marginals)."""
        lb = self.constant
        labels = np.zeros(self.n, dtype=np.int8)
        marginals = np.zeros((self.n, 2))
        for s in range(self.n - 1, -1, -1):
            if self.degree[s] == 0:
                marginals[s] = self.unary[s]
                labels[s] = 1 if self.unary[s, 1] < self.unary[s, 0] else 0
                lb += self.unary[s].min()
                continue
            d, mus = self._vertex_aggregate(s)
            marginals[s] = d
            labels[s] = 1 if d[1] < d[0] else 0
            nu = self.gamma[s] * d
            self._exchange_clusters(s, nu, mus)
            in_ids = self.in_order[self.in_ptr[s]: self.in_ptr[s + 1]]
            if in_ids.size:
                a = nu[None, :] - self.m_fwd[in_ids]
                cand = self.pot[in_ids].reshape(-1, 2, 2) + a[:, None, :]
                new = cand.min(axis=2)
                delta = new.min(axis=1)
                new -= delta[:, None]
                self.m_bwd[in_ids] = new
                lb += delta.sum()
            if self.start_count[s]:
                lb += self.start_count[s] * self.gamma[s] * d.min()
        if self.cluster_tables.size:
            lb += self.cluster_tables.reshape(-1, 8).min(axis=1).sum()
        return float(lb), labels, marginals


def pass_message(state: MessageState, s: int, t: int) -> MessageState:
    """Single min-sum message along edge (s, t), folded into the potentials.

    m(x_t) = min over x_s of (phi_bar_s(x_s) + phi_bar_st(x_s, x_t)); the
    target unary gains m and the edge table loses it, so the energy of every
    assignment is unchanged. Returns the mutated state.
    """
    e = state.find_edge(s, t)
    phi_s = state.reparam_unary(s)
    table = state.reparam_edge(e)
    if s > t:
        table = table.T
    m = (phi_s[:, None] + table).min(axis=0)
    if s < t:
        state.m_fwd[e] += m
    else:
        state.m_bwd[e] += m
    return state


def _solve_loop(
    state: MessageState,
    cfg: SolverConfig,
    deadline: float,
    trace: list[float],
    best: list,
) -> tuple[bool, int]:
    """Run sweeps until convergence, sweep budget, or deadline.

    ``best`` is a mutable [energy, labels, marginals] triple shared across
    tightening rounds. Returns (converged, sweeps run).
    """
    converged = False
    sweeps = 0
    prev = trace[-1] if trace else None
    for _ in range(cfg.max_sweeps):
        cond_labels = state.forward_pass()
        lb, labels, marginals = state.backward_pass()
        sweeps += 1
        trace.append(lb)
        for candidate in (labels, cond_labels):
            energy = mrf_energy(state.model, candidate)
            if energy < best[0]:
                best[0] = energy
                best[1] = candidate
        best[2] = marginals
        if prev is not None and lb - prev < cfg.tolerance:
            converged = True
            break
        prev = lb
        if time.monotonic() > deadline:
            break
    return converged, sweeps


def run(model: MrfModel, cfg: SolverConfig | None = None) -> SolveReport:
    """Solve a pairwise model; see module docstring for the algorithm."""
    cfg = cfg or SolverConfig()
    t0 = time.monotonic()
    state = MessageState(model)
    trace: list[float] = []
    best = [np.inf, np.zeros(model.n_vertices, dtype=np.int8), np.zeros((model.n_vertices, 2))]
    converged, sweeps = _solve_loop(state, cfg, t0 + cfg.cutoff_seconds, trace, best)
    return SolveReport(
        best_assignment=Layout(assignment=best[1]),
        best_energy=float(best[0]),
        lower_bound_trace=trace,
        sweeps=sweeps,
        wall_time=time.monotonic() - t0,
        converged=converged,
        min_marginals=best[2],
    )

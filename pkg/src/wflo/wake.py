"""Jensen wake deficits, multi-wake combination, and the interaction matrix."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from wflo.farm_domain import FarmGrid, TurbineSpec
from wflo.wind_resource import WindRose, WindState

SEED_ROTOR = "rotor"
SEED_MOMENTUM = "momentum"


@dataclass(frozen=True)
class WakeParams:
    """Wake model parameters.

    ``induction`` may be left None, in which case it is derived per wind
    state from the turbine's thrust coefficient at the free-stream speed.
    ``seed`` picks the radius at which the linearly expanding wake starts:
    "rotor" uses the rotor radius directly; "momentum" uses the
    momentum-conserving initial wake radius R*sqrt((1-a)/(1-2a)), which is
    what the classic discrete benchmark family assumes.
    """

    decay: float = 0.1
    induction: float | None = None
    seed: str = SEED_ROTOR

    def __post_init__(self) -> None:
        if not self.decay > 0:
            raise ValueError("wake decay constant must be positive")
        if self.induction is not None and not 0.0 < self.induction < 0.5:
            raise ValueError(f"axial induction must lie in (0, 0.5), got {self.induction}")
        if self.seed not in (SEED_ROTOR, SEED_MOMENTUM):
            raise ValueError(f"unknown wake seed policy {self.seed!r}")


def axial_induction(c_t: float) -> float:
    """Axial induction factor from thrust: a = (1 - sqrt(1 - C_T)) / 2.

    Inverts C_T = 4a(1-a) on a in (0, 0.5).
    """
    if not 0.0 < c_t < 1.0:
        raise ValueError(f"thrust coefficient must lie in (0, 1), got {c_t}")
    return (1.0 - math.sqrt(1.0 - c_t)) / 2.0


def momentum_radius(rotor_radius: float, induction: float) -> float:
    """Initial wake radius just behind the rotor under momentum conservation."""
    return rotor_radius * math.sqrt((1.0 - induction) / (1.0 - 2.0 * induction))


def wake_length_scale(rotor_radius: float, induction: float, params: WakeParams) -> float:
    """Radius seeding the linear wake expansion for the configured policy."""
    if params.seed == SEED_MOMENTUM:
        return momentum_radius(rotor_radius, induction)
    return rotor_radius


def _flow_vector(direction_deg: float) -> tuple[float, float]:
    """Unit vector of air movement for wind blowing FROM direction_deg.

    Opposite directions return exactly opposite vectors, so wake-cone
    boundary ties resolve identically for i->j under theta and j->i under
    theta + 180; symmetric roses then give symmetric interaction matrices
    to machine precision.
    """
    phi = math.fmod(direction_deg, 360.0)
    if phi < 0.0:
        phi += 360.0
    if phi >= 180.0:
        theta = math.radians(phi - 180.0)
        return (math.sin(theta), math.cos(theta))
    theta = math.radians(phi)
    # From-direction theta means flow toward theta + 180.
    return (-math.sin(theta), -math.cos(theta))


def downwind_crosswind(
    upstream: tuple[float, float], downstream: tuple[float, float], direction_deg: float
) -> tuple[float, float]:
    """Separation of downstream relative to upstream in wind-aligned coordinates."""
    fx, fy = _flow_vector(direction_deg)
    dx = downstream[0] - upstream[0]
    dy = downstream[1] - upstream[1]
    d = dx * fx + dy * fy
    r = abs(-dx * fy + dy * fx)
    return d, r


def single_wake_deficit(
    upstream: tuple[float, float],
    downstream: tuple[float, float],
    direction_deg: float,
    params: WakeParams,
    rotor_radius: float,
) -> float:
    """Fractional speed deficit at ``downstream`` caused by a turbine at ``upstream``.

    Zero when the downstream point is not strictly downwind or falls outside
    the linearly expanding wake cone of radius R + alpha*d.
    """
    if upstream == downstream:
        raise ValueError("upstream and downstream positions must be distinct")
    if params.induction is None:
        raise ValueError("WakeParams.induction must be set for direct deficit evaluation")
    d, r = downwind_crosswind(upstream, downstream, direction_deg)
    if d <= 0.0:
        return 0.0
    if r > rotor_radius + params.decay * d:
        return 0.0
    return 2.0 * params.induction / (1.0 + params.decay * d / rotor_radius) ** 2


def combined_speed(
    active_cells: Iterable[int],
    target: int,
    state: WindState,
    grid: FarmGrid,
    params: WakeParams,
    rotor_radius: float,
) -> float:
    """Effective speed at ``target``: u0 * (1 - sqrt(sum of squared deficits)).

    Deficits are taken over active cells other than the target; the result
    is clamped at zero for dense layouts where the quadratic combination
    overshoots.
    """
    tx, ty = float(grid.xs[target]), float(grid.ys[target])
    total = 0.0
    for cell in active_cells:
        if cell == target:
            continue
        deficit = single_wake_deficit(
            (float(grid.xs[cell]), float(grid.ys[cell])), (tx, ty), state.direction, params, rotor_radius
        )
        total += deficit * deficit
    return max(0.0, state.speed * (1.0 - math.sqrt(total)))


def deficit_matrix(
    xs: np.ndarray,
    ys: np.ndarray,
    direction_deg: float,
    induction: float,
    decay: float,
    seed_radius: float,
) -> np.ndarray:
    """Dense matrix D[i, j] = deficit at point j caused by a turbine at point i."""
    fx, fy = _flow_vector(direction_deg)
    dx = xs[None, :] - xs[:, None]
    dy = ys[None, :] - ys[:, None]
    d = dx * fx + dy * fy
    r = np.abs(-dx * fy + dy * fx)
    inside = (d > 0.0) & (r <= seed_radius + decay * d)
    denom = (1.0 + decay * np.where(d > 0.0, d, 0.0) / seed_radius) ** 2
    out = np.where(inside, 2.0 * induction / denom, 0.0)
    np.fill_diagonal(out, 0.0)
    return out


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """Probability-weighted squared-deficit weights between all cell pairs, in m/s."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("interaction matrix must be square")
        if np.any(np.diag(entries) != 0.0):
            raise ValueError("interaction matrix diagonal must be zero")
        if np.any(entries < 0.0):
            raise ValueError("interaction matrix entries must be nonnegative")
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])


def resolve_induction(spec: TurbineSpec, params: WakeParams, speed: float) -> float:
    """Induction for a wind state: explicit override, else derived from thrust at u0.

    Evaluating thrust at the free-stream speed (not the waked speed) is a
    deliberate linearization that keeps the interaction matrix independent
    of the layout being optimized.
    """
    if params.induction is not None:
        return params.induction
    return axial_induction(spec.thrust_at(speed))


def build_interaction_matrix(
    grid: FarmGrid, rose: WindRose, spec: TurbineSpec, params: WakeParams
) -> InteractionMatrix:
    """w_ij = sum over states of probability * u0 * deficit(i -> j)^2.

    The accumulation runs in the rose's state order so repeated builds are
    bit-identical.
    """
    n = grid.n
    w = np.zeros((n, n), dtype=float)
    xs, ys = grid.xs, grid.ys
    for state in rose.states:
        a = resolve_induction(spec, params, state.speed)
        seed = wake_length_scale(spec.rotor_radius, a, params)
        deficits = deficit_matrix(xs, ys, state.direction, a, params.decay, seed)
        w += state.probability * state.speed * deficits ** 2
    np.fill_diagonal(w, 0.0)
    return InteractionMatrix(entries=w)


def save_matrix(matrix: InteractionMatrix, path: str | Path) -> None:
    """Row-major CSV dump: first line is the cell count, then one row per line."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"{matrix.n}\n")
        writer = csv.writer(fh)
        for row in matrix.entries:
            writer.writerow([repr(v) for v in row])


def load_matrix(path: str | Path) -> InteractionMatrix:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        first = fh.readline()
        try:
            n = int(first.strip())
        except ValueError as exc:
            raise ValueError(f"{path}: expected a cell count on the first line") from exc
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    entries = np.asarray(rows, dtype=float)
    if entries.shape != (n, n):
        raise ValueError(f"{path}: expected a {n}x{n} matrix, got {entries.shape}")
    return InteractionMatrix(entries=entries)

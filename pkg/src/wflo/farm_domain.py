"""Discretized farm domain: candidate cells, turbine spec, separation constraints."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np


@dataclass(frozen=True)
class ThrustCurve:
    """Speed-indexed thrust coefficient table, linearly interpolated."""

    speeds: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        speeds = np.asarray(self.speeds, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if speeds.ndim != 1 or speeds.shape != values.shape or speeds.size == 0:
            raise ValueError("thrust curve needs matching 1-D speed and value arrays")
        if np.any(np.diff(speeds) <= 0):
            raise ValueError("thrust curve speeds must be strictly increasing")
        if np.any((values <= 0) | (values >= 1)):
            raise ValueError("thrust coefficients must lie strictly in (0, 1)")
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "values", values)

    def at(self, speed: float) -> float:
        # Clamp outside the tabulated range; the optimizer only ever queries
        # free-stream speeds, which sit inside any sane table.
        return float(np.interp(speed, self.speeds, self.values))

    @classmethod
    def from_csv(cls, path: str | Path) -> "ThrustCurve":
        speeds, values = _load_speed_table(path)
        return cls(speeds=speeds, values=values)


def _load_speed_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column ``speed_ms,value`` CSV."""
    path = Path(path)
    speeds: list[float] = []
    values: list[float] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header is None or header[0].strip() != "speed_ms":
            raise ValueError(f"{path}: expected CSV header speed_ms,value")
        for row in reader:
            if not row:
                continue
            speeds.append(float(row[0]))
            values.append(float(row[1]))
    if not speeds:
        raise ValueError(f"{path}: empty curve file")
    return np.asarray(speeds), np.asarray(values)


@dataclass(frozen=True)
class TurbineSpec:
    """Turbine geometry and performance description.

    ``thrust`` is either a constant thrust coefficient or a ThrustCurve;
    ``power_model`` is the string ``"cubic"`` or a PowerCurve (see
    wflo.evaluation). Hub height is carried for reporting only; the planar
    wake model never uses it.
    """

    rotor_radius: float
    hub_height: float = 0.0
    thrust: Union[float, ThrustCurve] = 0.88
    power_model: object = "cubic"
    rated_power: float | None = None

    def __post_init__(self) -> None:
        if not self.rotor_radius > 0:
            raise ValueError("rotor radius must be positive")
        if isinstance(self.thrust, float) and not 0.0 < self.thrust < 1.0:
            raise ValueError(f"constant thrust coefficient must lie in (0, 1), got {self.thrust}")

    def thrust_at(self, speed: float) -> float:
        if isinstance(self.thrust, ThrustCurve):
            return self.thrust.at(speed)
        return float(self.thrust)


@dataclass(frozen=True, eq=False)
class FarmGrid:
    """Candidate turbine cells with centroid coordinates in meters.

    x runs east, y runs north; indices are row-major from the south-west
    corner so results are reproducible across runs.
    """

    xs: np.ndarray
    ys: np.ndarray
    cell_side: float
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
            raise ValueError("grid needs matching non-empty 1-D centroid arrays")
        pts = set(zip(xs.tolist(), ys.tolist()))
        if len(pts) != xs.size:
            raise ValueError("grid centroids must be pairwise distinct")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return int(self.xs.size)

    @property
    def cells(self) -> list[tuple[int, float, float]]:
        return [(i, float(self.xs[i]), float(self.ys[i])) for i in range(self.n)]

    def points(self) -> np.ndarray:
        return np.column_stack([self.xs, self.ys])


def make_square_grid(area_side: float, cells_per_side: int) -> FarmGrid:
    """Square farm of ``cells_per_side**2`` square cells covering ``area_side**2``."""
    if area_side <= 0:
        raise ValueError("area_side must be positive")
    if cells_per_side < 1:
        raise ValueError("cells_per_side must be at least 1")
    side = area_side / cells_per_side
    coords = (np.arange(cells_per_side) + 0.5) * side
    yy, xx = np.meshgrid(coords, coords, indexing="ij")  # row-major: y (south->north) outer
    return FarmGrid(
        xs=xx.ravel(),
        ys=yy.ravel(),
        cell_side=side,
        bounds=(0.0, 0.0, float(area_side), float(area_side)),
    )


@dataclass(frozen=True)
class ProximityPairs:
    """Unordered cell pairs closer than the minimum separation, stored once as i < j."""

    pairs: tuple[tuple[int, int], ...]
    min_separation: float

    def __post_init__(self) -> None:
        canon = []
        seen = set()
        for i, j in self.pairs:
            if i == j:
                raise ValueError("a cell cannot be excluded against itself")
            a, b = (int(i), int(j)) if i < j else (int(j), int(i))
            if (a, b) in seen:
                raise ValueError(f"pair ({a}, {b}) listed twice")
            seen.add((a, b))
            canon.append((a, b))
        object.__setattr__(self, "pairs", tuple(canon))

    def __len__(self) -> int:
        return len(self.pairs)

    def as_array(self) -> np.ndarray:
        if not self.pairs:
            return np.empty((0, 2), dtype=np.int64)
        return np.asarray(self.pairs, dtype=np.int64)

    def adjacency(self, n: int) -> np.ndarray:
        """Symmetric boolean conflict matrix over n cells."""
        mat = np.zeros((n, n), dtype=bool)
        for i, j in self.pairs:
            mat[i, j] = True
            mat[j, i] = True
        return mat


def proximity_pairs(grid: FarmGrid, spec: TurbineSpec) -> ProximityPairs:
    """All centroid pairs strictly closer than five rotor radii.

    Pairs exactly at the boundary distance are allowed: the separation
    requirement reads "more than" five radii, so ties resolve permissively.
    """
    min_sep = 5.0 * spec.rotor_radius
    pts = grid.points()
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    iu, ju = np.triu_indices(grid.n, k=1)
    close = dist[iu, ju] < min_sep
    pairs = tuple((int(a), int(b)) for a, b in zip(iu[close], ju[close]))
    return ProximityPairs(pairs=pairs, min_separation=min_sep)

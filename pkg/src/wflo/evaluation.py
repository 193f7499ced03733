"""True (non-surrogate) power and energy evaluation of layouts.

The optimizer minimizes a quadratic surrogate of wake losses; reported
power always comes from re-evaluating layouts under the full nonlinear
wake combination, state by state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wflo.farm_domain import FarmGrid, TurbineSpec, _load_speed_table
from wflo.qip import Layout
from wflo.wake import WakeParams, deficit_matrix, resolve_induction, wake_length_scale
from wflo.wind_resource import WindRose

CUBIC_COEFF = 0.3  # kW per (m/s)^3, the idealized benchmark power law


def power_cubic(u: float) -> float:
    """Idealized turbine power, proportional to the cube of the local speed."""
    if u < 0:
        raise ValueError(f"wind speed must be nonnegative, got {u}")
    return CUBIC_COEFF * u ** 3


@dataclass(frozen=True, eq=False)
class PowerCurve:
    """Tabulated power curve in kW, zero outside the cut-in/cut-out window."""

    speeds: np.ndarray
    powers: np.ndarray
    cut_in: float
    cut_out: float

    def __post_init__(self) -> None:
        speeds = np.asarray(self.speeds, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        if speeds.size == 0 or speeds.shape != powers.shape:
            raise ValueError("power curve needs matching non-empty speed and power arrays")
        if np.any(np.diff(speeds) <= 0):
            raise ValueError("power curve speeds must be strictly increasing")
        if np.any(powers < 0):
            raise ValueError("power must be nonnegative")
        rated_at = int(np.argmax(powers))
        if np.any(np.diff(powers[: rated_at + 1]) < 0):
            raise ValueError("power must be nondecreasing up to rated speed")
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "powers", powers)

    @property
    def rated_power(self) -> float:
        return float(self.powers.max())

    def power_at(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        p = np.interp(u, self.speeds, self.powers)
        return np.where((u < self.cut_in) | (u > self.cut_out), 0.0, p)

    @classmethod
    def from_csv(cls, path: str | Path, cut_in: float | None = None, cut_out: float | None = None) -> "PowerCurve":
        speeds, powers = _load_speed_table(path)
        return cls(
            speeds=speeds,
            powers=powers,
            cut_in=float(speeds[0]) if cut_in is None else cut_in,
            cut_out=float(speeds[-1]) if cut_out is None else cut_out,
        )


def power_from_curve(curve: PowerCurve, u: float) -> float:
    """Linear interpolation within [cut-in, cut-out], zero outside."""
    if u < 0:
        raise ValueError(f"wind speed must be nonnegative, got {u}")
    return float(curve.power_at(u))


@dataclass
class EvaluationReport:
    """Per-state and aggregate production of a fixed layout."""

    per_state_power: np.ndarray      # kW per wind state
    expected_power: float            # kW, probability weighted
    aep: float                       # kWh over the observation period
    per_turbine_speeds: np.ndarray   # (n_states, n_turbines) effective m/s
    turbine_cells: np.ndarray        # cell index per turbine column

    def to_dict(self) -> dict:
        return {
            "expected_power_kw": self.expected_power,
            "aep_kwh": self.aep,
            "per_state_power_kw": [float(p) for p in self.per_state_power],
            "turbine_cells": [int(c) for c in self.turbine_cells],
            "per_turbine_speeds": [[float(u) for u in row] for row in self.per_turbine_speeds],
        }


def _turbine_power(spec: TurbineSpec, speeds: np.ndarray) -> np.ndarray:
    if isinstance(spec.power_model, PowerCurve):
        return spec.power_model.power_at(speeds)
    if spec.power_model == "cubic":
        return CUBIC_COEFF * speeds ** 3
    raise ValueError(f"unknown power model {spec.power_model!r}")


def evaluate_layout(
    layout: Layout, grid: FarmGrid, rose: WindRose, spec: TurbineSpec, params: WakeParams
) -> EvaluationReport:
    """Expected power and AEP under the full nonlinear wake combination.

    For every wind state each active turbine's effective speed combines the
    squared deficits of all upstream active turbines; state powers are then
    weighted by state probabilities and scaled by the observation period.
    """
    active = layout.indices
    n_states = rose.n_states
    per_state = np.zeros(n_states)
    speeds = np.zeros((n_states, active.size))
    if active.size:
        xs = grid.xs[active]
        ys = grid.ys[active]
        for si, state in enumerate(rose.states):
            a = resolve_induction(spec, params, state.speed)
            seed = wake_length_scale(spec.rotor_radius, a, params)
            deficits = deficit_matrix(xs, ys, state.direction, a, params.decay, seed)
            combined = np.sqrt((deficits ** 2).sum(axis=0))
            u = np.maximum(0.0, state.speed * (1.0 - combined))
            speeds[si] = u
            per_state[si] = _turbine_power(spec, u).sum()
    probs = np.asarray([s.probability for s in rose.states])
    expected = float(per_state @ probs)
    return EvaluationReport(
        per_state_power=per_state,
        expected_power=expected,
        aep=expected * rose.observation_hours,
        per_turbine_speeds=speeds,
        turbine_cells=active,
    )


def compare(a: dict, b: dict) -> dict:
    """Percent power difference and time ratio between two run records.

    Positive percent means ``a`` produced more power; a ratio above one
    means ``a`` was faster. Records need ``expected_power_kw`` and
    ``wall_time_s`` keys.
    """
    pb = b["expected_power_kw"]
    ta = a["wall_time_s"]
    if pb == 0:
        raise ZeroDivisionError("reference record has zero expected power")
    if ta == 0:
        raise ZeroDivisionError("record a has zero wall time")
    return {
        "percent_power_diff": 100.0 * (a["expected_power_kw"] - pb) / pb,
        "time_ratio": b["wall_time_s"] / ta,
    }

"""Wind roses: discrete joint distributions over wind speed and direction.

Directions use the meteorological convention throughout the package: the
direction the wind blows FROM, in degrees clockwise from north. Wakes
extend downwind, i.e. toward direction + 180 degrees.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

HOURS_PER_YEAR = 8760.0

# Roses whose probabilities sum to 1 within this tolerance are renormalized;
# anything further off is rejected as a data error.
RENORM_TOLERANCE = 1e-6
SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class WindState:
    """One (speed, direction) bin and its fraction of the observation period."""

    speed: float        # free-stream speed, m/s
    direction: float    # blowing FROM, degrees clockwise from north, in [0, 360)
    probability: float  # dimensionless fraction of the observation period

    def __post_init__(self) -> None:
        if not self.speed > 0:
            raise ValueError(f"wind speed must be positive, got {self.speed}")
        if not 0.0 <= self.direction < 360.0:
            raise ValueError(f"direction must lie in [0, 360), got {self.direction}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability must lie in [0, 1], got {self.probability}")


@dataclass(frozen=True)
class WindRose:
    """Ordered collection of wind states covering the whole observation period."""

    states: tuple[WindState, ...]
    observation_hours: float = HOURS_PER_YEAR

    def __post_init__(self) -> None:
        if not self.states:
            raise ValueError("a wind rose needs at least one state")
        total = math.fsum(s.probability for s in self.states)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"state probabilities sum to {total!r}, expected 1")
        seen: set[tuple[float, float]] = set()
        for s in self.states:
            key = (s.speed, s.direction)
            if key in seen:
                raise ValueError(f"duplicate wind state (speed={s.speed}, direction={s.direction})")
            seen.add(key)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def speeds(self) -> list[float]:
        return [s.speed for s in self.states]

    def directions(self) -> list[float]:
        return [s.direction for s in self.states]


def _normalized(states: list[WindState], observation_hours: float) -> WindRose:
    total = math.fsum(s.probability for s in states)
    if abs(total - 1.0) > RENORM_TOLERANCE:
        raise ValueError(f"rose probabilities sum to {total:.9f}; refusing to renormalize beyond {RENORM_TOLERANCE}")
    scaled = tuple(WindState(s.speed, s.direction, s.probability / total) for s in states)
    return WindRose(states=scaled, observation_hours=observation_hours)


def load_rose(path: str | Path, observation_hours: float = HOURS_PER_YEAR) -> WindRose:
    """Load a rose from CSV with header ``speed_ms,direction_deg,probability``."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"speed_ms", "direction_deg", "probability"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected CSV header speed_ms,direction_deg,probability")
        states = []
        for lineno, row in enumerate(reader, start=2):
            try:
                states.append(
                    WindState(
                        speed=float(row["speed_ms"]),
                        direction=float(row["direction_deg"]),
                        probability=float(row["probability"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad rose row: {exc}") from exc
    if not states:
        raise ValueError(f"{path}: rose file has no states")
    return _normalized(states, observation_hours)


def save_rose(rose: WindRose, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["speed_ms", "direction_deg", "probability"])
        for s in rose.states:
            writer.writerow([repr(s.speed), repr(s.direction), repr(s.probability)])


def builtin_wr1(speed: float = 12.0) -> WindRose:
    """Unidirectional benchmark rose: one state blowing from north.

    The benchmark lineage this reproduces runs at 12 m/s; the speed is
    configurable for sensitivity studies.
    """
    return WindRose(states=(WindState(speed=speed, direction=0.0, probability=1.0),))


def uniform_rose(speed: float, n_directions: int) -> WindRose:
    """Single-speed rose with ``n_directions`` equally likely directions."""
    if n_directions < 1:
        raise ValueError("n_directions must be at least 1")
    p = 1.0 / n_directions
    step = 360.0 / n_directions
    states = tuple(WindState(speed=speed, direction=i * step, probability=p) for i in range(n_directions))
    return WindRose(states=states)


def wr36_path() -> Path:
    """Path of the bundled multidirectional benchmark rose (3 speeds x 36 directions)."""
    return Path(str(resources.files("wflo").joinpath("data/wr36.csv")))


def builtin_wr36() -> WindRose:
    """Bundled 108-state benchmark rose.

    The per-direction probabilities are a reconstruction of the classic
    multidirectional benchmark distribution (three speeds, dominant
    high-speed sector); they are shipped as data, not asserted as ground
    truth. See data/README_data.md.
    """
    return load_rose(wr36_path())

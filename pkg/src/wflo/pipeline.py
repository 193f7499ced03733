"""End-to-end runs: configuration, solver orchestration, and reporting.

A run is fully determined by one INI config file (plus CLI overrides);
the resolved configuration is echoed into every report for
reproducibility.
"""

from __future__ import annotations

import configparser
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from wflo.baselines import brute_force, greedy_construct, local_search
from wflo.decode import repair_swap, round_top_k, save_layout
from wflo.evaluation import EvaluationReport, PowerCurve, evaluate_layout
from wflo.farm_domain import FarmGrid, ProximityPairs, ThrustCurve, TurbineSpec, make_square_grid, proximity_pairs
from wflo.qip import Layout, QipModel, add_exclusions, build_penalized_mrf, default_beta, mrf_energy
from wflo.tightening import TightenConfig, tighten_and_resolve
from wflo.trws import SolveReport, SolverConfig
from wflo.wake import InteractionMatrix, WakeParams, build_interaction_matrix, save_matrix
from wflo.wind_resource import WindRose, builtin_wr1, builtin_wr36, load_rose, uniform_rose

SOLVERS = ("mp", "greedy", "local", "brute")

WR36_CAVEAT = (
    "wr36 per-direction probabilities are a benchmark-lineage reconstruction "
    "shipped as data, not measured ground truth; comparison tolerances are widened accordingly"
)


@dataclass(frozen=True)
class RunConfig:
    # wind resource
    rose: str = "wr1"              # wr1 | wr36 | uniform | path to a rose CSV
    speed: float = 12.0            # free-stream speed for wr1/uniform roses
    directions: int = 36           # direction count for uniform roses
    # farm domain
    area_side: float = 2000.0
    cells_per_side: int = 10
    # turbine
    rotor_radius: float = 20.0
    hub_height: float = 60.0
    thrust: str = "0.88"           # constant C_T or path to a thrust CSV
    power: str = "cubic"           # "cubic" or path to a power-curve CSV
    rated_power: float | None = None
    # wake model
    decay: float = 0.1
    wake_seed: str = "rotor"       # rotor | momentum
    # problem & solver
    k: int = 1
    solver: str = "mp"
    max_sweeps: int = 2000
    tolerance: float = 1e-9
    cutoff_seconds: float = 3600.0
    seed: int = 0
    restarts: int = 20
    beta: float | None = None      # None: derived from W and k
    budget_slack: int | None = None
    max_escalations: int = 3
    exclusion_penalty_factor: float = 1e3
    max_clusters: int = 5000
    clusters_per_round: int = 20
    # outputs
    out_dir: str = "out"

    def to_dict(self) -> dict:
        return asdict(self)


_SECTION_FIELDS = {
    "rose": ("rose", "speed", "directions"),
    "grid": ("area_side", "cells_per_side"),
    "turbine": ("rotor_radius", "hub_height", "thrust", "power", "rated_power"),
    "wake": ("decay", "wake_seed"),
    "solver": (
        "k", "solver", "max_sweeps", "tolerance", "cutoff_seconds", "seed", "restarts",
        "beta", "budget_slack", "max_escalations", "exclusion_penalty_factor",
        "max_clusters", "clusters_per_round",
    ),
    "output": ("out_dir",),
}

_FIELD_TYPES = {f.name: f.type for f in RunConfig.__dataclass_fields__.values()}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind in ("float | None", "int | None"):
        if raw.lower() in ("", "none", "auto"):
            return None
        return float(raw) if kind.startswith("float") else int(raw)
    return raw


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Read a sectioned key/value config file and apply CLI overrides."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    values: dict = {}
    for section, names in _SECTION_FIELDS.items():
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in names:
                raise ValueError(f"{path}: unknown key {key!r} in section [{section}]")
            values[key] = _coerce(key, raw)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def config_from_mapping(mapping: dict) -> RunConfig:
    values = {k: _coerce(k, str(v)) for k, v in mapping.items() if k in _FIELD_TYPES}
    unknown = set(mapping) - set(values)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**values)


def load_rose_from_config(cfg: RunConfig) -> WindRose:
    if cfg.rose == "wr1":
        return builtin_wr1(speed=cfg.speed)
    if cfg.rose == "wr36":
        return builtin_wr36()
    if cfg.rose == "uniform":
        return uniform_rose(cfg.speed, cfg.directions)
    return load_rose(cfg.rose)


def load_turbine_from_config(cfg: RunConfig) -> TurbineSpec:
    try:
        thrust: float | ThrustCurve = float(cfg.thrust)
    except ValueError:
        thrust = ThrustCurve.from_csv(cfg.thrust)
    power: object = cfg.power if cfg.power == "cubic" else PowerCurve.from_csv(cfg.power)
    return TurbineSpec(
        rotor_radius=cfg.rotor_radius,
        hub_height=cfg.hub_height,
        thrust=thrust,
        power_model=power,
        rated_power=cfg.rated_power,
    )


@dataclass
class Problem:
    rose: WindRose
    grid: FarmGrid
    spec: TurbineSpec
    params: WakeParams
    w: InteractionMatrix
    exclusions: ProximityPairs
    matrix_seconds: float


def build_problem(cfg: RunConfig) -> Problem:
    rose = load_rose_from_config(cfg)
    grid = make_square_grid(cfg.area_side, cfg.cells_per_side)
    spec = load_turbine_from_config(cfg)
    params = WakeParams(decay=cfg.decay, seed=cfg.wake_seed)
    t0 = time.monotonic()
    w = build_interaction_matrix(grid, rose, spec, params)
    exclusions = proximity_pairs(grid, spec)
    return Problem(
        rose=rose, grid=grid, spec=spec, params=params, w=w, exclusions=exclusions,
        matrix_seconds=time.monotonic() - t0,
    )


def _solve_mp(qip: QipModel, cfg: RunConfig) -> tuple[Layout, dict]:
    """Message-passing pipeline: penalty model, tightened solve, rounding, repair.

    If the raw decoded assignment misses the turbine budget by more than the
    configured slack, the penalty is doubled and the solve repeats.
    """
    slack = cfg.budget_slack if cfg.budget_slack is not None else max(1, qip.k // 10)
    beta = cfg.beta if cfg.beta is not None else default_beta(qip)
    solver_cfg = SolverConfig(
        max_sweeps=cfg.max_sweeps, tolerance=cfg.tolerance, cutoff_seconds=cfg.cutoff_seconds, seed=cfg.seed
    )
    tighten_cfg = TightenConfig(max_clusters=cfg.max_clusters, clusters_per_round=cfg.clusters_per_round)
    report: SolveReport
    betas = []
    for _ in range(cfg.max_escalations + 1):
        betas.append(beta)
        model = build_penalized_mrf(qip, beta)
        if qip.exclusions.pairs:
            model = add_exclusions(model, qip.exclusions, cfg.exclusion_penalty_factor * beta)
        tightened, report = tighten_and_resolve(model, tighten_cfg, solver_cfg)
        if abs(report.best_assignment.k - qip.k) <= slack:
            break
        beta *= 2.0
    layout = round_top_k(report, qip.k, qip.exclusions)
    layout = repair_swap(layout, qip)
    info = report.to_dict()
    info.update(
        solver="mp",
        beta_schedule=betas,
        clusters_added=len(tightened.clusters),
        tightening_rounds=tightened.polytope_generation,
        raw_decoded_turbines=int(report.best_assignment.k),
    )
    return layout, info


def run_solver(qip: QipModel, cfg: RunConfig) -> tuple[Layout, dict]:
    t0 = time.monotonic()
    if cfg.solver == "mp":
        layout, info = _solve_mp(qip, cfg)
    elif cfg.solver == "local":
        layout, value = local_search(qip, restarts=cfg.restarts, seed=cfg.seed)
        info = {"solver": "local", "restarts": cfg.restarts, "surrogate_energy": value}
    elif cfg.solver == "greedy":
        layout = greedy_construct(qip)
        info = {"solver": "greedy"}
    elif cfg.solver == "brute":
        layout, value = brute_force(qip)
        info = {"solver": "brute", "surrogate_energy": value}
    else:
        raise ValueError(f"unknown solver {cfg.solver!r}; expected one of {SOLVERS}")
    info["solve_seconds"] = time.monotonic() - t0
    info["surrogate_energy"] = qip.surrogate_energy(layout)
    return layout, info


@dataclass
class CaseResult:
    config: RunConfig
    layout: Layout
    solver_info: dict
    evaluation: EvaluationReport
    matrix_seconds: float

    @property
    def wall_time(self) -> float:
        return self.matrix_seconds + self.solver_info["solve_seconds"]

    def record(self) -> dict:
        rec = {
            "config": self.config.to_dict(),
            "solver": self.solver_info,
            "evaluation": self.evaluation.to_dict(),
            "expected_power_kw": self.evaluation.expected_power,
            "aep_kwh": self.evaluation.aep,
            "matrix_seconds": self.matrix_seconds,
            "wall_time_s": self.wall_time,
        }
        if self.config.rose == "wr36":
            rec["caveat"] = WR36_CAVEAT
        return rec


def solve_case(cfg: RunConfig, problem: Problem | None = None) -> CaseResult:
    problem = problem or build_problem(cfg)
    if cfg.k == 0:
        layout = Layout(assignment=np.zeros(problem.grid.n, dtype=np.int8))
        info = {"solver": cfg.solver, "solve_seconds": 0.0, "surrogate_energy": 0.0}
    else:
        qip = QipModel(w=problem.w, k=cfg.k, exclusions=problem.exclusions)
        layout, info = run_solver(qip, cfg)
    evaluation = evaluate_layout(layout, problem.grid, problem.rose, problem.spec, problem.params)
    return CaseResult(
        config=cfg, layout=layout, solver_info=info, evaluation=evaluation,
        matrix_seconds=problem.matrix_seconds,
    )


def write_case_outputs(result: CaseResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_square_grid(result.config.area_side, result.config.cells_per_side)
    layout_path = out / "layout.csv"
    save_layout(result.layout, grid, layout_path)
    report_path = out / "report.json"
    report_path.write_text(json.dumps(result.record(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return [layout_path, report_path]


def run_suite(suite_path: str | Path, out_dir: str | Path, overrides: dict | None = None) -> dict:
    """Run every case in a suite file; failures are recorded and do not abort.

    The suite is an INI file: a [defaults] section holding shared config
    keys and one [case:<name>] section per run, each optionally carrying a
    ``ref_kw`` reference power for percent-difference columns.
    """
    suite_path = Path(suite_path)
    if not suite_path.exists():
        raise FileNotFoundError(f"suite file not found: {suite_path}")
    parser = configparser.ConfigParser()
    parser.read(suite_path)
    defaults = dict(parser.items("defaults")) if parser.has_section("defaults") else {}
    rows = []
    caveats = set()
    for section in parser.sections():
        if not section.startswith("case:"):
            continue
        name = section.split(":", 1)[1]
        case_raw = dict(defaults)
        case_raw.update(parser.items(section))
        ref_kw = case_raw.pop("ref_kw", None)
        row = {"case": name}
        try:
            cfg = config_from_mapping(case_raw)
            if overrides:
                cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
            result = solve_case(cfg)
            row.update(
                status="ok",
                solver=cfg.solver,
                k=cfg.k,
                rose=cfg.rose,
                expected_power_kw=result.evaluation.expected_power,
                aep_kwh=result.evaluation.aep,
                surrogate_energy=result.solver_info.get("surrogate_energy"),
                lower_bound=result.solver_info.get("lower_bound"),
                wall_time_s=result.wall_time,
            )
            if ref_kw is not None:
                ref = float(ref_kw)
                row["ref_kw"] = ref
                row["pct_vs_ref"] = 100.0 * (result.evaluation.expected_power - ref) / ref
            if cfg.rose == "wr36":
                caveats.add(WR36_CAVEAT)
        except Exception as exc:  # noqa: BLE001 - per-row failure reporting is the contract
            row.update(status="error", error=f"{type(exc).__name__}: {exc}")
        rows.append(row)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = {"suite": str(suite_path), "rows": rows, "caveats": sorted(caveats)}
    (out / "benchmark.json").write_text(json.dumps(results, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    columns = [
        "case", "status", "solver", "k", "rose", "expected_power_kw", "aep_kwh",
        "surrogate_energy", "lower_bound", "wall_time_s", "ref_kw", "pct_vs_ref", "error",
    ]
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join("" if row.get(c) is None else str(row.get(c)) for c in columns))
    (out / "benchmark.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return results

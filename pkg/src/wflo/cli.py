"""Command-line interface: matrix, solve, benchmark, render."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from wflo import __version__


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="run config file (INI sections)")
    parser.add_argument("--out", default=None, help="output directory (default: config out_dir)")
    parser.add_argument("--solver", default=None, choices=("mp", "greedy", "local", "brute"))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--cutoff-seconds", type=float, default=None, dest="cutoff_seconds")
    parser.add_argument("--max-clusters", type=int, default=None, dest="max_clusters")


def _overrides(args: argparse.Namespace) -> dict:
    keys = ("solver", "seed", "cutoff_seconds", "max_clusters")
    ov = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "out", None):
        ov["out_dir"] = args.out
    return ov


def cmd_matrix(args: argparse.Namespace) -> int:
    from wflo.pipeline import build_problem, load_config
    from wflo.wake import save_matrix

    cfg = load_config(args.config, _overrides(args))
    problem = build_problem(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "matrix.csv"
    save_matrix(problem.w, path)
    print(f"wrote {path} ({problem.w.n}x{problem.w.n}, build {problem.matrix_seconds:.2f}s)")
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    from wflo.pipeline import load_config, solve_case, write_case_outputs

    cfg = load_config(args.config, _overrides(args))
    result = solve_case(cfg)
    paths = write_case_outputs(result, cfg.out_dir)
    rec = result.record()
    print(
        f"solver={cfg.solver} k={cfg.k} expected_power={rec['expected_power_kw']:.1f} kW "
        f"aep={rec['aep_kwh']:.0f} kWh wall={rec['wall_time_s']:.2f}s"
    )
    if "caveat" in rec:
        print(f"note: {rec['caveat']}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    from wflo.pipeline import run_suite

    out_dir = args.out or "out"
    results = run_suite(args.suite, out_dir, _overrides(args))
    for row in results["rows"]:
        if row["status"] == "ok":
            pct = f" ({row['pct_vs_ref']:+.2f}% vs {row['ref_kw']:.0f} kW)" if "pct_vs_ref" in row else ""
            print(f"{row['case']}: {row['expected_power_kw']:.1f} kW in {row['wall_time_s']:.1f}s{pct}")
        else:
            print(f"{row['case']}: FAILED - {row['error']}")
    for caveat in results["caveats"]:
        print(f"note: {caveat}")
    print(f"wrote {Path(out_dir) / 'benchmark.csv'}")
    print(f"wrote {Path(out_dir) / 'benchmark.json'}")
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    from wflo.decode import load_layout
    from wflo.pipeline import load_config
    from wflo.farm_domain import make_square_grid
    from wflo.pipeline import load_rose_from_config
    from wflo.render import render_layout_svg, write_svg

    cfg = load_config(args.config, _overrides(args))
    grid = make_square_grid(cfg.area_side, cfg.cells_per_side)
    layout = load_layout(args.layout, grid.n)
    direction = None
    if args.wind_arrow:
        rose = load_rose_from_config(cfg)
        direction = max(rose.states, key=lambda s: s.probability).direction
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = write_svg(render_layout_svg(grid, layout, direction), out / "layout.svg")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wflo", description="Wind farm layout optimization toolkit")
    parser.add_argument("--version", action="version", version=f"wflo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_matrix = sub.add_parser("matrix", help="build and dump the wake interaction matrix")
    _add_common(p_matrix)
    p_matrix.set_defaults(func=cmd_matrix)

    p_solve = sub.add_parser("solve", help="run a solver end-to-end and write layout + reports")
    _add_common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("benchmark", help="run a suite of cases and tabulate results")
    p_bench.add_argument("suite", help="suite file ([defaults] plus [case:<name>] sections)")
    p_bench.add_argument("--out", default=None, help="output directory")
    p_bench.add_argument("--solver", default=None, choices=("mp", "greedy", "local", "brute"))
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.add_argument("--cutoff-seconds", type=float, default=None, dest="cutoff_seconds")
    p_bench.add_argument("--max-clusters", type=int, default=None, dest="max_clusters")
    p_bench.set_defaults(func=cmd_benchmark)

    p_render = sub.add_parser("render", help="draw a layout CSV over its grid as SVG")
    _add_common(p_render)
    p_render.add_argument("layout", help="layout CSV produced by solve")
    p_render.add_argument("--wind-arrow", action="store_true", help="draw the dominant wind direction")
    p_render.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary: report and exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

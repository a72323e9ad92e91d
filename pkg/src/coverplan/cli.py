"""Command-line front end.

Exit codes: 0 success, 1 invalid input (bad arguments, unreadable or invalid
files), 2 planner failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .bench import BenchConfig, generate_map, render_svg, run_bench, summarize, write_bench
from .geometry import EnvironmentMap, load_map, save_map
from .imaging import ImageFormatError, extract_boundary, load_image, threshold_segment
from .metrics import score
from .mst import MstConfig, plan_mst
from .ocp import OcpConfig, plan_ocp_trajectory
from .trajectory import load_trajectory, save_trajectory
from .tsp import TspConfig, plan_tsp

log = logging.getLogger("coverplan")

EXIT_OK, EXIT_INVALID, EXIT_PLANNER = 0, 1, 2


class InvalidInput(Exception):
    pass


class PlannerFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _load(fn, path):
    try:
        return fn(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InvalidInput(f"{path}: {exc}") from exc


def _write_json(data, path):
    text = json.dumps(data, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _horizon(value: str):
    if value == "auto":
        return None
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("T must be a number or 'auto'") from None


def cmd_plan(args) -> int:
    env = _load(load_map, args.map)
    tsp_cfg = TspConfig(restarts=args.restarts, rng_seed=args.seed)
    t0 = time.perf_counter()
    try:
        if args.algo == "tsp":
            traj = plan_tsp(env, tsp_cfg)
        elif args.algo in ("mst-square", "mst-hex"):
            tiling = "square" if args.algo == "mst-square" else "hexagonal"
            traj = plan_mst(env, MstConfig(epsilon=args.epsilon, tiling=tiling))
        else:
            cfg = OcpConfig(
                N=args.N,
                T=args.T,
                vmax=args.vmax,
                gamma=args.gamma,
                steepness=args.a,
                lambda_len=args.lam,
                M=args.M,
                max_iters=args.max_iters,
            )
            traj = plan_ocp_trajectory(env, plan_tsp(env, tsp_cfg), cfg)
    except Exception as exc:
        raise PlannerFailure(f"{args.algo}: {exc}") from exc
    elapsed = time.perf_counter() - t0
    traj = replace(traj, meta=dict(traj.meta, plan_time_s=elapsed))
    save_trajectory(traj, args.out)
    log.info("%s: %d waypoints in %.3f s -> %s", args.algo, len(traj), elapsed, args.out)
    return EXIT_OK


def cmd_score(args) -> int:
    env = _load(load_map, args.map)
    traj = _load(load_trajectory, args.traj)
    try:
        rep = score(traj, env, cell=args.cell, plan_time=float(traj.meta.get("plan_time_s", 0.0)))
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    _write_json(rep.to_dict(), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    data = _load(lambda p: json.loads(Path(p).read_text()), args.config) if args.config else {}
    for key, value in (("samples", args.samples), ("rng_seed", args.seed)):
        if value is not None:
            data[key] = value
    if args.algos:
        data["algorithms"] = args.algos.split(",")
    try:
        cfg = BenchConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"bench config: {exc}") from exc
    rows = run_bench(cfg)
    rows_path, summary_path = write_bench(rows, args.out_dir)
    for entry in summarize(rows):
        log.info(
            "%-10s uar %.3f%%  alop %.3f  time %.3f s",
            entry["algorithm"],
            entry["uar_percent_mean"],
            entry["alop_mean"],
            entry["plan_time_s_mean"],
        )
    log.info("wrote %s and %s", rows_path, summary_path)
    return EXIT_PLANNER if any(not r.ok for r in rows) else EXIT_OK


def cmd_extract(args) -> int:
    try:
        img = load_image(args.image)
        grid = threshold_segment(img, args.threshold, scale=args.scale, dark=not args.light)
        boundary = extract_boundary(grid, args.simplify)
        env = EnvironmentMap(boundary, (), args.radius)
    except (OSError, ImageFormatError, ValueError) as exc:
        raise InvalidInput(str(exc)) from exc
    save_map(env, args.out)
    log.info("boundary with %d vertices, area %.1f m^2 -> %s", len(boundary.vertices), boundary.area, args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    env = _load(load_map, args.map)
    traj = _load(load_trajectory, args.traj) if args.traj else None
    try:
        render_svg(env, traj, args.out, swath=args.swath)
    except OSError as exc:
        raise InvalidInput(f"{args.out}: {exc}") from exc
    return EXIT_OK


def cmd_genmap(args) -> int:
    data = _load(lambda p: json.loads(Path(p).read_text()), args.config) if args.config else {}
    data.pop("samples", None)
    try:
        cfg = BenchConfig.from_dict(data)
        env = generate_map(args.seed, cfg)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(str(exc)) from exc
    save_map(env, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coverplan", description="Coverage path planning for 2D regions with obstacles.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("plan", help="plan a coverage trajectory")
    sp.add_argument("--algo", required=True, choices=["tsp", "mst-square", "mst-hex", "ocp"])
    sp.add_argument("--map", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--epsilon", type=float, default=0.01, help="anisotropy factor for mst-*")
    sp.add_argument("--restarts", type=int, default=8, help="nearest-neighbor starts for tsp/ocp")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--N", type=int, default=400, help="ocp time steps")
    sp.add_argument("--T", type=_horizon, default=None, help="ocp horizon in seconds or 'auto'")
    sp.add_argument("--vmax", type=float, default=1.0)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--a", type=float, default=20.0, help="detection steepness")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.01, help="control-effort weight")
    sp.add_argument("--M", type=int, default=400, help="target samples")
    sp.add_argument("--max-iters", type=int, default=2000)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("score", help="UAR/ALOP report for a trajectory")
    sp.add_argument("--traj", required=True)
    sp.add_argument("--map", required=True)
    sp.add_argument("--out", default="-")
    sp.add_argument("--cell", type=float, default=None, help="raster cell in meters (default r/10)")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("bench", help="run all planners over random maps")
    sp.add_argument("--config", help="JSON file with BenchConfig fields")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--algos", help="comma-separated subset of tsp,mst-hex,mst-square,ocp")
    sp.add_argument("--out-dir", default="bench_out")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("extract", help="outer boundary map from a grayscale PGM image")
    sp.add_argument("--image", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--threshold", type=int, default=128)
    sp.add_argument("--scale", type=float, default=1.0, help="meters per pixel")
    sp.add_argument("--simplify", type=float, default=1.0, help="simplification tolerance in meters")
    sp.add_argument("--radius", type=float, default=1.0, help="detection radius for the map")
    sp.add_argument("--light", action="store_true", help="region is the bright pixels")
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("render", help="SVG of a map and optional trajectory")
    sp.add_argument("--map", required=True)
    sp.add_argument("--traj")
    sp.add_argument("--out", required=True)
    sp.add_argument("--swath", action="store_true", help="draw the detection band")
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("genmap", help="write one random benchmark map")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--config", help="JSON file with BenchConfig fields")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_genmap)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except InvalidInput as exc:
        log.error("error: %s", exc)
        return EXIT_INVALID
    except PlannerFailure as exc:
        log.error("planner failed: %s", exc)
        return EXIT_PLANNER


if __name__ == "__main__":
    sys.exit(main())

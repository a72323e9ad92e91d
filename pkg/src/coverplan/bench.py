"""Random benchmark maps, batch planning/scoring, CSV aggregation and SVG output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
from xml.sax.saxutils import escape

import numpy as np

from .geometry import EnvironmentMap, GeometryError, Polygon, rectangle
from .metrics import score
from .mst import MstConfig, plan_mst
from .ocp import OcpConfig, plan_ocp_trajectory
from .trajectory import Trajectory
from .tsp import TspConfig, plan_tsp

log = logging.getLogger(__name__)

ALGORITHMS = ("tsp", "mst-hex", "mst-square", "ocp")
ROW_FIELDS = ("algorithm", "sample_id", "uar_percent", "alop", "path_length", "plan_time_s", "status", "settings")


@dataclass(frozen=True)
class BenchConfig:
    samples: int = 10
    rng_seed: int = 0
    domain_size: float = 40.0
    obstacle_count_range: Tuple[int, int] = (2, 4)
    obstacle_scale: float = 4.0
    detection_radius: float = 1.0
    algorithms: Tuple[str, ...] = ALGORITHMS
    metric_cell: Optional[float] = None  # default r/10
    tsp: TspConfig = field(default_factory=TspConfig)
    mst_square: MstConfig = field(default_factory=lambda: MstConfig(tiling="square"))
    mst_hex: MstConfig = field(default_factory=lambda: MstConfig(tiling="hexagonal"))
    ocp: OcpConfig = field(default_factory=lambda: OcpConfig(N=200, M=200))

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        lo, hi = self.obstacle_count_range
        if not 0 <= lo <= hi:
            raise ValueError("obstacle_count_range must satisfy 0 <= min <= max")
        if not (self.domain_size > 0 and self.obstacle_scale > 0 and self.detection_radius > 0):
            raise ValueError("sizes must be positive")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        data = dict(data)
        nested = {"tsp": TspConfig, "mst_square": MstConfig, "mst_hex": MstConfig, "ocp": OcpConfig}
        for key, typ in nested.items():
            if key in data and isinstance(data[key], dict):
                data[key] = typ(**data[key])
        if "obstacle_count_range" in data:
            data["obstacle_count_range"] = tuple(data["obstacle_count_range"])
        if "algorithms" in data:
            data["algorithms"] = tuple(data["algorithms"])
        return cls(**data)


@dataclass(frozen=True)
class BenchRow:
    algorithm: str
    sample_id: int
    uar_percent: float
    alop: float
    path_length: float
    plan_time_s: float
    status: str = "ok"
    settings: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _convex_polygon(rng: np.random.Generator, center, radius: float) -> np.ndarray:
    """Convex polygon inscribed in a circle: 5-8 sorted random angles."""
    k = int(rng.integers(5, 9))
    while True:
        ang = np.sort(rng.uniform(0.0, 2 * math.pi, k))
        # a gap over pi would leave the center outside and shrink the shape badly
        gaps = np.diff(np.concatenate([ang, ang[:1] + 2 * math.pi]))
        if gaps.max() < 0.6 * math.pi:
            break
    return np.column_stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)])


def generate_map(seed: int, cfg: BenchConfig, max_tries: int = 1000) -> EnvironmentMap:
    """Square domain with k random convex obstacles, kept clear of the border and of each other."""
    rng = np.random.default_rng(seed)
    L = cfg.domain_size
    r = cfg.detection_radius
    lo, hi = cfg.obstacle_count_range
    k = int(rng.integers(lo, hi + 1))
    placed: List[Tuple[np.ndarray, float]] = []
    obstacles = []
    tries = 0
    while len(obstacles) < k:
        tries += 1
        if tries > max_tries:
            raise GeometryError(f"could not place {k} obstacles after {max_tries} tries")
        radius = cfg.obstacle_scale * rng.uniform(0.6, 1.0)
        center = rng.uniform(0.0, L, 2)
        if np.any(center - radius < r) or np.any(center + radius > L - r):
            continue
        if any(np.hypot(*(center - c)) < radius + rc + 2 * r for c, rc in placed):
            continue
        placed.append((center, radius))
        obstacles.append(Polygon(_convex_polygon(rng, center, radius)))
    return EnvironmentMap(rectangle(0.0, 0.0, L, L), tuple(obstacles), r)


def plan(algorithm: str, env: EnvironmentMap, cfg: BenchConfig) -> Trajectory:
    if algorithm == "tsp":
        return plan_tsp(env, cfg.tsp)
    if algorithm == "mst-square":
        return plan_mst(env, cfg.mst_square)
    if algorithm == "mst-hex":
        return plan_mst(env, cfg.mst_hex)
    if algorithm == "ocp":
        warm = plan_tsp(env, cfg.tsp)
        return plan_ocp_trajectory(env, warm, cfg.ocp)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _settings(algorithm: str, cfg: BenchConfig) -> str:
    key = {"tsp": "tsp", "mst-square": "mst_square", "mst-hex": "mst_hex", "ocp": "ocp"}[algorithm]
    sub = asdict(getattr(cfg, key))
    if algorithm == "ocp":
        sub["tsp"] = asdict(cfg.tsp)
    return json.dumps(sub, sort_keys=True, separators=(",", ":"))


def run_sample(sample_id: int, cfg: BenchConfig, keep: Optional[Dict] = None) -> List[BenchRow]:
    """Plan and score every algorithm on one generated map.

    ``plan_time_s`` covers the planner call only; OCP time includes its TSP
    warm start. A planner exception yields a row with status ``failed``.
    """
    env = generate_map(cfg.rng_seed + sample_id, cfg)
    cell = cfg.metric_cell if cfg.metric_cell is not None else env.detection_radius / 10.0
    rows = []
    for algo in cfg.algorithms:
        settings = _settings(algo, cfg)
        t0 = time.perf_counter()
        try:
            traj = plan(algo, env, cfg)
        except Exception as exc:  # noqa: BLE001 - a failed planner must not stop the batch
            log.warning("sample %d: %s failed: %s", sample_id, algo, exc)
            rows.append(BenchRow(algo, sample_id, math.nan, math.nan, math.nan, time.perf_counter() - t0, "failed", settings))
            continue
        elapsed = time.perf_counter() - t0
        rep = score(traj, env, cell=cell, plan_time=elapsed)
        rows.append(BenchRow(algo, sample_id, rep.uar_percent, rep.alop, rep.path_length, elapsed, "ok", settings))
        if keep is not None:
            keep[(sample_id, algo)] = traj
    return rows


def bench_threads() -> int:
    try:
        return max(1, int(os.environ.get("COVERPLAN_THREADS", "1")))
    except ValueError:
        return 1


def run_bench(cfg: BenchConfig, keep: Optional[Dict] = None, threads: Optional[int] = None) -> List[BenchRow]:
    """Rows in (sample, algorithm) order.

    Samples run in worker processes when ``threads`` > 1 (default from
    COVERPLAN_THREADS); timings are then shared-CPU and only the non-time
    columns are comparable. ``keep`` collects trajectories in sequential mode.
    """
    threads = bench_threads() if threads is None else threads
    if threads <= 1 or keep is not None:
        rows = []
        for s in range(cfg.samples):
            rows.extend(run_sample(s, cfg, keep))
        return rows
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run_sample, range(cfg.samples), [cfg] * cfg.samples))
    return [row for part in parts for row in part]


def summarize(rows: Sequence[BenchRow]) -> List[dict]:
    """Per-algorithm mean and population std over successful rows, in first-seen order."""
    out = []
    for algo in dict.fromkeys(r.algorithm for r in rows):
        ok = [r for r in rows if r.algorithm == algo and r.ok]
        entry = {"algorithm": algo, "n": len(ok), "failed": sum(1 for r in rows if r.algorithm == algo and not r.ok)}
        for name in ("uar_percent", "alop", "path_length", "plan_time_s"):
            vals = np.array([getattr(r, name) for r in ok], dtype=float)
            entry[name + "_mean"] = float(vals.mean()) if len(vals) else math.nan
            entry[name + "_std"] = float(vals.std()) if len(vals) else math.nan
        out.append(entry)
    return out


def rows_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([getattr(r, f) if not isinstance(getattr(r, f), float) else repr(getattr(r, f)) for f in ROW_FIELDS])
    return buf.getvalue()


def summary_csv(summary: Sequence[dict]) -> str:
    if not summary:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(summary[0]), lineterminator="\n")
    w.writeheader()
    for entry in summary:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in entry.items()})
    return buf.getvalue()


def write_bench(rows: Sequence[BenchRow], out_dir: Union[str, Path]) -> Tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows_path, summary_path = out / "bench.csv", out / "summary.csv"
    rows_path.write_text(rows_csv(rows))
    summary_path.write_text(summary_csv(summarize(rows)))
    return rows_path, summary_path


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".") if v != 0 else "0"


def _coords(points: np.ndarray, y_flip: float) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y_flip - y)}" for x, y in points)


def svg_document(env: EnvironmentMap, traj: Optional[Trajectory] = None, swath: bool = False, scale: float = 10.0) -> str:
    """Self-contained SVG with y pointing up (the viewBox flips the image axis)."""
    x0, y0, x1, y1 = env.bbox
    pad = env.detection_radius
    w, h = x1 - x0 + 2 * pad, y1 - y0 + 2 * pad
    flip = y1 + y0  # y -> flip - y mirrors inside the bbox
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w * scale)}" height="{_fmt(h * scale)}" '
        f'viewBox="{_fmt(x0 - pad)} {_fmt(y0 - pad)} {_fmt(w)} {_fmt(h)}">',
        f'<polygon class="boundary" points="{_coords(env.boundary.vertices, flip)}" fill="none" stroke="black" '
        f'stroke-width="{_fmt(0.1 * pad)}"/>',
    ]
    for obs in env.obstacles:
        parts.append(f'<polygon class="obstacle" points="{_coords(obs.vertices, flip)}" fill="gray" stroke="none"/>')
    if traj is not None:
        pts = traj.points
        # a closed loop that does not repeat its first point is drawn as a polygon
        tag = "polygon" if traj.closed and len(pts) > 1 and not np.array_equal(pts[0], pts[-1]) else "polyline"
        coords = _coords(pts, flip)
        if swath:
            parts.append(
                f'<{tag} class="swath" points="{coords}" fill="none" stroke="steelblue" stroke-opacity="0.25" '
                f'stroke-width="{_fmt(2 * env.detection_radius)}" stroke-linejoin="round" stroke-linecap="round"/>'
            )
        label = escape(str(traj.meta.get("algorithm", "trajectory")))
        parts.append(
            f'<{tag} class="path" data-label="{label}" points="{coords}" fill="none" stroke="crimson" '
            f'stroke-width="{_fmt(0.08 * pad)}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_svg(env: EnvironmentMap, traj: Optional[Trajectory], out: Union[str, Path], swath: bool = False) -> Path:
    path = Path(out)
    path.write_text(svg_document(env, traj, swath))
    return path

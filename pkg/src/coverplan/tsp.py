"""
Heuristic TSP coverage: a mesh of nodes spaced r, an obstacle-penalized cost
matrix, randomized nearest-neighbor construction and 2-opt improvement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import EnvironmentMap, GeometryError, segments_intersect_polygon
from .trajectory import Trajectory

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TspConfig:
    restarts: int = 8
    penalty: Optional[float] = None  # default 1e6 * domain diagonal
    rng_seed: int = 0
    strategy: str = "first"  # 2-opt move selection: "first" or "best"

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.strategy not in ("first", "best"):
            raise ValueError("strategy must be 'first' or 'best'")

    def penalty_for(self, env: EnvironmentMap) -> float:
        return self.penalty if self.penalty is not None else 1e6 * env.diagonal


@dataclass(frozen=True)
class TspInstance:
    nodes: np.ndarray  # (n, 2)
    cost: np.ndarray  # (n, n), symmetric, zero diagonal
    penalty: float = math.inf

    @property
    def n(self) -> int:
        return len(self.nodes)

    @classmethod
    def euclidean(cls, nodes) -> "TspInstance":
        nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
        return cls(nodes, euclidean_matrix(nodes))


@dataclass(frozen=True)
class Tour:
    order: np.ndarray
    length: float  # Euclidean cycle length
    cost: float  # cycle cost under the instance matrix (penalties included)

    @property
    def penalized(self) -> bool:
        return self.cost > self.length * (1 + 1e-9) + 1e-9


def euclidean_matrix(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None, :] - nodes[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def mesh_nodes(env: EnvironmentMap, spacing: float) -> np.ndarray:
    """Square mesh anchored at the bbox minimum plus half a spacing, free cells only."""
    x0, y0, x1, y1 = env.bbox
    nx = int(math.floor((x1 - x0) / spacing + 1e-9))
    ny = int(math.floor((y1 - y0) / spacing + 1e-9))
    gx, gy = np.meshgrid(x0 + spacing * (0.5 + np.arange(nx)), y0 + spacing * (0.5 + np.arange(ny)))
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    return pts[env.in_free_space(pts)] if len(pts) else pts


def build_instance(env: EnvironmentMap, cfg: TspConfig = TspConfig()) -> TspInstance:
    """Nodes every r (half the 2r spanning-tree spacing); obstacle-crossing pairs cost ``penalty``."""
    nodes = mesh_nodes(env, env.detection_radius)
    if len(nodes) < 2:
        raise GeometryError("TSP needs at least 2 free mesh nodes")
    cost = euclidean_matrix(nodes)
    penalty = cfg.penalty_for(env)
    if not penalty > env.diagonal * len(nodes):
        # any tour through real edges must stay cheaper than a single penalized one
        raise ValueError(f"penalty {penalty:g} must exceed diameter x node count ({env.diagonal * len(nodes):g})")
    if env.obstacles:
        iu, ju = np.triu_indices(len(nodes), k=1)
        a, b = nodes[iu], nodes[ju]
        blocked = np.zeros(len(iu), dtype=bool)
        for obs in env.obstacles:
            todo = np.flatnonzero(~blocked)
            blocked[todo] = segments_intersect_polygon(a[todo], b[todo], obs)
        cost[iu[blocked], ju[blocked]] = penalty
        cost[ju[blocked], iu[blocked]] = penalty
    return TspInstance(nodes, cost, penalty)


def tour_cost(matrix: np.ndarray, order: Sequence[int]) -> float:
    order = np.asarray(order)
    if len(order) < 2:
        return 0.0
    return float(matrix[order, np.roll(order, -1)].sum())


def make_tour(inst: TspInstance, order) -> Tour:
    order = np.asarray(order, dtype=np.int64)
    pts = inst.nodes[order]
    if len(order) > 1:
        length = float(np.hypot(*(np.roll(pts, -1, axis=0) - pts).T).sum())
    else:
        length = 0.0
    return Tour(order, length, tour_cost(inst.cost, order))


def nearest_neighbor_tour(inst: TspInstance, start: int) -> Tour:
    """Greedy tour: always move to the cheapest unvisited node (lowest index on ties)."""
    n = inst.n
    if not 0 <= start < n:
        raise IndexError(f"start {start} out of range for {n} nodes")
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    cur = start
    visited[cur] = True
    order[0] = cur
    for k in range(1, n):
        row = np.where(visited, np.inf, inst.cost[cur])
        cur = int(np.argmin(row))  # argmin returns the first minimum
        visited[cur] = True
        order[k] = cur
    return make_tour(inst, order)


def two_opt(inst: TspInstance, tour: Tour, strategy: str = "first") -> Tour:
    """2-opt local search until no edge exchange lowers the cycle cost.

    A move removes edges (t[i], t[i+1]) and (t[j], t[j+1]) and reconnects
    t[i]-t[j], t[i+1]-t[j+1] by reversing t[i+1..j]. For each i the candidate
    j are scored at once; ``first`` applies the lowest improving j and keeps
    scanning from the same i, ``best`` applies the most improving j. Sweeps
    repeat until one finds nothing.
    """
    C = inst.cost
    t = np.array(tour.order, dtype=np.int64)
    n = len(t)
    if n < 4:
        return make_tour(inst, t)
    tol = 1e-12 * max(1.0, float(np.max(C)))
    improved = True
    while improved:
        improved = False
        i = 0
        while i < n - 2:
            a, b = t[i], t[i + 1]
            # j ranges over i+2 .. n-1 (for i == 0, skip j == n-1: shares node t[0])
            j_end = n if i > 0 else n - 1
            js = np.arange(i + 2, j_end)
            if js.size:
                c = t[js]
                d = t[(js + 1) % n]
                delta = C[a, c] + C[b, d] - C[a, b] - C[c, d]
                if strategy == "first":
                    hits = np.flatnonzero(delta < -tol)
                    k = hits[0] if hits.size else -1
                else:
                    k = int(np.argmin(delta))
                    k = k if delta[k] < -tol else -1
                if k >= 0:
                    j = int(js[k])
                    t[i + 1 : j + 1] = t[i + 1 : j + 1][::-1]
                    improved = True
                    continue  # rescan the same i against the new neighbors
            i += 1
    return make_tour(inst, t)


def restart_starts(n: int, cfg: TspConfig) -> list:
    """One independent child stream per restart, each drawing its start node."""
    children = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.restarts)
    return [int(np.random.default_rng(s).integers(n)) for s in children]


def solve(inst: TspInstance, cfg: TspConfig = TspConfig()) -> Tour:
    """Best 2-opt-improved nearest-neighbor tour over the random restarts."""
    best = None
    for start in restart_starts(inst.n, cfg):
        tour = two_opt(inst, nearest_neighbor_tour(inst, start), cfg.strategy)
        # lowest restart index wins ties
        if best is None or tour.cost < best.cost:
            best = tour
    return best


def plan_tsp(env: EnvironmentMap, cfg: TspConfig = TspConfig()) -> Trajectory:
    inst = build_instance(env, cfg)
    tour = solve(inst, cfg)
    if tour.penalized:
        log.warning("TSP tour uses obstacle-crossing edges; no feasible cycle was found")
    pts = inst.nodes[tour.order]
    meta = {"algorithm": "tsp", "nodes": int(inst.n), "feasible": not tour.penalized}
    return Trajectory(np.vstack([pts, pts[:1]]), closed=True, meta=meta)

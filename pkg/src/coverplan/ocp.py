"""
Search trajectory optimization under an exponential (Koopman) detection model.

A single-integrator searcher p_{k+1} = p_k + dt*u_k minimizes

    J = sum_i w_i exp(-dt * sum_k eta(p_k, w_i))        expected miss probability
      + sum_k sum_j exp(d^2 - |p_k - O_j|^2)           soft obstacle avoidance
      + lam * sum_k |u_k| dt                           control effort

subject to |u_k| <= vmax, state box bounds and fixed endpoints. The solver is
projected gradient descent with backtracking, warm-started from a TSP tour.
Sums over k run over the N steps k = 0..N-1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy.special import ndtr

from .geometry import EnvironmentMap, GeometryError, points_in_polygon
from .trajectory import Trajectory

log = logging.getLogger(__name__)

_EXP_CLIP = 700.0


@dataclass(frozen=True)
class DetectionParams:
    gamma: float = 1.0
    steepness: float = 20.0
    radius: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 0 and self.steepness > 0 and self.radius > 0):
            raise ValueError("detection parameters must be positive")


@dataclass(frozen=True)
class PoissonScanParams:
    intensity: float
    threshold: float
    decay: float
    spread: float

    def __post_init__(self):
        if not (self.intensity > 0 and self.spread > 0):
            raise ValueError("intensity and spread must be positive")


def detection_rate(ps, pt, params: DetectionParams) -> np.ndarray:
    """Smooth indicator of the disk of radius r: gamma*(pi/2 - atan(a*(d^2/r^2 - 1)))/pi."""
    d2 = np.sum((np.asarray(ps, dtype=float) - np.asarray(pt, dtype=float)) ** 2, axis=-1)
    z = params.steepness * (d2 / params.radius**2 - 1.0)
    return params.gamma * (0.5 * math.pi - np.arctan(z)) / math.pi


def poisson_scan_rate(ps, pt, params: PoissonScanParams) -> np.ndarray:
    d2 = np.sum((np.asarray(ps, dtype=float) - np.asarray(pt, dtype=float)) ** 2, axis=-1)
    return params.intensity * ndtr((params.threshold - params.decay * d2) / params.spread)


def miss_probability(rates, dt: float) -> np.ndarray:
    """exp(-dt * sum of rates) over the last axis."""
    return np.exp(-dt * np.sum(rates, axis=-1))


def miss_probability_recurrence(rates, dt: float) -> np.ndarray:
    """Per-step product prod(1 - eta_k*dt); approaches the exponential form as dt -> 0."""
    return np.prod(1.0 - dt * np.asarray(rates, dtype=float), axis=-1)


@dataclass(frozen=True)
class OcpProblem:
    N: int
    T: float
    detection: DetectionParams
    vmax: float
    box_min: np.ndarray
    box_max: np.ndarray
    start: np.ndarray
    goal: np.ndarray
    omega: np.ndarray  # (M, 2) target samples
    weights: np.ndarray  # (M,) prior mass per sample, sums to 1
    obstacle_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    lambda_len: float = 0.01
    d_avoid: float = 1.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if not (self.T > 0 and self.vmax > 0):
            raise ValueError("T and vmax must be positive")
        for name in ("box_min", "box_max", "start", "goal"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(2))
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float).reshape(-1))
        object.__setattr__(self, "obstacle_points", np.asarray(self.obstacle_points, dtype=float).reshape(-1, 2))
        if len(self.weights) != len(self.omega):
            raise ValueError("one weight per omega sample")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def mu(self) -> float:
        return 1e-6 * self.vmax


@dataclass(frozen=True)
class OcpConfig:
    N: int = 400
    T: Optional[float] = None  # default: warm-start length / (0.8 vmax)
    vmax: float = 1.0
    gamma: float = 1.0
    steepness: float = 20.0
    lambda_len: float = 0.01
    M: int = 400
    d_avoid: Optional[float] = None  # default r
    tol: float = 1e-6
    max_iters: int = 2000


@dataclass(frozen=True)
class OcpSolution:
    states: np.ndarray  # (N+1, 2)
    controls: np.ndarray  # (N, 2)
    cost_history: List[float]
    final_cost: float
    iterations: int
    converged: bool

    @property
    def initial_cost(self) -> float:
        return self.cost_history[0]


def propagate(start, controls, dt: float) -> np.ndarray:
    """Explicit Euler states p_0..p_N from p_0 and u_0..u_{N-1}."""
    controls = np.asarray(controls, dtype=float)
    steps = np.vstack([np.zeros((1, 2)), np.cumsum(dt * controls, axis=0)])
    return np.asarray(start, dtype=float) + steps


def _eta_and_grad(p, omega, det: DetectionParams):
    """Rates (K, M) and d eta / d p as (K, M, 2)."""
    diff = p[:, None, :] - omega[None, :, :]
    d2 = np.einsum("kmi,kmi->km", diff, diff)
    z = det.steepness * (d2 / det.radius**2 - 1.0)
    eta = det.gamma * (0.5 * math.pi - np.arctan(z)) / math.pi
    coef = -det.gamma / math.pi * det.steepness / (1.0 + z * z) * 2.0 / det.radius**2
    return eta, coef[..., None] * diff


def cost_terms(states, controls, problem: OcpProblem) -> dict:
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float)
    dt = problem.dt
    p = states[:-1]
    eta, _ = _eta_and_grad(p, problem.omega, problem.detection)
    miss = np.exp(-dt * eta.sum(axis=0))
    detection = float(np.dot(problem.weights, miss))
    penalty = 0.0
    if len(problem.obstacle_points):
        diff = p[:, None, :] - problem.obstacle_points[None, :, :]
        expo = np.minimum(problem.d_avoid**2 - np.einsum("kji,kji->kj", diff, diff), _EXP_CLIP)
        penalty = float(np.exp(expo).sum())
    speed = np.sqrt(np.sum(controls**2, axis=1) + problem.mu**2)
    length = float(problem.lambda_len * speed.sum() * dt)
    return {"detection": detection, "penalty": penalty, "length": length}


def cost(states, controls, problem: OcpProblem) -> float:
    t = cost_terms(states, controls, problem)
    return t["detection"] + t["penalty"] + t["length"]


def cost_gradient(states, controls, problem: OcpProblem) -> np.ndarray:
    """dJ/du for all controls, by reverse accumulation through the Euler chain.

    p_k depends on u_j for every j < k with dp_k/du_j = dt*I, so
    dJ/du_j = dt * sum_{k>j} dJ/dp_k + dJ_length/du_j.
    """
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float)
    dt = problem.dt
    N = problem.N
    p = states[:-1]
    eta, deta = _eta_and_grad(p, problem.omega, problem.detection)
    miss = np.exp(-dt * eta.sum(axis=0))
    # d/dp_k of sum_i w_i exp(-dt sum_k eta_ki)
    grad_p = -dt * np.einsum("m,kmi->ki", problem.weights * miss, deta)
    if len(problem.obstacle_points):
        diff = p[:, None, :] - problem.obstacle_points[None, :, :]
        raw = problem.d_avoid**2 - np.einsum("kji,kji->kj", diff, diff)
        e = np.where(raw < _EXP_CLIP, np.exp(np.minimum(raw, _EXP_CLIP)), 0.0)
        grad_p += -2.0 * np.einsum("kj,kji->ki", e, diff)
    # p_0 is fixed; u_j reaches p_{j+1}..p_{N-1}
    full = np.zeros((N + 1, 2))
    full[:N] = grad_p
    tail = np.cumsum(full[::-1], axis=0)[::-1]  # tail[k] = sum_{k'>=k} full[k']
    grad_u = dt * tail[1:]
    speed = np.sqrt(np.sum(controls**2, axis=1) + problem.mu**2)
    grad_u += problem.lambda_len * dt * controls / speed[:, None]
    return grad_u


class _Feasible:
    """Projection onto {|u_k| <= vmax, p_N = goal, box_min <= p_k <= box_max}."""

    def __init__(self, problem: OcpProblem, rounds: int = 50):
        self.pb = problem
        self.rounds = rounds
        scale = max(1.0, float(np.max(np.abs(np.concatenate([problem.box_min, problem.box_max, problem.goal])))))
        self.speed_tol = 1e-12 * problem.vmax
        self.box_tol = 1e-12 * scale
        self.end_tol = 1e-9 * scale  # cumulative rounding of the Euler sum

    def _ball(self, u):
        n = np.linalg.norm(u, axis=1)
        scale = np.where(n > self.pb.vmax, self.pb.vmax / np.maximum(n, 1e-300), 1.0)
        return u * scale[:, None]

    def _endpoint(self, u):
        pb = self.pb
        miss = pb.goal - propagate(pb.start, u, pb.dt)[-1]
        return u + miss / (pb.N * pb.dt)

    def _box(self, u):
        pb = self.pb
        p = propagate(pb.start, u, pb.dt)
        p[1:-1] = np.clip(p[1:-1], pb.box_min, pb.box_max)
        p[-1] = pb.goal
        return np.diff(p, axis=0) / pb.dt

    def violations(self, u):
        """(speed excess, box excess, endpoint miss)."""
        pb = self.pb
        p = propagate(pb.start, u, pb.dt)
        speed = max(0.0, float(np.max(np.linalg.norm(u, axis=1))) - pb.vmax)
        box = max(float(np.max(pb.box_min - p, initial=0.0)), float(np.max(p - pb.box_max, initial=0.0)))
        return speed, box, float(np.max(np.abs(p[-1] - pb.goal)))

    def feasible(self, u) -> bool:
        speed, box, end = self.violations(u)
        return speed <= self.speed_tol and box <= self.box_tol and end <= self.end_tol

    def project(self, u, anchor):
        """Feasible point near ``u`` and the fraction of the step ``u - anchor`` it keeps.

        The three projections are alternated first. If that does not settle,
        the set being convex, every point between the feasible ``anchor`` and
        an endpoint-correct candidate that meets the ball and box bounds is
        feasible, and bisection finds the longest such fraction.
        """
        for _ in range(self.rounds):
            u = self._endpoint(self._box(self._ball(u)))
            if self.feasible(u):
                return u, 1.0
        lo, hi = 0.0, 1.0
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if self.feasible(anchor + mid * (u - anchor)):
                lo = mid
            else:
                hi = mid
        return anchor + lo * (u - anchor), lo


def plan_ocp_controls(problem: OcpProblem, controls0, tol: float = 1e-6, max_iters: int = 2000) -> OcpSolution:
    """Projected gradient with Armijo backtracking from feasible initial controls.

    Every iterate is feasible and costs no more than the previous one. The
    run stops when a full projected step changes J by less than ``tol``
    (relative), when backtracking finds no decrease, or after ``max_iters``.
    """
    pb = problem
    proj = _Feasible(pb)
    u = np.array(controls0, dtype=float).reshape(pb.N, 2)
    if not proj.feasible(u):
        raise GeometryError("warm start violates constraints (speed, box, endpoint excess %.3g, %.3g, %.3g)" % proj.violations(u))
    p = propagate(pb.start, u, pb.dt)
    J = cost(p, u, pb)
    history = [J]
    step = None
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        g = cost_gradient(p, u, pb)
        gnorm2 = float(np.sum(g * g))
        if gnorm2 == 0.0:
            converged = True
            break
        if step is None:
            step = 0.1 * pb.vmax * math.sqrt(pb.N) / math.sqrt(gnorm2)
        accepted = False
        while step > 1e-20:
            cand, frac = proj.project(u - step * g, u)
            if frac > 0.0:
                p_c = propagate(pb.start, cand, pb.dt)
                J_c = cost(p_c, cand, pb)
                # Armijo condition along the projection arc
                if J_c <= J + 1e-4 * float(np.sum(g * (cand - u))) and J_c < J:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            converged = True
            break
        change = (J - J_c) / max(abs(J), 1e-300)
        u, p, J = cand, p_c, J_c
        history.append(J)
        if frac < 1.0:
            continue  # the step was clipped by the feasible set; keep its length
        step *= 2.0
        if change < tol:
            converged = True
            break
    return OcpSolution(p, u, history, J, it, converged)


def resample_closed(points, n: int) -> np.ndarray:
    """``n + 1`` points evenly spaced by arc length along a polyline, ends included."""
    pts = np.asarray(points, dtype=float)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return np.repeat(pts[:1], n + 1, axis=0)
    keep = np.concatenate([[True], seg > 0])
    s, pts = s[keep], pts[keep]
    q = np.linspace(0.0, s[-1], n + 1)
    return np.column_stack([np.interp(q, s, pts[:, 0]), np.interp(q, s, pts[:, 1])])


def warm_start_controls(traj: Trajectory, N: int, T: Optional[float], vmax: float):
    """Resample a trajectory to N+1 states; returns (states, controls, T)."""
    pts = np.asarray(traj.points, dtype=float)
    if traj.closed and not np.array_equal(pts[0], pts[-1]):
        pts = np.vstack([pts, pts[:1]])
    length = float(np.hypot(*np.diff(pts, axis=0).T).sum()) if len(pts) > 1 else 0.0
    if T is None:
        T = length / (0.8 * vmax) if length > 0 else 1.0
    states = resample_closed(pts, N)
    controls = np.diff(states, axis=0) / (T / N)
    return states, controls, T


def omega_samples(env: EnvironmentMap, M: int):
    """About M points on a uniform grid over free space, equal weights summing to 1."""
    x0, y0, x1, y1 = env.bbox
    box_area = (x1 - x0) * (y1 - y0)
    free_frac = max(env.boundary.area - sum(o.area for o in env.obstacles), 1e-300) / box_area
    step = math.sqrt(box_area / (M / free_frac))
    for _ in range(20):
        nx = max(1, int(round((x1 - x0) / step)))
        ny = max(1, int(round((y1 - y0) / step)))
        gx, gy = np.meshgrid(x0 + (x1 - x0) * (np.arange(nx) + 0.5) / nx, y0 + (y1 - y0) * (np.arange(ny) + 0.5) / ny)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        pts = pts[env.in_free_space(pts)]
        if len(pts) >= 0.9 * M or step < 1e-9:
            break
        step *= math.sqrt(len(pts) / M) if len(pts) else 0.5
    if len(pts) == 0:
        raise GeometryError("no target samples fall in free space")
    return pts, np.full(len(pts), 1.0 / len(pts))


def obstacle_samples(obstacles, spacing: float) -> np.ndarray:
    """Points every ``spacing`` along each obstacle outline plus an interior grid."""
    out = []
    for poly in obstacles:
        v = poly.vertices
        w = np.roll(v, -1, axis=0)
        for a, b in zip(v, w):
            n = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing)))
            t = np.arange(n)[:, None] / n
            out.append(a + t * (b - a))
        bx0, by0, bx1, by1 = poly.bbox
        gx, gy = np.meshgrid(np.arange(bx0 + spacing / 2, bx1, spacing), np.arange(by0 + spacing / 2, by1, spacing))
        inner = np.column_stack([gx.ravel(), gy.ravel()])
        if len(inner):
            out.append(inner[points_in_polygon(inner, poly)])
    return np.vstack(out) if out else np.zeros((0, 2))


def build_problem(env: EnvironmentMap, warm: Trajectory, cfg: OcpConfig = OcpConfig()):
    """Problem plus feasible initial controls derived from the warm-start loop."""
    r = env.detection_radius
    states, controls, T = warm_start_controls(warm, cfg.N, cfg.T, cfg.vmax)
    omega, weights = omega_samples(env, cfg.M)
    x0, y0, x1, y1 = env.bbox
    problem = OcpProblem(
        N=cfg.N,
        T=T,
        detection=DetectionParams(cfg.gamma, cfg.steepness, r),
        vmax=cfg.vmax,
        box_min=(x0, y0),
        box_max=(x1, y1),
        start=states[0],
        goal=states[-1],
        omega=omega,
        weights=weights,
        obstacle_points=obstacle_samples(env.obstacles, r / 2),
        lambda_len=cfg.lambda_len,
        d_avoid=cfg.d_avoid if cfg.d_avoid is not None else r,
    )
    if np.linalg.norm(problem.goal - problem.start) > cfg.vmax * T * (1 + 1e-12):
        raise GeometryError("endpoints unreachable within vmax*T")
    return problem, controls


def plan_ocp(env: EnvironmentMap, warm: Trajectory, cfg: OcpConfig = OcpConfig()) -> OcpSolution:
    problem, controls = build_problem(env, warm, cfg)
    return plan_ocp_controls(problem, controls, cfg.tol, cfg.max_iters)


def solution_trajectory(sol: OcpSolution, problem_T: float, closed: bool = True) -> Trajectory:
    n = len(sol.controls)
    stamps = np.linspace(0.0, problem_T, n + 1)
    meta = {"algorithm": "ocp", "final_cost": sol.final_cost, "iterations": sol.iterations}
    return Trajectory(sol.states, closed=closed, timestamps=stamps, controls=sol.controls, meta=meta)


def plan_ocp_trajectory(env: EnvironmentMap, warm: Trajectory, cfg: OcpConfig = OcpConfig()) -> Trajectory:
    problem, controls = build_problem(env, warm, cfg)
    sol = plan_ocp_controls(problem, controls, cfg.tol, cfg.max_iters)
    traj = solution_trajectory(sol, problem.T, closed=bool(np.allclose(problem.start, problem.goal)))
    meta = dict(
        traj.meta,
        initial_cost=sol.initial_cost,
        cost_history=[float(c) for c in sol.cost_history],
        N=cfg.N,
        M=len(problem.omega),
        T=problem.T,
    )
    return replace(traj, meta=meta)

"""Trajectory value type and its JSON wire format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .geometry import GeometryError, as_points


@dataclass(frozen=True)
class Trajectory:
    """Ordered waypoints; ``closed`` means the last point links back to the first.

    Closed loops produced by the planners repeat the first waypoint at the end,
    so the closing segment has zero length for them.
    """

    points: np.ndarray
    closed: bool = False
    timestamps: Optional[np.ndarray] = None
    controls: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = as_points(self.points).copy()
        if len(pts) < 1:
            raise GeometryError("trajectory needs at least one waypoint")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=float).copy()
            if ts.shape != (len(pts),):
                raise GeometryError("timestamps must match waypoints")
            ts.setflags(write=False)
            object.__setattr__(self, "timestamps", ts)
        if self.controls is not None:
            u = np.asarray(self.controls, dtype=float).reshape(-1, 2).copy()
            u.setflags(write=False)
            object.__setattr__(self, "controls", u)

    def __len__(self):
        return len(self.points)

    def segments(self):
        """Segment endpoints (a, b), including the closing segment if closed."""
        p = self.points
        if self.closed and len(p) > 1:
            q = np.vstack([p, p[:1]])
        else:
            q = p
        return q[:-1], q[1:]

    def reversed(self) -> "Trajectory":
        ts = None if self.timestamps is None else self.timestamps[-1] - self.timestamps[::-1]
        return Trajectory(self.points[::-1], self.closed, ts, None, dict(self.meta))

    def to_dict(self) -> dict:
        out = {"points": self.points.tolist(), "closed": bool(self.closed)}
        if self.timestamps is not None:
            out["timestamps"] = self.timestamps.tolist()
        if self.controls is not None:
            out["controls"] = self.controls.tolist()
        for key, value in self.meta.items():
            if key not in out:
                out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        if "points" not in data:
            raise GeometryError("trajectory JSON missing 'points'")
        meta = {k: v for k, v in data.items() if k not in ("points", "closed", "timestamps", "controls")}
        return cls(
            np.asarray(data["points"], dtype=float),
            bool(data.get("closed", False)),
            data.get("timestamps"),
            data.get("controls"),
            meta,
        )


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    with open(path) as f:
        return Trajectory.from_dict(json.load(f))


def save_trajectory(traj: Trajectory, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(traj.to_dict()) + "\n")

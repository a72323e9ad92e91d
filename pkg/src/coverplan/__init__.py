"""Coverage path planning: spanning-tree, TSP and search-optimal trajectories."""

from .geometry import EnvironmentMap, GeometryError, Polygon, load_map, rectangle, save_map
from .metrics import CoverageReport, score
from .mst import MstConfig, plan_mst
from .ocp import OcpConfig, plan_ocp, plan_ocp_trajectory
from .trajectory import Trajectory, load_trajectory, save_trajectory
from .tsp import TspConfig, plan_tsp

__all__ = [
    "CoverageReport",
    "EnvironmentMap",
    "GeometryError",
    "MstConfig",
    "OcpConfig",
    "Polygon",
    "Trajectory",
    "TspConfig",
    "load_map",
    "load_trajectory",
    "plan_mst",
    "plan_ocp",
    "plan_ocp_trajectory",
    "plan_tsp",
    "rectangle",
    "save_map",
    "save_trajectory",
    "score",
]

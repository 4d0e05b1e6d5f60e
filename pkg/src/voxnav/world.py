"""Procedural corridor worlds with primitive obstacles and geometry queries.

The corridor runs along +x: start is sampled in the first 1.5 m slab, the
goal in the last one. Walls, floor and ceiling of the bounding box are solid
surfaces for both rays and collision checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels

DEFAULT_CLEARANCE = 0.4  # robot collision radius used during generation
END_SLAB = 1.5           # start/goal distance from the corridor ends
PLACEMENT_MARGIN = 0.05  # extra gap between obstacles and start/goal
MAX_ATTEMPTS = 1000


class GenerationError(RuntimeError):
    """Rejection sampling could not place an obstacle (overcrowded config)."""


class ObstacleKind(str, Enum):
    BOX = "box"
    SPHERE = "sphere"
    CYLINDER = "cylinder"


_KIND_CODES = {ObstacleKind.BOX: 0, ObstacleKind.SPHERE: 1,
               ObstacleKind.CYLINDER: 2}


@dataclass
class PrimitiveObstacle:
    kind: ObstacleKind
    position: np.ndarray        # center, world frame (m)
    yaw: float                  # rad, about +z
    half_extents: np.ndarray    # (3,) m; sphere uses [0] as radius,
                                # cylinder uses [0] radius / [2] half height

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.half_extents = np.asarray(self.half_extents, dtype=float)
        if not np.all(self.half_extents > 0):
            raise ValueError("half_extents must be strictly positive")

    def surface_distance(self, point: np.ndarray) -> float:
        """Distance from a point to the obstacle surface (0 inside)."""
        rel = np.asarray(point, dtype=float) - self.position
        if self.kind == ObstacleKind.SPHERE:
            return max(0.0, float(np.linalg.norm(rel)) - self.half_extents[0])
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        lx = c * rel[0] + s * rel[1]
        ly = -s * rel[0] + c * rel[1]
        lz = rel[2]
        if self.kind == ObstacleKind.BOX:
            d = np.maximum(np.abs([lx, ly, lz]) - self.half_extents, 0.0)
            return float(np.linalg.norm(d))
        dr = max(0.0, np.hypot(lx, ly) - self.half_extents[0])
        dz = max(0.0, abs(lz) - self.half_extents[2])
        return float(np.hypot(dr, dz))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Vectorized point-in-solid test for (N, 3) points."""
        rel = np.atleast_2d(points) - self.position
        if self.kind == ObstacleKind.SPHERE:
            return np.einsum("ij,ij->i", rel, rel) <= self.half_extents[0] ** 2
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        lx = c * rel[:, 0] + s * rel[:, 1]
        ly = -s * rel[:, 0] + c * rel[:, 1]
        lz = rel[:, 2]
        if self.kind == ObstacleKind.BOX:
            h = self.half_extents
            return ((np.abs(lx) <= h[0]) & (np.abs(ly) <= h[1])
                    & (np.abs(lz) <= h[2]))
        return ((lx ** 2 + ly ** 2 <= self.half_extents[0] ** 2)
                & (np.abs(lz) <= self.half_extents[2]))

    def bounding_radius(self) -> float:
        if self.kind == ObstacleKind.SPHERE:
            return float(self.half_extents[0])
        return float(np.linalg.norm(self.half_extents))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value,
                "position": [float(v) for v in self.position],
                "yaw": float(self.yaw),
                "half_extents": [float(v) for v in self.half_extents]}

    @staticmethod
    def from_dict(d: dict) -> "PrimitiveObstacle":
        return PrimitiveObstacle(ObstacleKind(d["kind"]),
                                 np.array(d["position"]), d["yaw"],
                                 np.array(d["half_extents"]))


@dataclass
class WorldConfig:
    length_range: tuple[float, float] = (10.0, 12.0)
    width_range: tuple[float, float] = (5.0, 8.0)
    height_range: tuple[float, float] = (4.0, 6.0)
    obstacle_count: int = 20
    obstacle_size_range: tuple[float, float] = (0.3, 1.2)  # full extents (m)
    seed: int = 0

    def validate(self) -> None:
        for name in ("length_range", "width_range", "height_range",
                     "obstacle_size_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ValueError(f"{name} must satisfy 0 < min <= max")
        if self.obstacle_count < 0:
            raise ValueError("obstacle_count must be non-negative")


@dataclass
class World:
    size: np.ndarray            # (L, W, H); bounds are [0, size] per axis
    obstacles: list[PrimitiveObstacle]
    start: np.ndarray
    goal: np.ndarray
    seed: int = 0
    _packed: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.size = np.asarray(self.size, dtype=float)
        self.start = np.asarray(self.start, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)

    @property
    def bounds_min(self) -> np.ndarray:
        return np.zeros(3)

    @property
    def bounds_max(self) -> np.ndarray:
        return self.size

    def _pack(self):
        if self._packed is None:
            k = len(self.obstacles)
            kinds = np.array([_KIND_CODES[o.kind] for o in self.obstacles],
                             dtype=np.int64)
            centers = (np.array([o.position for o in self.obstacles])
                       if k else np.zeros((0, 3)))
            halfs = (np.array([o.half_extents for o in self.obstacles])
                     if k else np.zeros((0, 3)))
            yaws = np.array([o.yaw for o in self.obstacles])
            self._packed = (kinds, centers, halfs, np.cos(yaws), np.sin(yaws))
        return self._packed

    # -- geometry queries ---------------------------------------------------

    def cast_rays(self, origin: np.ndarray, dirs: np.ndarray,
                  max_range: float) -> np.ndarray:
        """Hit distances for a bundle of unit rays; inf where no hit."""
        kinds, centers, halfs, cy, sy = self._pack()
        dirs = np.ascontiguousarray(dirs, dtype=np.float64)
        out = np.empty(dirs.shape[0])
        _kernels.cast_rays(np.asarray(origin, dtype=np.float64), dirs,
                           self.bounds_min, self.bounds_max, kinds, centers,
                           halfs, cy, sy, float(max_range), out)
        out[out >= _kernels.BIG] = np.inf
        return out

    def ray_intersect(self, origin: np.ndarray, direction: np.ndarray,
                      max_range: float) -> float | None:
        t = self.cast_rays(origin, np.asarray(direction, dtype=float)[None, :],
                           max_range)[0]
        return None if np.isinf(t) else float(t)

    def check_collision(self, position: np.ndarray, radius: float) -> bool:
        if radius <= 0:
            raise ValueError("radius must be positive")
        p = np.asarray(position, dtype=float)
        if np.any(p - self.bounds_min <= radius) \
                or np.any(self.bounds_max - p <= radius):
            return True
        if not self.obstacles:
            return False
        kinds, centers, halfs, cy, sy = self._pack()
        rel = p - centers
        lx = cy * rel[:, 0] + sy * rel[:, 1]
        ly = -sy * rel[:, 0] + cy * rel[:, 1]
        lz = rel[:, 2]
        # per-kind point-to-surface distance (0 inside)
        box = np.sqrt(np.maximum(np.abs(lx) - halfs[:, 0], 0.0) ** 2
                      + np.maximum(np.abs(ly) - halfs[:, 1], 0.0) ** 2
                      + np.maximum(np.abs(lz) - halfs[:, 2], 0.0) ** 2)
        sph = np.maximum(np.linalg.norm(rel, axis=1) - halfs[:, 0], 0.0)
        cyl = np.hypot(np.maximum(np.hypot(lx, ly) - halfs[:, 0], 0.0),
                       np.maximum(np.abs(lz) - halfs[:, 2], 0.0))
        dist = np.where(kinds == 0, box, np.where(kinds == 1, sph, cyl))
        return bool(np.min(dist) <= radius)

    def contains_point(self, points: np.ndarray) -> np.ndarray:
        """Solid-occupancy test: inside an obstacle or outside the bounds."""
        pts = np.atleast_2d(points)
        solid = np.any((pts < self.bounds_min) | (pts > self.bounds_max),
                       axis=1)
        for o in self.obstacles:
            solid |= o.contains(pts)
        return solid

    def distance_to_goal(self, position: np.ndarray) -> float:
        return float(np.linalg.norm(self.goal - np.asarray(position)))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        doc = {"size": [float(v) for v in self.size],
               "start": [float(v) for v in self.start],
               "goal": [float(v) for v in self.goal],
               "seed": int(self.seed),
               "obstacles": [o.to_dict() for o in self.obstacles]}
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "World":
        d = json.loads(text)
        return World(np.array(d["size"]),
                     [PrimitiveObstacle.from_dict(o) for o in d["obstacles"]],
                     np.array(d["start"]), np.array(d["goal"]), d["seed"])


def generate_world(cfg: WorldConfig, rng: np.random.Generator,
                   clearance: float = DEFAULT_CLEARANCE) -> World:
    """Deterministic corridor generation from an explicit random stream."""
    cfg.validate()
    size = np.array([rng.uniform(*cfg.length_range),
                     rng.uniform(*cfg.width_range),
                     rng.uniform(*cfg.height_range)])
    margin = clearance + PLACEMENT_MARGIN

    def sample_end(x_lo, x_hi):
        return np.array([rng.uniform(x_lo, x_hi),
                         rng.uniform(margin, size[1] - margin),
                         rng.uniform(margin, size[2] - margin)])

    start = sample_end(margin, END_SLAB)
    goal = sample_end(size[0] - END_SLAB, size[0] - margin)

    obstacles: list[PrimitiveObstacle] = []
    kinds = [ObstacleKind.BOX, ObstacleKind.SPHERE, ObstacleKind.CYLINDER]
    for _ in range(cfg.obstacle_count):
        for attempt in range(MAX_ATTEMPTS):
            kind = kinds[int(rng.integers(len(kinds)))]
            half = 0.5 * rng.uniform(*cfg.obstacle_size_range, size=3)
            if kind == ObstacleKind.SPHERE:
                half[1] = half[2] = half[0]
            elif kind == ObstacleKind.CYLINDER:
                half[1] = half[0]
            yaw = float(rng.uniform(-np.pi, np.pi))
            rad = float(np.linalg.norm(half))
            lo = np.minimum(rad, size / 2)
            pos = rng.uniform(lo, np.maximum(size - lo, lo))
            ob = PrimitiveObstacle(kind, pos, yaw, half)
            if ob.surface_distance(start) > margin \
                    and ob.surface_distance(goal) > margin:
                obstacles.append(ob)
                break
        else:
            raise GenerationError(
                f"could not place obstacle after {MAX_ATTEMPTS} attempts")

    return World(size, obstacles, start, goal, seed=cfg.seed)

"""Tri-state voxel grids: privileged global map and ego-centric local window.

States are stored as int8: 0 unknown, 1 free, 2 occupied. The global grid
covers the whole world at 0.1 m so local extraction is near-lossless; the
local grid is a 21^3 yaw-aligned window with the robot in the center voxel.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache

import numpy as np

from . import _kernels
from .camera import DepthImage, _pixel_dirs
from .transforms import Pose, rot_z
from .world import World

LOCAL_N = 21
LOCAL_RESOLUTION = 0.1
DEFAULT_MAX_RAY_RANGE = 3.0   # mapping range d_m
SNAPSHOT_MAGIC = b"VOXGRID1"


class VoxelState(IntEnum):
    UNKNOWN = 0
    FREE = 1
    OCCUPIED = 2


@dataclass
class GlobalGrid:
    origin: np.ndarray
    resolution: float
    dims: tuple[int, int, int]
    states: np.ndarray = None
    counts: np.ndarray = None     # voxel count per state, kept incremental

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        if self.states is None:
            self.states = np.zeros(self.dims, dtype=np.int8)
        if self.counts is None:
            self.counts = np.array([self.states.size, 0, 0], dtype=np.int64)

    @staticmethod
    def for_world(world: World, resolution: float = 0.1) -> "GlobalGrid":
        dims = tuple(int(np.ceil(s / resolution - 1e-9)) for s in world.size)
        return GlobalGrid(np.zeros(3), resolution, dims)

    @property
    def total_voxels(self) -> int:
        return int(self.states.size)

    def voxel_index(self, point: np.ndarray) -> np.ndarray:
        return np.floor((np.asarray(point) - self.origin)
                        / self.resolution).astype(np.int64)

    def voxel_center(self, idx) -> np.ndarray:
        return self.origin + (np.asarray(idx) + 0.5) * self.resolution

    def recount(self) -> np.ndarray:
        return np.bincount(self.states.reshape(-1), minlength=3)

    def exploration_fraction(self) -> float:
        return float((self.counts[1] + self.counts[2]) / self.states.size)

    def integrate_depth(self, img: DepthImage, pose: Pose,
                        d_m: float = DEFAULT_MAX_RAY_RANGE) -> int:
        """Fuse one depth frame; returns voxels leaving unknown this call."""
        if d_m <= 0:
            raise ValueError("d_m must be positive")
        dirs = _pixel_dirs(img.intrinsics) @ pose.rotation_matrix().T
        depths = img.data.reshape(-1)
        valid = np.isfinite(depths)
        return int(_kernels.integrate_rays(
            self.states, self.counts, self.origin, self.resolution,
            np.asarray(pose.p, dtype=np.float64),
            np.ascontiguousarray(dirs), depths.astype(np.float64),
            valid, float(d_m)))

    def count_near(self, center: np.ndarray, radius: float,
                   states: set[VoxelState]) -> int:
        """Voxels whose center lies within `radius` and whose state is in
        the given set."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        center = np.asarray(center, dtype=float)
        lo = np.maximum(self.voxel_index(center - radius), 0)
        hi = np.minimum(self.voxel_index(center + radius) + 1, self.dims)
        if np.any(lo >= hi):
            return 0
        ax = [self.origin[i] + (np.arange(lo[i], hi[i]) + 0.5)
              * self.resolution - center[i] for i in range(3)]
        dx, dy, dz = np.meshgrid(*ax, indexing="ij")
        within = dx ** 2 + dy ** 2 + dz ** 2 <= radius ** 2
        window = self.states[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]
        mask = np.zeros_like(within)
        for s in states:
            mask |= window == int(s)
        return int(np.count_nonzero(within & mask))

    # -- snapshot export ----------------------------------------------------

    def save_snapshot(self, path) -> None:
        with open(path, "wb") as f:
            f.write(SNAPSHOT_MAGIC)
            f.write(struct.pack("<3d", *self.origin))
            f.write(struct.pack("<d", self.resolution))
            f.write(struct.pack("<3q", *self.dims))
            f.write(self.states.tobytes())

    @staticmethod
    def load_snapshot(path) -> "GlobalGrid":
        with open(path, "rb") as f:
            if f.read(8) != SNAPSHOT_MAGIC:
                raise ValueError("not a voxel grid snapshot")
            origin = np.array(struct.unpack("<3d", f.read(24)))
            (res,) = struct.unpack("<d", f.read(8))
            dims = struct.unpack("<3q", f.read(24))
            states = np.frombuffer(f.read(), dtype=np.int8).reshape(dims)
        grid = GlobalGrid(origin, res, dims, states.copy())
        grid.counts = grid.recount().astype(np.int64)
        return grid

    def summary(self) -> dict:
        return {"unknown": int(self.counts[0]), "free": int(self.counts[1]),
                "occupied": int(self.counts[2]),
                "total": self.total_voxels,
                "exploration_fraction": self.exploration_fraction()}


@dataclass
class LocalGrid:
    """21^3 ego-centric window, yaw-aligned with the vehicle frame."""

    states: np.ndarray
    center: np.ndarray
    yaw: float
    resolution: float = LOCAL_RESOLUTION

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def side_length(self) -> float:
        return self.n * self.resolution

    def voxel_center_world(self, i: int, j: int, k: int) -> np.ndarray:
        half = (self.n - 1) // 2
        offset = (np.array([i, j, k], dtype=float) - half) * self.resolution
        return self.center + rot_z(self.yaw) @ offset


@lru_cache(maxsize=4)
def _local_offsets(n: int, resolution: float) -> np.ndarray:
    half = (n - 1) // 2
    ax = (np.arange(n) - half) * resolution
    gx, gy, gz = np.meshgrid(ax, ax, ax, indexing="ij")
    return np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)


def extract_local_grid(grid: GlobalGrid, robot_position: np.ndarray,
                       robot_yaw: float, n: int = LOCAL_N,
                       resolution: float = LOCAL_RESOLUTION) -> LocalGrid:
    """Nearest-voxel sampling of the global grid under a yaw rotation;
    samples outside the global grid read as unknown."""
    center = np.asarray(robot_position, dtype=float)
    pts = center + _local_offsets(n, resolution) @ rot_z(robot_yaw).T
    idx = np.floor((pts - grid.origin) / grid.resolution).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < np.array(grid.dims)), axis=1)
    states = np.zeros(n * n * n, dtype=np.int8)
    ii = idx[inside]
    states[inside] = grid.states[ii[:, 0], ii[:, 1], ii[:, 2]]
    return LocalGrid(states.reshape(n, n, n), center, float(robot_yaw),
                     resolution)

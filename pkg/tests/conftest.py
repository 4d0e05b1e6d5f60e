"""Shared fixtures and independent oracle helpers.

The oracles here deliberately re-derive geometry with plain numpy loops and
dense sampling so the fast kernels are checked against a second
implementation, not against themselves.
"""

import numpy as np
import pytest

from voxnav.camera import CameraIntrinsics
from voxnav.env import EnvConfig, EpisodeConfig, NoiseConfig
from voxnav.world import (ObstacleKind, PrimitiveObstacle, World, WorldConfig,
                          generate_world)
from dataclasses import replace


SMALL_INTRINSICS = CameraIntrinsics(width=16, height=8)


@pytest.fixture
def small_world():
    """Deterministic 3-obstacle scene used by several geometry oracles."""
    cfg = WorldConfig(obstacle_count=3, seed=7)
    return generate_world(cfg, np.random.default_rng(7))


@pytest.fixture
def box_world():
    """Hand-built world: one axis-aligned box in a 10 m cube."""
    box = PrimitiveObstacle(ObstacleKind.BOX, np.array([5.0, 5.0, 5.0]),
                            0.0, np.array([1.0, 1.0, 1.0]))
    return World(np.array([10.0, 10.0, 10.0]), [box],
                 np.array([1.0, 5.0, 5.0]), np.array([9.0, 5.0, 5.0]))


def cheap_config(obstacles=0, noise=None, **episode_kw):
    """Small-image, coarse-grid config for statistical tests."""
    episode_kw.setdefault("feature_rows", 4)
    episode_kw.setdefault("feature_cols", 4)
    episode_kw.setdefault("grid_resolution", 0.5)
    return EnvConfig(
        world=WorldConfig(obstacle_count=obstacles),
        intrinsics=CameraIntrinsics(width=8, height=8),
        noise=noise if noise is not None else NoiseConfig(),
        episode=EpisodeConfig(**episode_kw))


def quiet_config(obstacles=0, **episode_kw):
    return cheap_config(obstacles, noise=NoiseConfig.disabled(), **episode_kw)


def march_ray(world, origin, direction, max_range, step=0.001):
    """Dense-sampling ray oracle: first sample distance inside any solid."""
    ts = np.arange(step, max_range + step, step)
    pts = origin[None, :] + ts[:, None] * direction[None, :]
    solid = world.contains_point(pts)
    hits = np.nonzero(solid)[0]
    return None if hits.size == 0 else float(ts[hits[0]])


def surface_distance_oracle(world, point):
    """Min distance to any obstacle surface or boundary face (scalar loop)."""
    p = np.asarray(point, dtype=float)
    d = min(min(p - world.bounds_min), min(world.bounds_max - p))
    for ob in world.obstacles:
        d = min(d, ob.surface_distance(p))
    return float(d)

"""Thin foreign-interface layer: reset/step with flat numeric arrays.

One handle owns one native environment. Values are bit-identical to the
native path for the same seed and action sequence; nothing here draws
randomness or reorders computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from voxnav.config import config_from_dict, load_config
from voxnav.env import Action, Env, EnvConfig, Observation

LAYOUT_VERSION = "flat-obs-1"

_SCALAR_FIELDS = (
    ("goal_dir", 3),
    ("goal_dist", 1),
    ("pitch", 1),
    ("roll", 1),
    ("v", 3),
    ("omega", 3),
    ("cam_angles", 2),
    ("prev_action", 6),
)


class BindingsError(ValueError):
    """Contract violation at the foreign boundary."""


@dataclass
class FlatObservation:
    vector: np.ndarray      # scalar fields then depth feature, float64
    grid: np.ndarray        # (n, n, n) int8 local occupancy window


class EnvHandle:
    """Owns one native environment; not shareable across callers."""

    def __init__(self, config: EnvConfig):
        self._env = Env(config)
        e = config.episode
        self.feature_length = e.feature_rows * e.feature_cols
        self.grid_shape = (e.local_n, e.local_n, e.local_n)
        self.vector_length = sum(n for _, n in _SCALAR_FIELDS) \
            + self.feature_length
        self.layout_version = LAYOUT_VERSION


def observation_layout(handle: EnvHandle) -> list[tuple[str, int, int]]:
    """(field, offset, length) rows describing the flat vector."""
    rows = []
    offset = 0
    for name, length in _SCALAR_FIELDS:
        rows.append((name, offset, length))
        offset += length
    rows.append(("depth_feature", offset, handle.feature_length))
    return rows


def make_env(config=None) -> EnvHandle:
    """Build a handle from a config file path, an inline mapping, or the
    defaults when omitted. Config problems raise with the field path."""
    if config is None:
        cfg = EnvConfig()
    elif isinstance(config, EnvConfig):
        cfg = config
    elif isinstance(config, dict):
        cfg = config_from_dict(config)
    else:
        cfg = load_config(config)
    return EnvHandle(cfg)


def _flatten(handle: EnvHandle, obs: Observation) -> FlatObservation:
    vec = np.empty(handle.vector_length)
    vec[0:3] = obs.goal_dir
    vec[3] = obs.goal_dist
    vec[4] = obs.pitch
    vec[5] = obs.roll
    vec[6:9] = obs.v
    vec[9:12] = obs.omega
    vec[12:14] = obs.cam_angles
    vec[14:20] = obs.prev_action
    vec[20:] = obs.depth_feature
    return FlatObservation(vec, obs.local_grid.states.copy())


def env_reset(handle: EnvHandle, seed: int) -> FlatObservation:
    return _flatten(handle, handle._env.reset(int(seed)))


def env_step(handle: EnvHandle, action) -> tuple[FlatObservation, float,
                                                 bool, dict]:
    action = np.asarray(action, dtype=float)
    if action.shape != (6,):
        raise BindingsError(f"action must be a length-6 vector, got shape "
                            f"{action.shape}")
    obs, breakdown, done, record = handle._env.step(
        Action.from_vector(action))
    info = {
        "progress": breakdown.progress,
        "smoothness": breakdown.smoothness,
        "discovery": breakdown.discovery,
        "proximity": breakdown.proximity,
    }
    if record is not None:
        info["outcome"] = record.outcome
        info["steps"] = record.steps
        info["exploration"] = record.exploration
        info["terminal_shaping"] = record.terminal_shaping
    return _flatten(handle, obs), breakdown.total, done, info

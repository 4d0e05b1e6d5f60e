"""Flat-array interface to the navigation environment.

Observations cross this boundary as one float vector plus one int8 voxel
array, so any RL framework can consume them without importing the
simulator's domain types. The layout is fixed per configuration:

    field          offset          length
    -----          ------          ------
    goal_dir       0               3
    goal_dist      3               1
    pitch          4               1
    roll           5               1
    v              6               3
    omega          9               3
    cam_angles     12              2
    prev_action    14              6
    depth_feature  20              feature_rows * feature_cols

The grid array is the ego-centric local occupancy window, shape
(local_n, local_n, local_n), values 0 unknown / 1 free / 2 occupied.
Check LAYOUT_VERSION before relying on offsets.
"""

from .bindings import (BindingsError, EnvHandle, FlatObservation,
                       LAYOUT_VERSION, env_reset, env_step, make_env,
                       observation_layout)

__all__ = [
    "BindingsError",
    "EnvHandle",
    "FlatObservation",
    "LAYOUT_VERSION",
    "env_reset",
    "env_step",
    "make_env",
    "observation_layout",
]

__version__ = "0.1.0"

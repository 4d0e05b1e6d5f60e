"""Environment configuration file handling.

The config is a single YAML document with optional sections (world, camera,
mount, controller, noise, reward, episode). Missing sections and keys fall
back to the package defaults; unknown keys and invalid values raise
ConfigError naming the offending field path.
"""

from __future__ import annotations

import dataclasses
from dataclasses import replace

import numpy as np
import yaml

from . import camera as cam
from . import env as envmod
from . import reward as rew
from . import vehicle
from . import world as wd


class ConfigError(ValueError):
    """Invalid configuration; message carries the field path."""


_ANGLE_KEYS = {
    "camera": {"hfov_deg": "hfov", "vfov_deg": "vfov"},
    "mount": {"beta_max_deg": "beta_max", "gamma_max_deg": "gamma_max"},
    "noise": {"cam_rot_jitter_deg": "cam_rot_jitter"},
}

_SECTION_TYPES = {
    "world": wd.WorldConfig,
    "camera": cam.CameraIntrinsics,
    "mount": cam.MountState,
    "controller": vehicle.ControllerParams,
    "noise": envmod.NoiseConfig,
    "reward": rew.RewardConfig,
    "episode": envmod.EpisodeConfig,
}

_SECTION_ATTRS = {
    "world": "world", "camera": "intrinsics", "mount": "mount",
    "controller": "controller", "noise": "noise", "reward": "reward",
    "episode": "episode",
}

_TUPLE_FIELDS = {"length_range", "width_range", "height_range",
                 "obstacle_size_range"}


def _coerce(section: str, key: str, value):
    if key in _ANGLE_KEYS.get(section, {}):
        return _ANGLE_KEYS[section][key], float(np.deg2rad(value))
    if key in _TUPLE_FIELDS:
        if not (isinstance(value, (list, tuple)) and len(value) == 2):
            raise ConfigError(f"{section}.{key}: expected a [min, max] pair")
        return key, (float(value[0]), float(value[1]))
    if key == "lambda_a":
        return key, np.asarray(value, dtype=float)
    return key, value


def _build_section(section: str, data: dict, default):
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected a mapping")
    fields = {f.name for f in dataclasses.fields(type(default))}
    updates = {}
    for key, value in data.items():
        name, val = _coerce(section, key, value)
        if name not in fields:
            raise ConfigError(f"{section}.{key}: unknown field")
        updates[name] = val
    try:
        return replace(default, **updates)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def config_from_dict(doc: dict) -> envmod.EnvConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a mapping of sections")
    cfg = envmod.EnvConfig()
    for section, data in doc.items():
        if section not in _SECTION_TYPES:
            raise ConfigError(f"{section}: unknown section; expected one of "
                              f"{', '.join(sorted(_SECTION_TYPES))}")
        attr = _SECTION_ATTRS[section]
        cfg = replace(cfg, **{attr: _build_section(section, data,
                                                   getattr(cfg, attr))})
    return cfg


def load_config(path) -> envmod.EnvConfig:
    try:
        with open(path) as f:
            doc = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: envmod.EnvConfig) -> dict:
    """Round-trippable plain-dict form (stored in trajectory log headers)."""
    doc: dict = {}
    for section, attr in _SECTION_ATTRS.items():
        sub = {}
        for f in dataclasses.fields(_SECTION_TYPES[section]):
            if f.name == "seed":
                continue
            v = getattr(getattr(cfg, attr), f.name)
            if isinstance(v, np.ndarray):
                v = [float(x) for x in v]
            elif isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, (np.floating, np.integer)):
                v = v.item()
            sub[f.name] = v
        doc[section] = sub
    return doc


def config_from_plain_dict(doc: dict) -> envmod.EnvConfig:
    """Inverse of config_to_dict (field names, radians, no _deg aliases)."""
    cfg = envmod.EnvConfig()
    for section, attr in _SECTION_ATTRS.items():
        if section not in doc:
            continue
        default = getattr(cfg, attr)
        updates = {}
        for key, value in doc[section].items():
            if key in _TUPLE_FIELDS:
                value = (float(value[0]), float(value[1]))
            elif key == "lambda_a":
                value = np.asarray(value, dtype=float)
            updates[key] = value
        cfg = replace(cfg, **{attr: replace(default, **updates)})
    return cfg

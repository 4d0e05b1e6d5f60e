"""Four-term step reward: progress, action smoothness, voxel discovery,
and obstacle proximity, with a per-term breakdown for logging."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RewardConfig:
    lambda_d: float = 2.0
    lambda_e: float = 1.0
    alpha: float = 0.5
    lambda_a: np.ndarray = field(default_factory=lambda: np.full(6, 0.05))
    lambda_g: float = 0.01
    lambda_p: float = 0.02
    d_coll: float = 0.4
    enable_discovery: bool = False      # discovery term off unless requested
    # terminal shaping is separate from the four printed terms
    terminal_success: float = 10.0
    terminal_crash: float = -10.0

    def __post_init__(self):
        self.lambda_a = np.asarray(self.lambda_a, dtype=float)
        if min(self.lambda_d, self.lambda_e, self.alpha, self.lambda_g,
               self.lambda_p, self.d_coll) <= 0:
            raise ValueError("reward coefficients must be strictly positive")
        if self.lambda_a.shape != (6,) or not np.all(self.lambda_a > 0):
            raise ValueError("lambda_a must be a positive 6-vector")


@dataclass
class RewardBreakdown:
    progress: float
    smoothness: float
    discovery: float
    proximity: float
    total: float


def progress_reward(d_prev: float, d_now: float, cfg: RewardConfig) -> float:
    if d_prev < 0 or d_now < 0:
        raise ValueError("distances must be non-negative")
    return cfg.lambda_d * (d_prev - d_now) \
        + cfg.lambda_e * np.exp(-cfg.alpha * d_now ** 2)


def smoothness_penalty(a_now: np.ndarray, a_prev: np.ndarray,
                       cfg: RewardConfig) -> float:
    diff = np.asarray(a_now, dtype=float) - np.asarray(a_prev, dtype=float)
    if diff.shape != cfg.lambda_a.shape:
        raise ValueError("action vectors must match the weight vector")
    return -float(np.linalg.norm(cfg.lambda_a * diff))


def exploration_reward(transitions: int, cfg: RewardConfig) -> float:
    if transitions < 0:
        raise ValueError("transition count must be non-negative")
    if not cfg.enable_discovery:
        return 0.0
    return cfg.lambda_g * transitions


def proximity_penalty(near_count: int, cfg: RewardConfig) -> float:
    if near_count < 0:
        raise ValueError("near count must be non-negative")
    return -cfg.lambda_p * near_count


def total_reward(d_prev: float, d_now: float, a_now: np.ndarray,
                 a_prev: np.ndarray, transitions: int, near_count: int,
                 cfg: RewardConfig) -> RewardBreakdown:
    r = progress_reward(d_prev, d_now, cfg)
    l = smoothness_penalty(a_now, a_prev, cfg)
    n = exploration_reward(transitions, cfg)
    p = proximity_penalty(near_count, cfg)
    return RewardBreakdown(r, l, n, p, r + l + n + p)

"""Scripted baseline policies: goal seeking with potential-field avoidance,
plus static, sweeping, and greedy-information camera behaviors.

These are evaluation instruments, not learned controllers. All outputs
respect the action bounds for every reachable observation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .env import Action, Observation
from .mapping import LocalGrid, VoxelState


@dataclass
class PolicyMemory:
    """Opaque per-episode recurrent state threaded through act()."""
    step: int = 0
    data: dict = field(default_factory=dict)


class Policy:
    def initial_memory(self) -> PolicyMemory:
        return PolicyMemory()

    def act(self, obs: Observation, mem: PolicyMemory
            ) -> tuple[Action, PolicyMemory]:
        raise NotImplementedError


@lru_cache(maxsize=4)
def _grid_geometry(n: int, resolution: float):
    half = (n - 1) // 2
    ax = (np.arange(n) - half) * resolution
    ox, oy, oz = np.meshgrid(ax, ax, ax, indexing="ij")
    return ox, oy, oz, np.sqrt(ox ** 2 + oy ** 2 + oz ** 2)


@dataclass
class AvoidanceGains:
    attraction: float = 1.0
    repulse_occupied: float = 5.0
    repulse_unknown: float = 1.0
    influence_margin: float = 1.0      # repulsion reach beyond d_coll
    d_coll: float = 0.4
    yaw_gain: float = 1.0
    goal_fade: float = 2.0             # repulsion fades inside this range
    crab_angle: float = np.deg2rad(35.0)  # held goal bearing off body +x


def goal_seek_with_avoidance(obs: Observation,
                             gains: AvoidanceGains | None = None
                             ) -> np.ndarray:
    """Navigation command [vx, vy, vz, yaw_rate] in the vehicle frame.

    Attraction along the goal direction saturated per axis (largest
    component at the +-1 m/s bound), repulsion summed from occupied and
    unknown voxels of the local grid near the robot, yaw rate turning
    toward the goal bearing.
    """
    g = gains or AvoidanceGains()
    grid = obs.local_grid
    ox, oy, oz, dist = _grid_geometry(grid.n, grid.resolution)
    reach = g.d_coll + g.influence_margin
    near = (dist > 1e-9) & (dist <= reach)

    repulse = np.zeros(3)
    for state, gain in ((VoxelState.OCCUPIED, g.repulse_occupied),
                        (VoxelState.UNKNOWN, g.repulse_unknown)):
        mask = near & (grid.states == int(state))
        count = int(np.count_nonzero(mask))
        if count == 0:
            continue
        # count-normalized so dense walls do not overwhelm the attraction
        w = gain * (reach - dist[mask]) / reach / dist[mask] / count
        repulse -= np.array([np.sum(w * ox[mask]), np.sum(w * oy[mask]),
                             np.sum(w * oz[mask])])
    attract = np.zeros(3)
    if obs.goal_dist > 1e-9:
        peak = np.max(np.abs(obs.goal_dir))
        if peak > 1e-9:
            attract = g.attraction * obs.goal_dir / peak
    if g.goal_fade > 0 and obs.goal_dist < g.goal_fade:
        # near the goal, fade repulsion and drop the component that
        # directly opposes the approach so walls cannot cause a stall
        fade = obs.goal_dist / g.goal_fade
        repulse *= fade
        opposing = float(repulse @ obs.goal_dir)
        if opposing < 0:
            repulse -= (1.0 - fade) * opposing * obs.goal_dir
    v = np.clip(attract + repulse, -1.0, 1.0)

    # hold the goal bearing off the body x-axis: the saturated command
    # then fills two axes and closes faster than the 1 m/s single-axis cap
    yaw_rate = 0.0
    if obs.goal_dist > 1e-9:
        bearing = float(np.arctan2(obs.goal_dir[1], obs.goal_dir[0]))
        offset = g.crab_angle if bearing >= 0 else -g.crab_angle
        yaw_rate = float(np.clip(g.yaw_gain * (bearing - offset), -1.0, 1.0))
    return np.array([*v, yaw_rate])


def sweep_camera(t: int, amplitude: float, period: int,
                 beta_bias: float = -0.15, beta_max: float = np.pi / 2,
                 gamma_max: float = np.pi / 2) -> tuple[float, float]:
    """Sinusoidal camera yaw sweep with a small downward pitch bias."""
    gamma = amplitude * np.sin(2 * np.pi * t / period)
    return (float(np.clip(beta_bias, -beta_max, beta_max)),
            float(np.clip(gamma, -gamma_max, gamma_max)))


@lru_cache(maxsize=8)
def _candidate_orientations(beta_max: float, gamma_max: float
                            ) -> tuple[tuple[float, float], ...]:
    # 3 pitches x 3 yaws spanning the mount limits
    return tuple((b, g)
                 for b in (-beta_max, 0.0, beta_max)
                 for g in (-gamma_max, 0.0, gamma_max))


def count_unknown_in_cone(grid: LocalGrid, beta: float, gamma: float,
                          half_angle: float) -> int:
    ox, oy, oz, dist = _grid_geometry(grid.n, grid.resolution)
    axis = np.array([np.cos(beta) * np.cos(gamma),
                     np.cos(beta) * np.sin(gamma),
                     -np.sin(beta)])
    proj = ox * axis[0] + oy * axis[1] + oz * axis[2]
    with np.errstate(invalid="ignore", divide="ignore"):
        inside = proj / np.where(dist > 0, dist, np.inf) \
            >= np.cos(half_angle)
    return int(np.count_nonzero(inside & (grid.states == 0)))


def greedy_unknown_direction(grid: LocalGrid, current: tuple[float, float]
                             = (0.0, 0.0), beta_max: float = np.pi / 2,
                             gamma_max: float = np.pi / 2,
                             half_angle: float = np.deg2rad(28.5)
                             ) -> tuple[float, float]:
    """Candidate mount orientation whose view cone holds the most unknown
    voxels; ties break toward the smallest rotation from `current`."""
    best = None
    for b, g in _candidate_orientations(beta_max, gamma_max):
        count = count_unknown_in_cone(grid, b, g, half_angle)
        rot = np.hypot(b - current[0], g - current[1])
        key = (-count, rot)
        if best is None or key < best[0]:
            best = (key, (b, g))
    return best[1]


class RandomPolicy(Policy):
    """Seeded uniform actions, mainly for determinism and contract tests."""

    def __init__(self, seed: int = 0, beta_max: float = np.pi / 2,
                 gamma_max: float = np.pi / 2):
        self.seed = seed
        self.beta_max = beta_max
        self.gamma_max = gamma_max

    def initial_memory(self) -> PolicyMemory:
        return PolicyMemory(data={"rng": np.random.default_rng(self.seed)})

    def act(self, obs, mem):
        rng = mem.data["rng"]
        vec = rng.uniform(-1, 1, size=6)
        vec[4] *= self.beta_max
        vec[5] *= self.gamma_max
        mem.step += 1
        return Action.from_vector(vec), mem


class StaticCameraGoalSeeker(Policy):
    """Goal seeking with the camera fixed forward (beta = gamma = 0)."""

    def __init__(self, gains: AvoidanceGains | None = None):
        self.gains = gains

    def act(self, obs, mem):
        nav = goal_seek_with_avoidance(obs, self.gains)
        mem.step += 1
        return Action(nav[:3], float(nav[3]), 0.0, 0.0), mem


class ActiveSweepGoalSeeker(Policy):
    """Goal seeking while sweeping the camera yaw sinusoidally."""

    def __init__(self, gains: AvoidanceGains | None = None,
                 amplitude: float = np.pi / 2, period: int = 40,
                 beta_bias: float = -0.15):
        self.gains = gains
        self.amplitude = amplitude
        self.period = period
        self.beta_bias = beta_bias

    def act(self, obs, mem):
        nav = goal_seek_with_avoidance(obs, self.gains)
        beta, gamma = sweep_camera(mem.step, self.amplitude, self.period,
                                   self.beta_bias)
        mem.step += 1
        return Action(nav[:3], float(nav[3]), beta, gamma), mem


class GreedyUnknownGoalSeeker(Policy):
    """Goal seeking with the camera pointed at the densest unknown region."""

    def __init__(self, gains: AvoidanceGains | None = None):
        self.gains = gains

    def act(self, obs, mem):
        nav = goal_seek_with_avoidance(obs, self.gains)
        beta, gamma = greedy_unknown_direction(
            obs.local_grid, (float(obs.cam_angles[0]),
                             float(obs.cam_angles[1])))
        mem.step += 1
        return Action(nav[:3], float(nav[3]), beta, gamma), mem


POLICIES = {
    "random": RandomPolicy,
    "static": StaticCameraGoalSeeker,
    "sweep": ActiveSweepGoalSeeker,
    "greedy": GreedyUnknownGoalSeeker,
}


def make_policy(name: str, seed: int = 0) -> Policy:
    if name not in POLICIES:
        raise ValueError(f"unknown policy {name!r}; available: "
                         f"{', '.join(sorted(POLICIES))}")
    if name == "random":
        return RandomPolicy(seed=seed)
    return POLICIES[name]()

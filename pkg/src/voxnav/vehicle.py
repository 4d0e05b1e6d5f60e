"""Simplified quadrotor: first-order velocity tracking, yaw integration,
disturbance wrenches, and kinematic tilt bookkeeping.

Velocity commands live in the vehicle frame (body yaw, level x-y plane).
The tracked velocity uses the exact first-order discretization
v += (cmd - v) * (1 - exp(-dt/tau)), which stays stable for any tau > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .transforms import (Pose, euler_zyx_from_quat, quat_from_euler_zyx,
                         quat_normalize, quat_rotate, quat_to_matrix,
                         rot_z, yaw_from_quat, QUAT_IDENTITY)

GRAVITY = 9.81
TILT_CAP = np.deg2rad(30.0)
TORQUE_STD_FRACTION = 0.1   # disturbance torque std as a fraction of sigma_w


@dataclass
class RobotState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: QUAT_IDENTITY.copy())
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))  # body frame
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def pose(self) -> Pose:
        return Pose(self.p, self.q)


@dataclass
class ControllerParams:
    tau_v: float = 0.3
    tau_w: float = 0.2
    mass: float = 1.0

    def __post_init__(self):
        if self.tau_v <= 0 or self.tau_w <= 0 or self.mass <= 0:
            raise ValueError("controller parameters must be positive")


@dataclass
class Wrench:
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))   # N, world
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))  # N*m

    @staticmethod
    def zero() -> "Wrench":
        return Wrench()


def sample_disturbance(rng: np.random.Generator, sigma_w: float) -> Wrench:
    """i.i.d. Gaussian force per axis; torque acts on the yaw axis only."""
    if sigma_w < 0:
        raise ValueError("sigma_w must be non-negative")
    if sigma_w == 0:
        return Wrench.zero()
    force = rng.normal(0.0, sigma_w, size=3)
    torque_z = rng.normal(0.0, TORQUE_STD_FRACTION * sigma_w)
    return Wrench(force, np.array([0.0, 0.0, torque_z]))


def vehicle_frame(state: RobotState) -> np.ndarray:
    """Yaw-only rotation matrix of the vehicle frame (world <- vehicle)."""
    return rot_z(yaw_from_quat(state.q))


def step_dynamics(state: RobotState, cmd: np.ndarray,
                  params: ControllerParams, disturbance: Wrench,
                  dt: float) -> RobotState:
    """One physics substep. cmd = [vx, vy, vz, yaw_rate] (vehicle frame)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    cmd = np.asarray(cmd, dtype=float)
    yaw = yaw_from_quat(state.q)
    r_wv = rot_z(yaw)

    v_world = quat_rotate(state.q, state.v)
    v_veh = r_wv.T @ v_world

    alpha_v = 1.0 - np.exp(-dt / params.tau_v)
    a_track = (cmd[:3] - v_veh) / params.tau_v
    v_veh = v_veh + alpha_v * (cmd[:3] - v_veh)
    v_veh = v_veh + (r_wv.T @ disturbance.force) * (dt / params.mass)

    alpha_w = 1.0 - np.exp(-dt / params.tau_w)
    wz = state.omega[2] + alpha_w * (cmd[3] - state.omega[2])
    wz = wz + disturbance.torque[2] * dt        # unit yaw inertia
    yaw = yaw + wz * dt

    # small-angle tilt from the commanded lateral acceleration
    pitch = float(np.clip(np.arctan2(a_track[0], GRAVITY),
                          -TILT_CAP, TILT_CAP))
    roll = float(np.clip(np.arctan2(-a_track[1], GRAVITY),
                         -TILT_CAP, TILT_CAP))
    q = quat_normalize(quat_from_euler_zyx(yaw, pitch, roll))

    p = state.p + (r_wv @ v_veh) * dt
    v_body = quat_to_matrix(q).T @ (rot_z(yaw) @ v_veh)
    return RobotState(p, q, v_body, np.array([0.0, 0.0, wz]))


def step_dynamics_multi(state: RobotState, cmd: np.ndarray,
                        params: ControllerParams, wrenches: np.ndarray,
                        dt: float) -> RobotState:
    """Kernel-backed fast path: one substep per wrench row (N, 6).

    Matches repeated step_dynamics calls; the env hot loop uses this form.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    vec = np.empty(11)
    vec[0:3] = state.p
    vec[3:7] = state.q
    vec[7:10] = state.v
    vec[10] = state.omega[2]
    _kernels.step_physics(vec, np.asarray(cmd, dtype=np.float64),
                          params.tau_v, params.tau_w, params.mass,
                          np.ascontiguousarray(wrenches, dtype=np.float64),
                          dt, GRAVITY, TILT_CAP)
    return RobotState(vec[0:3].copy(), vec[3:7].copy(), vec[7:10].copy(),
                      np.array([0.0, 0.0, vec[10]]))


def tilt_angles(state: RobotState) -> tuple[float, float]:
    """(pitch, roll) of the body, for the observation vector."""
    _, pitch, roll = euler_zyx_from_quat(state.q)
    return pitch, roll

"""Actuated pan-tilt depth camera: servo dynamics, rendering, noise.

Camera frame convention: +x optical axis, +y left, +z up. The mount sits at
a fixed body-frame offset and looks along body +x at zero pitch/yaw.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .transforms import Pose
from .world import World

NOMINAL_MOUNT_OFFSET = (0.15, 0.0, 0.0)


@dataclass(frozen=True)
class CameraIntrinsics:
    hfov: float = np.deg2rad(86.0)
    vfov: float = np.deg2rad(57.0)
    width: int = 84
    height: int = 54
    near: float = 0.2
    far: float = 10.0

    def __post_init__(self):
        if not (0 < self.near < self.far):
            raise ValueError("require 0 < near < far")
        if not (0 < self.hfov < np.pi and 0 < self.vfov < np.pi):
            raise ValueError("fov must lie in (0, pi)")
        if self.width < 8 or self.height < 8:
            raise ValueError("image must be at least 8x8")


@lru_cache(maxsize=8)
def _pixel_dirs(intr: CameraIntrinsics) -> np.ndarray:
    """Unit ray directions (H*W, 3) in the camera frame, row-major."""
    th = np.tan(intr.hfov / 2)
    tv = np.tan(intr.vfov / 2)
    # pixel centers; +y left means image column 0 maps to +y
    xn = (2 * (np.arange(intr.width) + 0.5) / intr.width) - 1
    yn = (2 * (np.arange(intr.height) + 0.5) / intr.height) - 1
    yy = -th * xn                       # lateral, per-axis tangent mapping
    zz = -tv * yn                       # vertical; image row 0 looks up
    ly, lz = np.meshgrid(yy, zz)
    dirs = np.stack([np.ones_like(ly), ly, lz], axis=-1).reshape(-1, 3)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs


@dataclass
class MountState:
    beta: float = 0.0                   # camera pitch (rad)
    gamma: float = 0.0                  # camera yaw (rad)
    beta_max: float = np.pi / 2
    gamma_max: float = np.pi / 2
    tau_beta: float = 0.2
    tau_gamma: float = 0.2

    def __post_init__(self):
        if self.tau_beta <= 0 or self.tau_gamma <= 0:
            raise ValueError("servo time constants must be positive")
        if abs(self.beta) > self.beta_max or abs(self.gamma) > self.gamma_max:
            raise ValueError("mount angles exceed limits")

    @staticmethod
    def hardware_preset() -> "MountState":
        # physical pan-tilt unit: +-60 deg pitch, +-45 deg yaw
        return MountState(beta_max=np.deg2rad(60.0),
                          gamma_max=np.deg2rad(45.0))


def step_mount(state: MountState, beta_cmd: float, gamma_cmd: float,
               dt: float) -> MountState:
    """Forward-Euler first-order servo update with command saturation."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt >= min(state.tau_beta, state.tau_gamma):
        raise ValueError("dt must be below the servo time constants")
    bc = np.clip(beta_cmd, -state.beta_max, state.beta_max)
    gc = np.clip(gamma_cmd, -state.gamma_max, state.gamma_max)
    beta = state.beta + (dt / state.tau_beta) * (bc - state.beta)
    gamma = state.gamma + (dt / state.tau_gamma) * (gc - state.gamma)
    return replace(state,
                   beta=float(np.clip(beta, -state.beta_max, state.beta_max)),
                   gamma=float(np.clip(gamma, -state.gamma_max,
                                       state.gamma_max)))


def camera_pose(robot_pose: Pose, mount: MountState,
                extrinsic_offset: Pose | None = None) -> Pose:
    """body frame o nominal mount offset o (yaw, pitch) o extrinsic jitter."""
    pose = robot_pose.compose(
        Pose.from_yaw_pitch(mount.gamma, mount.beta,
                            np.array(NOMINAL_MOUNT_OFFSET)))
    if extrinsic_offset is not None:
        pose = pose.compose(extrinsic_offset)
    return pose


@dataclass
class DepthImage:
    """Range image in meters; invalid pixels hold +inf."""

    data: np.ndarray
    intrinsics: CameraIntrinsics

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.data)


def render_depth(world: World, pose: Pose, intr: CameraIntrinsics
                 ) -> DepthImage:
    dirs_world = _pixel_dirs(intr) @ pose.rotation_matrix().T
    t = world.cast_rays(pose.p, dirs_world, intr.far)
    t[t < intr.near] = np.inf
    return DepthImage(t.reshape(intr.height, intr.width), intr)


@dataclass(frozen=True)
class DepthNoise:
    sigma_coeff: float = 0.002          # sigma(z) = sigma_coeff * z^2
    dropout: float = 0.01

    def __post_init__(self):
        if not 0 <= self.dropout <= 1:
            raise ValueError("dropout must lie in [0, 1]")


def corrupt_depth(img: DepthImage, rng: np.random.Generator,
                  params: DepthNoise) -> DepthImage:
    """Range-dependent Gaussian noise plus independent pixel dropout."""
    data = img.data.copy()
    valid = img.valid
    z = data[valid]
    if params.sigma_coeff > 0:
        z = z + rng.normal(0.0, params.sigma_coeff * z ** 2)
        z = np.clip(z, img.intrinsics.near, img.intrinsics.far)
    drop = rng.random(z.shape) < params.dropout
    z[drop] = np.inf
    data[valid] = z
    return DepthImage(data, img.intrinsics)


def block_pool_feature(img: DepthImage, rows: int = 6, cols: int = 7
                       ) -> np.ndarray:
    """Average-pool the range image to rows*cols values; invalid -> far."""
    h, w = img.data.shape
    if h % rows or w % cols:
        raise ValueError(f"image {h}x{w} not divisible into {rows}x{cols}")
    data = np.where(img.valid, img.data, img.intrinsics.far)
    return data.reshape(rows, h // rows, cols, w // cols).mean(axis=(1, 3)) \
               .reshape(-1)


def depth_feature(img: DepthImage, encoder=None) -> np.ndarray:
    """Fixed-length feature from a depth frame; `encoder` is the plug-in
    seam for learned compressors."""
    if encoder is None:
        return block_pool_feature(img)
    return np.asarray(encoder(img), dtype=float)


def write_depth_pgm(img: DepthImage, path) -> None:
    """16-bit PGM in millimeters, 0 marks invalid pixels."""
    mm = np.where(img.valid, np.round(img.data * 1000.0), 0.0)
    mm = np.clip(mm, 0, 65535).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{img.data.shape[1]} {img.data.shape[0]}\n65535\n"
                .encode())
        f.write(mm.tobytes())


def read_depth_pgm(path, intr: CameraIntrinsics) -> DepthImage:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P5":
            raise ValueError("not a binary PGM file")
        w, h = map(int, f.readline().split())
        f.readline()  # maxval
        mm = np.frombuffer(f.read(), dtype=">u2").reshape(h, w)
    data = mm.astype(float) / 1000.0
    data[mm == 0] = np.inf
    return DepthImage(data, intr)

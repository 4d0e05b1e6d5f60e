"""Episode orchestration: reset/step, observation assembly, termination,
randomization streams, and batch evaluation.

One Env instance owns its world, grid and random streams. Each noise source
draws from its own sub-generator, so disabling a source never shifts the
other channels.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import camera as cam
from . import mapping, reward as rew, vehicle, world as wd
from .transforms import Pose, quat_from_euler_zyx, rot_z, yaw_from_quat

_STREAMS = ("world", "init", "disturbance", "depth", "obs", "extrinsic",
            "tau")


class EpisodeFinishedError(RuntimeError):
    """step() was called on an episode that already terminated."""


@dataclass
class Action:
    v_cmd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw_rate_cmd: float = 0.0
    beta_cmd: float = 0.0
    gamma_cmd: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([*self.v_cmd, self.yaw_rate_cmd, self.beta_cmd,
                         self.gamma_cmd])

    @staticmethod
    def from_vector(vec: np.ndarray) -> "Action":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (6,):
            raise ValueError(f"action vector must have length 6, got "
                             f"{vec.shape}")
        return Action(vec[:3].copy(), float(vec[3]), float(vec[4]),
                      float(vec[5]))

    def clamped(self, beta_max: float, gamma_max: float) -> "Action":
        return Action(np.clip(self.v_cmd, -1.0, 1.0),
                      float(np.clip(self.yaw_rate_cmd, -1.0, 1.0)),
                      float(np.clip(self.beta_cmd, -beta_max, beta_max)),
                      float(np.clip(self.gamma_cmd, -gamma_max, gamma_max)))


@dataclass
class Observation:
    goal_dir: np.ndarray          # unit vector, vehicle frame
    goal_dist: float
    pitch: float
    roll: float
    v: np.ndarray                 # body frame
    omega: np.ndarray
    cam_angles: np.ndarray        # (beta, gamma)
    prev_action: np.ndarray
    depth_feature: np.ndarray
    local_grid: mapping.LocalGrid


@dataclass
class NoiseConfig:
    sigma_w: float = 5.0                      # disturbance force std (N)
    delta_pos: float = 0.1                    # odometry position noise (m)
    delta_vel: float = 0.05                   # velocity noise (m/s)
    cam_pos_jitter: float = 0.05              # extrinsic translation (m)
    cam_rot_jitter: float = np.deg2rad(5.0)   # extrinsic rotation (rad)
    tau_jitter: float = 0.12                  # controller constant fraction
    depth_sigma_coeff: float = 0.002
    depth_dropout: float = 0.01
    enable_disturbance: bool = True
    enable_obs_noise: bool = True
    enable_extrinsic: bool = True
    enable_tau_jitter: bool = True
    enable_depth_noise: bool = True

    def __post_init__(self):
        for name in ("sigma_w", "delta_pos", "delta_vel", "cam_pos_jitter",
                     "cam_rot_jitter", "tau_jitter", "depth_sigma_coeff",
                     "depth_dropout"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @staticmethod
    def disabled() -> "NoiseConfig":
        return NoiseConfig(enable_disturbance=False, enable_obs_noise=False,
                           enable_extrinsic=False, enable_tau_jitter=False,
                           enable_depth_noise=False)


@dataclass
class EpisodeConfig:
    control_dt: float = 0.1
    physics_substeps: int = 10
    max_steps: int = 100          # 10 s horizon at the 10 Hz control rate
    success_radius: float = 1.0
    mapping_range: float = 3.0    # depth integration cutoff d_m
    grid_resolution: float = 0.1
    local_n: int = 21
    feature_rows: int = 6
    feature_cols: int = 7
    fov_constrained: bool = False

    @property
    def physics_dt(self) -> float:
        return self.control_dt / self.physics_substeps


@dataclass
class EnvConfig:
    world: wd.WorldConfig = field(default_factory=wd.WorldConfig)
    intrinsics: cam.CameraIntrinsics = field(
        default_factory=cam.CameraIntrinsics)
    mount: cam.MountState = field(default_factory=cam.MountState)
    controller: vehicle.ControllerParams = field(
        default_factory=vehicle.ControllerParams)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    reward: rew.RewardConfig = field(default_factory=rew.RewardConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)


@dataclass
class EpisodeRecord:
    outcome: str                  # success | crash | timeout | error
    steps: int
    exploration: float
    reward_sum: float
    progress_sum: float
    smoothness_sum: float
    discovery_sum: float
    proximity_sum: float
    terminal_shaping: float
    path_length: float
    seed: int
    world: wd.World | None = None
    error: str | None = None


class Env:
    """Single-owner episodic environment; create one per worker."""

    def __init__(self, config: EnvConfig | None = None):
        self.config = config or EnvConfig()
        self.world: wd.World | None = None
        self.grid: mapping.GlobalGrid | None = None
        self.done = True
        self._rng: dict[str, np.random.Generator] = {}

    # -- episode lifecycle --------------------------------------------------

    def reset(self, seed: int) -> Observation:
        c = self.config
        ss = np.random.SeedSequence(seed)
        self._rng = {name: np.random.default_rng(child)
                     for name, child in zip(_STREAMS, ss.spawn(len(_STREAMS)))}
        self.seed = int(seed)

        world_cfg = replace(c.world, seed=seed)
        self.world = wd.generate_world(world_cfg, self._rng["world"],
                                       clearance=c.reward.d_coll)
        self.grid = mapping.GlobalGrid.for_world(
            self.world, resolution=c.episode.grid_resolution)

        yaw0 = float(self._rng["init"].uniform(-np.pi / 2, np.pi / 2))
        self.state = vehicle.RobotState(
            p=self.world.start.copy(), q=quat_from_euler_zyx(yaw0, 0.0, 0.0))
        self.mount = replace(c.mount, beta=0.0, gamma=0.0)

        n = c.noise
        if n.enable_tau_jitter:
            f = self._rng["tau"].uniform(1 - n.tau_jitter, 1 + n.tau_jitter,
                                         size=2)
            self.controller = replace(c.controller,
                                      tau_v=c.controller.tau_v * f[0],
                                      tau_w=c.controller.tau_w * f[1])
        else:
            self.controller = c.controller
        if n.enable_extrinsic:
            dp = self._rng["extrinsic"].uniform(-n.cam_pos_jitter,
                                                n.cam_pos_jitter, size=3)
            ang = self._rng["extrinsic"].uniform(-n.cam_rot_jitter,
                                                 n.cam_rot_jitter, size=3)
            self.extrinsic = Pose(dp, quat_from_euler_zyx(*ang))
        else:
            self.extrinsic = None

        self.prev_action = np.zeros(6)
        self.steps = 0
        self.done = False
        self.d_prev = self.world.distance_to_goal(self.state.p)
        self._sums = np.zeros(4)
        self._terminal_shaping = 0.0
        self._path_length = 0.0

        # initial sensor frame so the first local grid is not all-unknown
        transitions, local, feature, perceived_p = self._sense()
        return self._assemble(local, feature, perceived_p)

    def step(self, action: Action
             ) -> tuple[Observation, rew.RewardBreakdown, bool,
                        EpisodeRecord | None]:
        if self.done:
            raise EpisodeFinishedError("episode already terminated")
        c = self.config
        action = action.clamped(self.mount.beta_max, self.mount.gamma_max)
        if c.episode.fov_constrained:
            action = self._constrain_to_fov(action)
        a_vec = action.as_vector()

        cmd = np.array([*action.v_cmd, action.yaw_rate_cmd])
        prev_p = self.state.p.copy()
        wrenches = np.zeros((c.episode.physics_substeps, 6))
        if c.noise.enable_disturbance:
            for i in range(c.episode.physics_substeps):
                w = vehicle.sample_disturbance(self._rng["disturbance"],
                                               c.noise.sigma_w)
                wrenches[i, :3] = w.force
                wrenches[i, 3:] = w.torque
        self.state = vehicle.step_dynamics_multi(self.state, cmd,
                                                 self.controller, wrenches,
                                                 c.episode.physics_dt)
        self.mount = cam.step_mount(self.mount, action.beta_cmd,
                                    action.gamma_cmd, c.episode.control_dt)
        self.steps += 1
        self._path_length += float(np.linalg.norm(self.state.p - prev_p))

        transitions, local, feature, perceived_p = self._sense()
        d_now = self.world.distance_to_goal(self.state.p)
        near = self.grid.count_near(
            self.state.p, c.reward.d_coll,
            {mapping.VoxelState.OCCUPIED, mapping.VoxelState.UNKNOWN})
        breakdown = rew.total_reward(self.d_prev, d_now, a_vec,
                                     self.prev_action, transitions, near,
                                     c.reward)
        self._sums += [breakdown.progress, breakdown.smoothness,
                       breakdown.discovery, breakdown.proximity]
        self.d_prev = d_now
        self.prev_action = a_vec

        # termination precedence: crash > success > timeout
        outcome = None
        if self.world.check_collision(self.state.p, c.reward.d_coll):
            outcome = "crash"
            self._terminal_shaping = c.reward.terminal_crash
        elif d_now <= c.episode.success_radius:
            outcome = "success"
            self._terminal_shaping = c.reward.terminal_success
        elif self.steps >= c.episode.max_steps:
            outcome = "timeout"

        obs = self._assemble(local, feature, perceived_p)
        record = None
        if outcome is not None:
            self.done = True
            record = self._record(outcome)
        return obs, breakdown, self.done, record

    # -- internals ----------------------------------------------------------

    def _sense(self):
        """Render, corrupt, and integrate one depth frame; returns the voxel
        transition count, local grid, depth feature, and perceived position.
        """
        c = self.config
        if c.noise.enable_obs_noise:
            perceived_p = self.state.p + self._rng["obs"].uniform(
                -c.noise.delta_pos, c.noise.delta_pos, size=3)
        else:
            perceived_p = self.state.p.copy()

        true_pose = cam.camera_pose(self.state.pose(), self.mount,
                                    self.extrinsic)
        img = cam.render_depth(self.world, true_pose, c.intrinsics)
        if c.noise.enable_depth_noise:
            img = cam.corrupt_depth(
                img, self._rng["depth"],
                cam.DepthNoise(c.noise.depth_sigma_coeff,
                               c.noise.depth_dropout))
        # integration uses the perceived (odometry) pose; orientation is
        # unchanged, so only the camera position shifts
        map_pose = Pose(true_pose.p + (perceived_p - self.state.p),
                        true_pose.q)
        transitions = self.grid.integrate_depth(img, map_pose,
                                                c.episode.mapping_range)
        yaw = yaw_from_quat(self.state.q)
        local = mapping.extract_local_grid(self.grid, perceived_p, yaw,
                                           n=c.episode.local_n)
        feature = cam.depth_feature(img, self._feature_encoder())
        return transitions, local, feature, perceived_p

    def _feature_encoder(self):
        e = self.config.episode
        return lambda img: cam.block_pool_feature(img, e.feature_rows,
                                                  e.feature_cols)

    def _assemble(self, local, feature, perceived_p) -> Observation:
        c = self.config
        goal_rel = self.world.goal - perceived_p
        dist = float(np.linalg.norm(goal_rel))
        yaw = yaw_from_quat(self.state.q)
        if dist > 1e-12:
            goal_dir = rot_z(yaw).T @ (goal_rel / dist)
        else:
            goal_dir = np.zeros(3)
        v = self.state.v.copy()
        if c.noise.enable_obs_noise:
            v = v + self._rng["obs"].uniform(-c.noise.delta_vel,
                                             c.noise.delta_vel, size=3)
        pitch, roll = vehicle.tilt_angles(self.state)
        return Observation(goal_dir, dist, pitch, roll, v,
                           self.state.omega.copy(),
                           np.array([self.mount.beta, self.mount.gamma]),
                           self.prev_action.copy(), feature, local)

    def _constrain_to_fov(self, action: Action) -> Action:
        """Project the velocity command into the camera frustum cone."""
        speed = float(np.linalg.norm(action.v_cmd))
        if speed < 1e-9:
            return action
        intr = self.config.intrinsics
        half_angle = min(intr.hfov, intr.vfov) / 2
        r_body = self.state.pose().rotation_matrix()
        r_veh = rot_z(yaw_from_quat(self.state.q))
        axis = r_veh.T @ r_body @ Pose.from_yaw_pitch(
            self.mount.gamma, self.mount.beta).rotation_matrix() \
            @ np.array([1.0, 0.0, 0.0])
        d = action.v_cmd / speed
        cosang = float(np.clip(d @ axis, -1.0, 1.0))
        if cosang >= np.cos(half_angle):
            return action
        # rotate d toward the axis until it lies on the cone boundary
        perp = d - cosang * axis
        pn = np.linalg.norm(perp)
        if pn < 1e-9:       # opposite to the axis: fall back to the axis
            new_d = axis
        else:
            new_d = np.cos(half_angle) * axis + np.sin(half_angle) * perp / pn
        return replace(action, v_cmd=new_d * speed)

    def _record(self, outcome: str) -> EpisodeRecord:
        return EpisodeRecord(
            outcome=outcome, steps=self.steps,
            exploration=self.grid.exploration_fraction(),
            reward_sum=float(self._sums.sum()),
            progress_sum=float(self._sums[0]),
            smoothness_sum=float(self._sums[1]),
            discovery_sum=float(self._sums[2]),
            proximity_sum=float(self._sums[3]),
            terminal_shaping=self._terminal_shaping,
            path_length=self._path_length, seed=self.seed, world=self.world)


# -- batch evaluation -------------------------------------------------------

def episode_seed(base_seed: int, obstacle_count: int, index: int) -> int:
    ss = np.random.SeedSequence([int(base_seed), int(obstacle_count),
                                 int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_episode(env: Env, policy, seed: int, step_callback=None
                ) -> EpisodeRecord:
    obs = env.reset(seed)
    mem = policy.initial_memory()
    record = None
    while record is None:
        action, mem = policy.act(obs, mem)
        obs, breakdown, done, record = env.step(action)
        if step_callback is not None:
            step_callback(env, action, breakdown)
    return record


def _batch_task(args):
    config, policy_name, policy_seed, obstacle_count, seed = args
    from . import policies
    cfg = replace(config, world=replace(config.world,
                                        obstacle_count=obstacle_count))
    env = Env(cfg)
    try:
        policy = policies.make_policy(policy_name, seed=policy_seed)
        rec = run_episode(env, policy, seed)
    except Exception as exc:  # noqa: BLE001 - policy faults become records
        rec = EpisodeRecord("error", 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                            0.0, seed, error=f"{type(exc).__name__}: {exc}")
    rec.world = None          # keep results light for pickling
    return obstacle_count, seed, rec


def run_batch(config: EnvConfig, policy_name: str, conditions: list[int],
              episodes: int, base_seed: int = 0, workers: int = 1,
              policy_seed: int = 0) -> list[dict]:
    """Outcome fractions and mean exploration per obstacle-count condition.

    Results depend only on (config, seed list), not on worker scheduling.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    tasks = [(config, policy_name, policy_seed, c,
              episode_seed(base_seed, c, j))
             for c in conditions for j in range(episodes)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_batch_task, tasks, chunksize=4))
    else:
        results = [_batch_task(t) for t in tasks]
    results.sort(key=lambda r: (conditions.index(r[0]), r[1]))

    rows = []
    for c in conditions:
        recs = [r for cc, _, r in results if cc == c]
        ok = [r for r in recs if r.outcome != "error"]
        n = max(len(ok), 1)
        row = {"condition": c,
               "success": sum(r.outcome == "success" for r in ok) / n,
               "timeout": sum(r.outcome == "timeout" for r in ok) / n,
               "crash": sum(r.outcome == "crash" for r in ok) / n,
               "exploration": sum(r.exploration for r in ok) / n,
               "errors": len(recs) - len(ok)}
        rows.append(row)
    return rows

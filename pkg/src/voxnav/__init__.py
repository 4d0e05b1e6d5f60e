"""voxnav: deterministic quadrotor navigation simulator with an actuated
depth camera, tri-state voxel occupancy mapping, and scripted baselines."""

from .camera import (CameraIntrinsics, DepthImage, DepthNoise, MountState,
                     camera_pose, corrupt_depth, depth_feature, render_depth,
                     step_mount)
from .env import (Action, Env, EnvConfig, EpisodeConfig, EpisodeFinishedError,
                  EpisodeRecord, NoiseConfig, Observation, run_batch,
                  run_episode)
from .mapping import (GlobalGrid, LocalGrid, VoxelState, extract_local_grid)
from .reward import (RewardBreakdown, RewardConfig, total_reward)
from .vehicle import (ControllerParams, RobotState, Wrench,
                      sample_disturbance, step_dynamics, vehicle_frame)
from .world import (GenerationError, ObstacleKind, PrimitiveObstacle, World,
                    WorldConfig, generate_world)

__version__ = "0.1.0"

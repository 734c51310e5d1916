from .base import FunctionVelocityModel, TimeLike, VelocityModel
from .cfm import LatentPair, cfm_loss, ot_interpolate, sample_flow_step, velocity_target
from .sampler import cfg_combine, euler_solve, sway, time_grid

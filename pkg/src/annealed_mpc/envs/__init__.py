"""Desk-scale environments implementing the DynamicsModel contract."""
from .contact import damped_torque, staged_contact_reward, total_contact_score, ContactStageRecord
from .double_integrator import DoubleIntegrator, grid_dp_optimum, riccati_optimum
from .hopper import Hopper, Pad, random_pads
from .pendulum import Pendulum
from .wall_jump import WallJump, WallJumpLandscape, wall_jump_cost

ENVIRONMENTS = {
    "double_integrator": DoubleIntegrator,
    "pendulum": Pendulum,
    "wall_jump": WallJump,
    "hopper": Hopper,
}

__all__ = [
    "ContactStageRecord", "DoubleIntegrator", "ENVIRONMENTS", "Hopper", "Pad", "Pendulum",
    "WallJump", "WallJumpLandscape", "damped_torque", "grid_dp_optimum", "random_pads",
    "riccati_optimum", "staged_contact_reward", "total_contact_score", "wall_jump_cost",
]

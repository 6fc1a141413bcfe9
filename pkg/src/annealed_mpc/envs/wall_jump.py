"""Planar wall-jump task: run along the ground and hop a thin wall to reach a goal.

Actions are ``(run, jump)`` in ``[-1, 1]``. While on the ground the run
command accelerates the mass horizontally (with linear friction); a positive
jump command sets an upward velocity proportional to the command. In the air
the motion is ballistic. Wall penetration is not a simulation event: every
step spent inside the wall below its top costs ``collision_weight``.

``wall_jump_cost`` is the low-dimensional version used for landscape
analysis: a single launch at ``t = 0`` followed by a ballistic flight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._accel import njit, prange
from ..core import DynamicsModel


@njit(cache=True)
def _step_scalar(x, y, vx, vy, u_run, u_jump, dt, mass, gravity, thrust, impulse, friction):
    if y <= 0.0:
        vx = vx + (thrust * u_run / mass - friction * vx) * dt
        if u_jump > 0.0:
            vy = impulse * u_jump / mass
        else:
            vy = 0.0
    else:
        vy = vy - gravity * dt
    x = x + vx * dt
    y = y + vy * dt
    if y <= 0.0:
        y = 0.0
        if vy < 0.0:
            vy = 0.0
    return x, y, vx, vy


@njit(parallel=True, cache=True)
def _rollout_costs_kernel(x0, U, dt, mass, gravity, thrust, impulse, friction,
                          wall_x, wall_width, wall_height, goal_x,
                          w_collision, w_effort, w_goal, w_velocity):
    n, L, _ = U.shape
    out = np.empty(n)
    for k in prange(n):
        x, y, vx, vy = x0[0], x0[1], x0[2], x0[3]
        tot = 0.0
        for h in range(L):
            ur = U[k, h, 0]
            uj = U[k, h, 1]
            c = w_effort * (ur * ur + uj * uj)
            if x >= wall_x and x <= wall_x + wall_width and y < wall_height:
                c += w_collision
            tot += c
            x, y, vx, vy = _step_scalar(x, y, vx, vy, ur, uj, dt, mass, gravity,
                                        thrust, impulse, friction)
        dx = x - goal_x
        tot += w_goal * dx * dx + w_velocity * (vx * vx + vy * vy)
        out[k] = tot if np.isfinite(tot) else np.inf
    return out


@dataclass(frozen=True)
class WallJump(DynamicsModel):
    mass: float = 1.0
    gravity: float = 9.81
    thrust: float = 4.0  # N at run = 1
    impulse: float = 3.5  # N*s at jump = 1
    friction: float = 1.0  # 1/s, ground only
    wall_x: float = 1.0
    wall_width: float = 0.15
    wall_height: float = 0.3
    goal_x: float = 1.6
    goal_tolerance: float = 0.05
    collision_weight: float = 50.0
    effort_weight: float = 0.01
    goal_weight: float = 10.0
    velocity_weight: float = 1.0
    start_x: float = 0.0
    dt: float = 0.02

    state_dim = 4
    action_dim = 2

    @property
    def action_low(self):
        return np.array([-1.0, -1.0])

    @property
    def action_high(self):
        return np.array([1.0, 1.0])

    def initial_state(self):
        return np.array([self.start_x, 0.0, 0.0, 0.0])

    def step(self, s, u, dt):
        x, y, vx, vy = s[:, 0], s[:, 1], s[:, 2], s[:, 3]
        ur, uj = u[:, 0], u[:, 1]
        ground = y <= 0.0
        vx = np.where(ground, vx + (self.thrust * ur / self.mass - self.friction * vx) * dt, vx)
        vy = np.where(ground, np.where(uj > 0.0, self.impulse * uj / self.mass, 0.0),
                      vy - self.gravity * dt)
        x = x + vx * dt
        y = y + vy * dt
        landed = y <= 0.0
        y = np.where(landed, 0.0, y)
        vy = np.where(landed & (vy < 0.0), 0.0, vy)
        return np.stack([x, y, vx, vy], axis=1)

    def in_wall(self, s):
        x, y = s[:, 0], s[:, 1]
        return (x >= self.wall_x) & (x <= self.wall_x + self.wall_width) & (y < self.wall_height)

    def running_cost(self, s, u):
        ur, uj = u[:, 0], u[:, 1]
        c = self.effort_weight * (ur * ur + uj * uj)
        return c + np.where(self.in_wall(s), self.collision_weight, 0.0)

    def terminal_cost(self, s):
        dx = s[:, 0] - self.goal_x
        vx, vy = s[:, 2], s[:, 3]
        return self.goal_weight * dx * dx + self.velocity_weight * (vx * vx + vy * vy)

    def fast_rollout_costs(self, x0, candidates, dt):
        return _rollout_costs_kernel(
            np.ascontiguousarray(x0, dtype=np.float64), candidates, float(dt),
            self.mass, self.gravity, self.thrust, self.impulse, self.friction,
            self.wall_x, self.wall_width, self.wall_height, self.goal_x,
            self.collision_weight, self.effort_weight, self.goal_weight, self.velocity_weight,
        )

    def is_success(self, states) -> bool:
        """Final position within tolerance of the goal and no wall contact on the way."""
        states = np.atleast_2d(states)
        return bool(abs(states[-1, 0] - self.goal_x) <= self.goal_tolerance
                    and not self.in_wall(states).any())


@dataclass(frozen=True)
class WallJumpLandscape:
    """One-shot launch version of the wall-jump task.

    A 1-D control ``u`` launches at 45 degrees with speed ``launch_speed * u``;
    a 2-D control ``(a, b)`` sets horizontal and vertical launch speeds
    ``launch_speed * a`` and ``launch_speed * b``. The mass stops where it
    lands. The goal sits on a ledge behind the wall: landing past ``ledge_x``
    falls off and costs as much as hitting the wall.

    The goal term saturates at ``goal_weight`` far from the goal, so standing
    still (``u = 0``) is a wide local optimum while the jump onto the ledge is a
    narrow global one. This is the asymmetric bimodal landscape the smoothing
    analysis is run on.
    """

    gravity: float = 9.81
    launch_speed: float = 4.0
    wall_x: float = 1.0
    wall_width: float = 0.15
    wall_height: float = 0.2
    goal_x: float = 1.6
    goal_radius: float = 0.1
    ledge_x: float = 1.8
    collision_weight: float = 50.0
    effort_weight: float = 0.1
    goal_weight: float = 1.0

    def launch(self, U):
        U = np.asarray(U, dtype=float)
        if U.shape[-1] == 1:
            speed = self.launch_speed * U[..., 0]
            vx = vy = speed / math.sqrt(2.0)
        elif U.shape[-1] == 2:
            vx = self.launch_speed * U[..., 0]
            vy = self.launch_speed * U[..., 1]
        else:
            raise ValueError("wall_jump_cost takes 1-D or 2-D controls")
        return np.maximum(vx, 0.0), np.maximum(vy, 0.0)

    def landing_x(self, U):
        vx, vy = self.launch(U)
        return 2.0 * vx * vy / self.gravity

    def collides(self, U):
        vx, vy = self.launch(U)
        x_land = 2.0 * vx * vy / self.gravity
        reaches = x_land >= self.wall_x
        with np.errstate(divide="ignore", invalid="ignore"):
            def height(x):
                t = x / vx
                return vy * t - 0.5 * self.gravity * t * t
            # concave arc: the lowest point over the wall band is at one of its edges
            y_lo = np.minimum(height(self.wall_x), height(self.wall_x + self.wall_width))
        clear = (x_land > self.wall_x + self.wall_width) & (y_lo >= self.wall_height)
        return reaches & ~clear

    def falls(self, U):
        return self.landing_x(U) > self.ledge_x

    def cost(self, U):
        U = np.asarray(U, dtype=float)
        dx = self.landing_x(U) - self.goal_x
        goal = self.goal_weight * (1.0 - np.exp(-0.5 * (dx / self.goal_radius) ** 2))
        effort = self.effort_weight * np.sum(U * U, axis=-1)
        penalty = np.where(self.collides(U) | self.falls(U), self.collision_weight, 0.0)
        return goal + effort + penalty

    def wall_clearance_control(self) -> float:
        """Smallest 1-D control whose flight reaches the wall."""
        return math.sqrt(self.wall_x * self.gravity) / self.launch_speed


def wall_jump_cost(U, task: WallJumpLandscape | None = None):
    return (task or WallJumpLandscape()).cost(U)


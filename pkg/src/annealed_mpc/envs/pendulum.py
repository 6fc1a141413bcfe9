"""Torque-limited pendulum swing-up. ``theta = 0`` hangs down, ``pi`` is upright.

Uses velocity-Verlet stepping so that the unforced, undamped pendulum keeps
its energy to second order in ``dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._accel import njit, prange
from ..core import DynamicsModel


@njit(cache=True)
def _accel(th, om, tau, g, length, mass, damping):
    return -(g / length) * math.sin(th) + tau / (mass * length * length) - damping * om


@njit(parallel=True, cache=True)
def _rollout_costs_kernel(x0, U, dt, g, length, mass, damping, w_angle, w_vel, r, w_final):
    n, L, _ = U.shape
    out = np.empty(n)
    for k in prange(n):
        th = x0[0]
        om = x0[1]
        tot = 0.0
        for h in range(L):
            tau = U[k, h, 0]
            tot += w_angle * (1.0 + math.cos(th)) + w_vel * om * om + r * tau * tau
            om_half = om + 0.5 * dt * _accel(th, om, tau, g, length, mass, damping)
            th = th + dt * om_half
            om = om_half + 0.5 * dt * _accel(th, om_half, tau, g, length, mass, damping)
        tot += w_final * (1.0 + math.cos(th)) + w_vel * om * om
        out[k] = tot if np.isfinite(tot) else np.inf
    return out


@dataclass(frozen=True)
class Pendulum(DynamicsModel):
    mass: float = 1.0
    length: float = 1.0
    gravity: float = 9.81
    damping: float = 0.0
    tau_max: float = 3.0
    w_angle: float = 1.0
    w_vel: float = 0.01
    r: float = 0.001
    w_final: float = 10.0
    theta0: float = 0.0
    omega0: float = 0.0
    dt: float = 0.02

    state_dim = 2
    action_dim = 1

    @property
    def action_low(self):
        return np.array([-self.tau_max])

    @property
    def action_high(self):
        return np.array([self.tau_max])

    def initial_state(self):
        return np.array([self.theta0, self.omega0])

    def _acc(self, th, om, tau):
        return (-(self.gravity / self.length) * np.sin(th)
                + tau / (self.mass * self.length * self.length) - self.damping * om)

    def step(self, x, u, dt):
        th, om, tau = x[:, 0], x[:, 1], u[:, 0]
        om_half = om + 0.5 * dt * self._acc(th, om, tau)
        th_new = th + dt * om_half
        om_new = om_half + 0.5 * dt * self._acc(th_new, om_half, tau)
        return np.stack([th_new, om_new], axis=1)

    def running_cost(self, x, u):
        th, om, tau = x[:, 0], x[:, 1], u[:, 0]
        return self.w_angle * (1.0 + np.cos(th)) + self.w_vel * om * om + self.r * tau * tau

    def terminal_cost(self, x):
        th, om = x[:, 0], x[:, 1]
        return self.w_final * (1.0 + np.cos(th)) + self.w_vel * om * om

    def energy(self, x):
        x = np.atleast_2d(x)
        th, om = x[:, 0], x[:, 1]
        m, l = self.mass, self.length
        return 0.5 * m * l * l * om * om - m * self.gravity * l * np.cos(th)

    def fast_rollout_costs(self, x0, candidates, dt):
        return _rollout_costs_kernel(
            np.ascontiguousarray(x0, dtype=np.float64), candidates, float(dt),
            self.gravity, self.length, self.mass, self.damping,
            self.w_angle, self.w_vel, self.r, self.w_final,
        )

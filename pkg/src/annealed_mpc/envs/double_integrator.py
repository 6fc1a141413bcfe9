"""Point mass with ``p'' = u`` and quadratic costs.

With ``episode_steps > 0`` the state carries a step counter; once it reaches
the episode length the state freezes and running costs vanish. A receding
horizon controller then solves the same finite-horizon problem at every
step, which is what the exhaustive grid oracle below also solves.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .._accel import njit, prange
from ..core import DynamicsModel


@njit(parallel=True, cache=True)
def _rollout_costs_kernel(x0, U, dt, qp, qv, r, wf, episode):
    n, L, _ = U.shape
    out = np.empty(n)
    for k in prange(n):
        p = x0[0]
        v = x0[1]
        step = x0[2] if episode > 0 else 0.0
        tot = 0.0
        for h in range(L):
            if episode > 0 and step >= episode:
                break
            u = U[k, h, 0]
            tot += qp * p * p + qv * v * v + r * u * u
            v = v + u * dt
            p = p + v * dt
            step += 1.0
        tot += wf * (p * p + v * v)
        out[k] = tot if np.isfinite(tot) else np.inf
    return out


@dataclass(frozen=True)
class DoubleIntegrator(DynamicsModel):
    q_pos: float = 1.0
    q_vel: float = 0.1
    r: float = 0.1
    w_terminal: float = 10.0
    u_max: float = 2.0
    x0_pos: float = 1.0
    x0_vel: float = 0.0
    episode_steps: int = 0
    dt: float = 0.1

    action_dim = 1

    @property
    def state_dim(self):
        return 3 if self.episode_steps > 0 else 2

    @property
    def action_low(self):
        return np.array([-self.u_max])

    @property
    def action_high(self):
        return np.array([self.u_max])

    def initial_state(self):
        x = [self.x0_pos, self.x0_vel]
        return np.array(x + [0.0] if self.episode_steps > 0 else x)

    def _active(self, x):
        if self.episode_steps <= 0:
            return np.ones(x.shape[0], dtype=bool)
        return x[:, 2] < self.episode_steps

    def step(self, x, u, dt):
        p, v = x[:, 0], x[:, 1]
        v_new = v + u[:, 0] * dt
        p_new = p + v_new * dt
        if self.episode_steps <= 0:
            return np.stack([p_new, v_new], axis=1)
        act = self._active(x)
        return np.stack([
            np.where(act, p_new, p),
            np.where(act, v_new, v),
            np.where(act, x[:, 2] + 1.0, x[:, 2]),
        ], axis=1)

    def running_cost(self, x, u):
        p, v, a = x[:, 0], x[:, 1], u[:, 0]
        c = self.q_pos * p * p + self.q_vel * v * v + self.r * a * a
        return np.where(self._active(x), c, 0.0)

    def terminal_cost(self, x):
        p, v = x[:, 0], x[:, 1]
        return self.w_terminal * (p * p + v * v)

    def fast_rollout_costs(self, x0, candidates, dt):
        return _rollout_costs_kernel(
            np.ascontiguousarray(x0, dtype=np.float64), candidates, float(dt),
            self.q_pos, self.q_vel, self.r, self.w_terminal, float(self.episode_steps),
        )


def grid_dp_optimum(model: DoubleIntegrator, x0, n_steps: int,
                    p_range=(-2.0, 2.0), v_range=(-3.0, 3.0),
                    n_p: int = 201, n_v: int = 201, n_u: int = 201):
    """Optimal cost of the ``n_steps`` problem by dynamic programming on a grid.

    Value functions live on an ``n_p x n_v`` state grid (bilinear
    interpolation, linear extrapolation off-grid); actions are searched
    exhaustively over ``n_u`` evenly spaced values in the bounds. Returns
    ``(cost, first_action)``.
    """
    ps = np.linspace(*p_range, n_p)
    vs = np.linspace(*v_range, n_v)
    us = np.linspace(-model.u_max, model.u_max, n_u)
    dt = model.dt
    P, V = np.meshgrid(ps, vs, indexing="ij")
    value = model.w_terminal * (P * P + V * V)

    def q_values(p, v, val):
        interp = RegularGridInterpolator((ps, vs), val, bounds_error=False, fill_value=None)
        a = us[None, :]
        v_next = v[:, None] + a * dt
        p_next = p[:, None] + v_next * dt
        run = model.q_pos * p[:, None] ** 2 + model.q_vel * v[:, None] ** 2 + model.r * a * a
        nxt = interp(np.stack([p_next.ravel(), v_next.ravel()], axis=1)).reshape(p_next.shape)
        return run + nxt

    flat_p, flat_v = P.ravel(), V.ravel()
    for _ in range(n_steps - 1):
        q = np.empty((flat_p.size, n_u))
        for s in range(0, flat_p.size, 4096):
            q[s:s + 4096] = q_values(flat_p[s:s + 4096], flat_v[s:s + 4096], value)
        value = q.min(axis=1).reshape(P.shape)
    q0 = q_values(np.array([x0[0]], float), np.array([x0[1]], float), value)[0]
    j = int(np.argmin(q0))
    return float(q0[j]), float(us[j])


def riccati_optimum(model: DoubleIntegrator, x0, n_steps: int) -> float:
    """Unconstrained finite-horizon LQR cost; a cross-check for the grid oracle."""
    dt = model.dt
    A = np.array([[1.0, dt], [0.0, 1.0]])
    B = np.array([[dt * dt], [dt]])
    Q = np.diag([model.q_pos, model.q_vel])
    R = np.array([[model.r]])
    P = model.w_terminal * np.eye(2)
    for _ in range(n_steps):
        K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        P = Q + A.T @ P @ (A - B @ K)
    x = np.asarray(x0[:2], dtype=float)
    return float(x @ P @ x)

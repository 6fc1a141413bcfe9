"""Planar one-legged hopper on a penalty ground, scored by staged pad contacts.

Generalized coordinates are ``(x, z, phi, l)``: base position, hip angle
from vertical and leg length. The base carries ``body_mass``; a point foot
of ``foot_mass`` sits at ``(x + l sin phi, z - l cos phi)``. Both joints are
torque driven through ``damped_torque``. Ground contact is a spring-damper
on foot penetration with tangential viscous friction capped at ``mu * Fn``.

The state vector is ``(x, z, phi, l, vx, vz, vphi, vl, k)`` where ``k`` is
the control-step counter that drives the pad schedule.

The upright, base-height and energy terms are planar stand-ins for the
quadruped reward terms of the same names, not reproductions of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .._accel import njit, prange
from ..core import DynamicsModel
from .contact import JOINT_DAMPING, Pad, check_pads, staged_contact_reward

CONTACT_EPS = 0.005  # m of foot height still counted as touching


def random_pads(seed: int, n_stages: int = 10, stage_duration: float = 1.0,
                max_offset: float = 0.325, radius: float = 0.1, start: float = 0.0):
    """Pad sequence whose successive centers differ by U(-max_offset, max_offset)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xC0,)))
    centers = start + np.cumsum(rng.uniform(-max_offset, max_offset, n_stages))
    return tuple(
        Pad(float(c), radius, j * stage_duration, (j + 1) * stage_duration)
        for j, c in enumerate(centers)
    )


def default_pads():
    return tuple(Pad(0.25 * j, 0.1, float(j), float(j + 1)) for j in range(10))


@njit(cache=True)
def _substep(q, qd, tau, f_leg, h, M, m, inertia, g, l_rest, k_leg, l_min, l_max, k_stop,
             k_ground, c_ground, mu, d):
    x, z, phi, l = q[0], q[1], q[2], q[3]
    vx, vz, vphi, vl = qd[0], qd[1], qd[2], qd[3]
    s = math.sin(phi)
    c = math.cos(phi)
    fz = z - l * c
    fvx = vx + vl * s + l * vphi * c
    fvz = vz - vl * c + l * vphi * s
    Fn = 0.0
    Ft = 0.0
    if fz < 0.0:
        Fn = -k_ground * fz - c_ground * fvz
        if Fn < 0.0:
            Fn = 0.0
        Ft = -c_ground * fvx
        cap = mu * Fn
        if Ft > cap:
            Ft = cap
        elif Ft < -cap:
            Ft = -cap
    f_spring = -k_leg * (l - l_rest)
    if l > l_max:
        f_spring -= k_stop * (l - l_max)
    elif l < l_min:
        f_spring += k_stop * (l_min - l)
    tau_eff = tau - d * vphi
    f_eff = f_leg - d * vl
    a1 = 2.0 * vl * vphi * c - l * vphi * vphi * s
    a2 = 2.0 * vl * vphi * s + l * vphi * vphi * c
    A = np.empty((4, 4))
    A[0, 0] = M + m
    A[0, 1] = 0.0
    A[0, 2] = m * l * c
    A[0, 3] = m * s
    A[1, 0] = 0.0
    A[1, 1] = M + m
    A[1, 2] = m * l * s
    A[1, 3] = -m * c
    A[2, 0] = m * l * c
    A[2, 1] = m * l * s
    A[2, 2] = m * l * l + inertia
    A[2, 3] = 0.0
    A[3, 0] = m * s
    A[3, 1] = -m * c
    A[3, 2] = 0.0
    A[3, 3] = m
    b = np.empty(4)
    b[0] = Ft - m * a1
    b[1] = Fn - (M + m) * g - m * a2
    b[2] = l * (c * Ft + s * Fn) - m * g * l * s + tau_eff - m * 2.0 * l * vl * vphi
    b[3] = s * Ft - c * Fn + m * g * c + f_eff + f_spring + m * l * vphi * vphi
    acc = np.linalg.solve(A, b)
    for j in range(4):
        qd[j] = qd[j] + h * acc[j]
    for j in range(4):
        q[j] = q[j] + h * qd[j]


@njit(cache=True)
def _stage_of(time, t_min, t_max):
    n = t_min.shape[0]
    for j in range(n):
        if time < t_max[j]:
            return j
    return n - 1


@njit(cache=True)
def _contact_reward(foot_x, touching, j, centers, radii, w_correct, w_wrong):
    if not touching:
        return 0.0
    if abs(foot_x - centers[j]) <= radii[j]:
        return w_correct
    if j > 0 and abs(foot_x - centers[j - 1]) <= radii[j - 1]:
        return 0.0
    return -w_wrong


@njit(parallel=True, cache=True)
def _rollout_costs_kernel(x0, U, dt, substeps, M, m, inertia, g, l_rest, k_leg, l_min, l_max,
                          k_stop, k_ground, c_ground, mu, d, tau_max, f_max,
                          centers, radii, t_min, t_max, w_correct, w_wrong, contact_gain,
                          w_com, w_height, z_ref, w_upright, w_energy):
    n, L, _ = U.shape
    out = np.empty(n)
    h = dt / substeps
    for k in prange(n):
        q = x0[0:4].copy()
        qd = x0[4:8].copy()
        step = x0[8]
        tot = 0.0
        for hh in range(L):
            tau = U[k, hh, 0]
            fl = U[k, hh, 1]
            j = _stage_of(step * dt, t_min, t_max)
            foot_x = q[0] + q[3] * math.sin(q[2])
            foot_z = q[1] - q[3] * math.cos(q[2])
            r = _contact_reward(foot_x, foot_z < CONTACT_EPS, j, centers, radii, w_correct, w_wrong)
            ex = q[0] - centers[j]
            ez = q[1] - z_ref
            power = abs((tau - d * qd[2]) * qd[2]) + abs((fl - d * qd[3]) * qd[3])
            tot += (-contact_gain * r + w_com * ex * ex + w_height * ez * ez
                    + w_upright * q[2] * q[2] + w_energy * power)
            for _ in range(substeps):
                _substep(q, qd, tau, fl, h, M, m, inertia, g, l_rest, k_leg, l_min, l_max,
                         k_stop, k_ground, c_ground, mu, d)
            step += 1.0
        j = _stage_of(step * dt, t_min, t_max)
        ex = q[0] - centers[j]
        ez = q[1] - z_ref
        tot += w_com * ex * ex + w_height * ez * ez
        out[k] = tot if np.isfinite(tot) else np.inf
    return out


@dataclass(frozen=True)
class Hopper(DynamicsModel):
    body_mass: float = 2.0
    foot_mass: float = 0.2
    hip_inertia: float = 0.02
    gravity: float = 9.81
    leg_rest: float = 0.3
    leg_stiffness: float = 300.0
    leg_min: float = 0.15
    leg_max: float = 0.4
    stop_stiffness: float = 2000.0
    ground_stiffness: float = 4000.0
    ground_damping: float = 20.0
    friction: float = 0.8
    joint_damping: float = JOINT_DAMPING
    tau_max: float = 5.0
    force_max: float = 60.0
    pads: Tuple[Pad, ...] = field(default_factory=default_pads)
    w_correct: float = 0.1
    w_wrong: float = 0.1
    contact_gain: float = 10.0
    w_com: float = 1.0
    w_height: float = 1.0
    z_ref: float = 0.3
    w_upright: float = 1.0
    w_energy: float = 0.001
    substeps: int = 4
    dt: float = 0.02

    state_dim = 9
    action_dim = 2

    def __post_init__(self):
        if not self.pads:
            raise ValueError("hopper needs at least one pad")
        check_pads(self.pads)

    @property
    def action_low(self):
        return np.array([-self.tau_max, -self.force_max])

    @property
    def action_high(self):
        return np.array([self.tau_max, self.force_max])

    def initial_state(self):
        # foot just touching the ground at the first pad
        x0 = self.pads[0].center
        return np.array([x0, self.leg_rest, 0.0, self.leg_rest, 0.0, 0.0, 0.0, 0.0, 0.0])

    def _pad_arrays(self):
        return (np.array([p.center for p in self.pads], dtype=float),
                np.array([p.radius for p in self.pads], dtype=float),
                np.array([p.t_min for p in self.pads], dtype=float),
                np.array([p.t_max for p in self.pads], dtype=float))

    def stage_index(self, time):
        _, _, _, t_max = self._pad_arrays()
        return np.minimum(np.searchsorted(t_max, time, side="right"), len(self.pads) - 1)

    def foot(self, s):
        s = np.atleast_2d(s)
        x, z, phi, l = s[:, 0], s[:, 1], s[:, 2], s[:, 3]
        return x + l * np.sin(phi), z - l * np.cos(phi)

    def contact_reward(self, s) -> np.ndarray:
        """Staged contact score of each state (one foot)."""
        s = np.atleast_2d(s)
        fx, fz = self.foot(s)
        stages = self.stage_index(s[:, 8] * self.dt)
        return np.array([
            staged_contact_reward([fz[b] < CONTACT_EPS], [fx[b]], int(stages[b]), self.pads,
                                  self.w_correct, self.w_wrong)
            for b in range(s.shape[0])
        ])

    def _accel(self, q, qd, tau, f_leg):
        x, z, phi, l = q.T
        vx, vz, vphi, vl = qd.T
        M, m, g = self.body_mass, self.foot_mass, self.gravity
        s, c = np.sin(phi), np.cos(phi)
        fz = z - l * c
        fvx = vx + vl * s + l * vphi * c
        fvz = vz - vl * c + l * vphi * s
        pen = fz < 0.0
        Fn = np.where(pen, np.maximum(-self.ground_stiffness * fz - self.ground_damping * fvz, 0.0), 0.0)
        cap = self.friction * Fn
        Ft = np.where(pen, np.clip(-self.ground_damping * fvx, -cap, cap), 0.0)
        f_spring = -self.leg_stiffness * (l - self.leg_rest)
        f_spring = np.where(l > self.leg_max, f_spring - self.stop_stiffness * (l - self.leg_max), f_spring)
        f_spring = np.where(l < self.leg_min, f_spring + self.stop_stiffness * (self.leg_min - l), f_spring)
        d = self.joint_damping
        tau_eff = tau - d * vphi
        f_eff = f_leg - d * vl
        a1 = 2.0 * vl * vphi * c - l * vphi * vphi * s
        a2 = 2.0 * vl * vphi * s + l * vphi * vphi * c
        n = q.shape[0]
        A = np.zeros((n, 4, 4))
        A[:, 0, 0] = M + m
        A[:, 0, 2] = m * l * c
        A[:, 0, 3] = m * s
        A[:, 1, 1] = M + m
        A[:, 1, 2] = m * l * s
        A[:, 1, 3] = -m * c
        A[:, 2, 0] = m * l * c
        A[:, 2, 1] = m * l * s
        A[:, 2, 2] = m * l * l + self.hip_inertia
        A[:, 3, 0] = m * s
        A[:, 3, 1] = -m * c
        A[:, 3, 3] = m
        b = np.stack([
            Ft - m * a1,
            Fn - (M + m) * g - m * a2,
            l * (c * Ft + s * Fn) - m * g * l * s + tau_eff - m * 2.0 * l * vl * vphi,
            s * Ft - c * Fn + m * g * c + f_eff + f_spring + m * l * vphi * vphi,
        ], axis=1)
        return np.linalg.solve(A, b[:, :, None])[:, :, 0]

    def step(self, s, u, dt):
        q = s[:, 0:4].copy()
        qd = s[:, 4:8].copy()
        h = dt / self.substeps
        for _ in range(self.substeps):
            qd = qd + h * self._accel(q, qd, u[:, 0], u[:, 1])
            q = q + h * qd
        return np.concatenate([q, qd, s[:, 8:9] + 1.0], axis=1)

    def running_cost(self, s, u):
        centers, _, _, _ = self._pad_arrays()
        j = self.stage_index(s[:, 8] * self.dt)
        d = self.joint_damping
        power = (np.abs((u[:, 0] - d * s[:, 6]) * s[:, 6])
                 + np.abs((u[:, 1] - d * s[:, 7]) * s[:, 7]))
        ex = s[:, 0] - centers[j]
        ez = s[:, 1] - self.z_ref
        return (-self.contact_gain * self.contact_reward(s) + self.w_com * ex * ex
                + self.w_height * ez * ez + self.w_upright * s[:, 2] * s[:, 2]
                + self.w_energy * power)

    def terminal_cost(self, s):
        centers, _, _, _ = self._pad_arrays()
        j = self.stage_index(s[:, 8] * self.dt)
        ex = s[:, 0] - centers[j]
        ez = s[:, 1] - self.z_ref
        return self.w_com * ex * ex + self.w_height * ez * ez

    def fast_rollout_costs(self, x0, candidates, dt):
        centers, radii, t_min, t_max = self._pad_arrays()
        return _rollout_costs_kernel(
            np.ascontiguousarray(x0, dtype=np.float64), candidates, float(dt), int(self.substeps),
            self.body_mass, self.foot_mass, self.hip_inertia, self.gravity, self.leg_rest,
            self.leg_stiffness, self.leg_min, self.leg_max, self.stop_stiffness,
            self.ground_stiffness, self.ground_damping, self.friction, self.joint_damping,
            self.tau_max, self.force_max, centers, radii, t_min, t_max,
            self.w_correct, self.w_wrong, self.contact_gain, self.w_com, self.w_height,
            self.z_ref, self.w_upright, self.w_energy,
        )

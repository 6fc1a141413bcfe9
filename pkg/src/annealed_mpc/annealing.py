"""Noise-schedule algebra for dual-loop annealing.

Stage ``i`` runs from ``N`` (widest kernel, used first) down to 1. Horizon
offset ``h`` runs from 0 (next action) to ``H`` (farthest action). The
per-entry variance is

    sigma_base**2 * exp(-(N - i) / (beta1 * N) - (H - h) / (beta2 * H))

which shrinks across stages (trajectory level) and grows along the
horizon (action level). ``beta = inf`` switches the corresponding term off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    n_iters: int  # N, annealing iterations per control step
    horizon: int  # H; plans have H + 1 rows
    action_dim: int
    beta1: float
    beta2: float
    sigma_base: float

    def __post_init__(self):
        if self.n_iters < 1 or self.horizon < 1 or self.action_dim < 1:
            raise ValueError("n_iters, horizon and action_dim must be >= 1")
        if not (self.beta1 > 0 and self.beta2 > 0):
            raise ValueError("beta1 and beta2 must be positive")
        if not self.sigma_base > 0:
            raise ValueError("sigma_base must be positive")


def _check_stage(i, n):
    if not 1 <= i <= n:
        raise IndexError(f"stage index {i} outside 1..{n}")


def exp_schedule(i: int, n: int, beta: float, d: int) -> float:
    """Determinant of the stage-``i`` kernel under the generic exponential schedule."""
    _check_stage(i, n)
    return math.exp(-((n - i) / (beta * n)) * d)


def log_variance_factor(i: int, h: int, sched: NoiseSchedule) -> float:
    _check_stage(i, sched.n_iters)
    if not 0 <= h <= sched.horizon:
        raise IndexError(f"horizon offset {h} outside 0..{sched.horizon}")
    n, H = sched.n_iters, sched.horizon
    return -(n - i) / (sched.beta1 * n) - (H - h) / (sched.beta2 * H)


def kernel_sigma(i: int, h: int, sched: NoiseSchedule) -> float:
    """Per-dimension standard deviation of the isotropic kernel at (stage, offset)."""
    return sched.sigma_base * math.sqrt(math.exp(log_variance_factor(i, h, sched)))


def trajectory_kernel(i: int, sched: NoiseSchedule) -> np.ndarray:
    """(H + 1, d_u) standard deviations for stage ``i``, one row per offset."""
    _check_stage(i, sched.n_iters)
    col = np.array([kernel_sigma(i, h, sched) for h in range(sched.horizon + 1)])
    return np.repeat(col[:, None], sched.action_dim, axis=1)


def trajectory_log_det(i: int, sched: NoiseSchedule) -> float:
    """log det of the block-diagonal trajectory covariance at stage ``i``."""
    sig = trajectory_kernel(i, sched)
    return float(np.sum(2.0 * np.log(sig)))

"""Problem types and the rollout engine shared by every solver.

A control plan is an ``(L, d_u)`` float array; the controllers in this package
use ``L = H + 1`` rows (offsets ``0..H``), but the engine accepts any ``L >= 1``.

Models work on batches: ``step`` maps ``(B, d_x), (B, d_u)`` to ``(B, d_x)``
and the cost callables return ``(B,)`` arrays. A model may additionally
expose ``fast_rollout_costs(x0, candidates, dt)`` backed by a compiled kernel;
``rollout_batch`` prefers it when the numba backend is active.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _accel


class DivergenceError(FloatingPointError):
    """A rollout produced a non-finite state or cost."""

    def __init__(self, step: int, what: str):
        super().__init__(f"rollout diverged at step {step}: non-finite {what}")
        self.step = step
        self.what = what


class DynamicsModel:
    """Base class for environments.

    Subclasses are frozen dataclasses and must define ``state_dim``,
    ``action_dim``, ``action_low``/``action_high`` and the three batched
    callables. Stepping must be deterministic and free of side effects.
    """

    state_dim: int
    action_dim: int
    dt: float = 0.02

    @property
    def action_low(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def action_high(self) -> np.ndarray:
        raise NotImplementedError

    def initial_state(self) -> np.ndarray:
        raise NotImplementedError

    def step(self, x: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
        raise NotImplementedError

    def running_cost(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def terminal_cost(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    fast_rollout_costs = None

    def clamp(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.action_low, self.action_high)

    # parameter plumbing used by the bench mismatch protocol
    def params(self) -> dict:
        return {
            f.name: getattr(self, f.name)
            for f in dataclasses.fields(self)  # type: ignore[arg-type]
        }

    def with_params(self, **overrides) -> "DynamicsModel":
        known = {f.name for f in dataclasses.fields(self)}  # type: ignore[arg-type]
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown model parameter(s): {sorted(unknown)}")
        return dataclasses.replace(self, **overrides)  # type: ignore[type-var]

    def checksum(self) -> str:
        payload = json.dumps(_jsonable(self.params()), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, float)):
        return repr(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


@dataclass
class RolloutResult:
    total_cost: float
    state_trace: Optional[np.ndarray] = None  # (L+1, d_x)
    per_step_costs: Optional[np.ndarray] = None  # (L+1,), last entry is the terminal cost


def as_controls(model: DynamicsModel, U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim == 1 and model.action_dim == 1:
        U = U[:, None]
    if U.ndim != 2 or U.shape[1] != model.action_dim or U.shape[0] < 1:
        raise ValueError(
            f"control sequence must have shape (L>=1, {model.action_dim}), got {U.shape}"
        )
    if not np.all(np.isfinite(U)):
        raise ValueError("control sequence contains non-finite entries")
    return U


def rollout(model: DynamicsModel, x0, U, dt: Optional[float] = None,
            record_trace: bool = False) -> RolloutResult:
    """Roll one plan out and return J = sum of running costs + terminal cost.

    Raises ``DivergenceError`` naming the step if anything goes non-finite.
    """
    dt = model.dt if dt is None else dt
    U = model.clamp(as_controls(model, U))
    x = np.asarray(x0, dtype=float).reshape(1, -1)
    if x.shape[1] != model.state_dim or not np.all(np.isfinite(x)):
        raise ValueError("x0 must be a finite state of the model's dimension")

    L = U.shape[0]
    costs = np.empty(L + 1)
    trace = np.empty((L + 1, model.state_dim)) if record_trace else None
    if record_trace:
        trace[0] = x[0]
    total = 0.0
    for h in range(L):
        u = U[h:h + 1]
        c = float(model.running_cost(x, u)[0])
        if not np.isfinite(c):
            raise DivergenceError(h, "running cost")
        x = model.step(x, u, dt)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(h, "state")
        costs[h] = c
        total += c
        if record_trace:
            trace[h + 1] = x[0]
    cf = float(model.terminal_cost(x)[0])
    if not np.isfinite(cf):
        raise DivergenceError(L, "terminal cost")
    costs[L] = cf
    total += cf
    if not record_trace:
        return RolloutResult(total)
    return RolloutResult(total, trace, costs)


def _rollout_batch_numpy(model, x0, candidates, dt):
    n = candidates.shape[0]
    x = np.repeat(np.asarray(x0, dtype=float).reshape(1, -1), n, axis=0)
    total = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    with np.errstate(all="ignore"):
        for h in range(candidates.shape[1]):
            u = candidates[:, h, :]
            c = model.running_cost(x, u)
            x_next = model.step(x, u, dt)
            ok = np.isfinite(c) & np.all(np.isfinite(x_next), axis=1)
            alive &= ok
            total = total + np.where(alive, c, 0.0)
            # freeze dead candidates so they stop producing warnings/NaNs
            x = np.where(alive[:, None], x_next, x)
        cf = model.terminal_cost(x)
    alive &= np.isfinite(cf)
    total = total + np.where(alive, cf, 0.0)
    total[~alive] = np.inf
    return total


def rollout_batch(model: DynamicsModel, x0, candidates, dt: Optional[float] = None) -> np.ndarray:
    """Costs of ``N_W`` candidate plans from a shared start state.

    Divergent candidates get ``+inf`` instead of aborting the batch. Every
    candidate is evaluated independently, so the result does not depend on
    order or thread count.
    """
    dt = model.dt if dt is None else dt
    cand = np.asarray(candidates, dtype=float)
    if cand.ndim != 3 or cand.shape[2] != model.action_dim:
        raise ValueError(f"candidates must be (N_W, L, {model.action_dim}), got {cand.shape}")
    cand = np.ascontiguousarray(model.clamp(cand))
    x0 = np.asarray(x0, dtype=float)
    if _accel.USE_NUMBA and model.fast_rollout_costs is not None:
        return model.fast_rollout_costs(x0, cand, dt)
    return _rollout_batch_numpy(model, x0, cand, dt)

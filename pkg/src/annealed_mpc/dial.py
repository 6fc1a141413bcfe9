"""Receding-horizon annealed MPPI controller (dual-loop annealing).

Each control step runs ``N`` MPPI updates with stage kernels ``i = N .. 1``,
applies the first action of the plan, and shifts the plan by one step. The
fixed-kernel MPPI baseline reuses the same machinery with a constant kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .annealing import NoiseSchedule, trajectory_kernel
from .core import DynamicsModel, rollout_batch
from .sampler import (
    NoValidSampleError,
    PerturbationBatch,
    RngStream,
    SamplerParams,
    mppi_update,
    sample_perturbations,
    softmax_weights,
)

INTERP_KINDS = ("linear", "cubic")


@dataclass(frozen=True)
class DialConfig:
    sched: NoiseSchedule
    temperature: float
    n_samples: int
    dt: float = 0.02
    node_count: Optional[int] = None
    interp: str = "linear"
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.node_count is not None and not 2 <= self.node_count <= self.sched.horizon:
            raise ValueError("node_count must satisfy 2 <= node_count <= H")
        if self.interp not in INTERP_KINDS:
            raise ValueError(f"interp must be one of {INTERP_KINDS}")

    @property
    def horizon_seconds(self) -> float:
        return self.sched.horizon * self.dt

    @property
    def rollouts_per_step(self) -> int:
        return self.sched.n_iters * self.n_samples


@dataclass
class StageRecord:
    t: int
    stage: int
    best_cost: float
    weight_entropy: float
    valid: bool = True


@dataclass
class StepRecord:
    t: int
    action: np.ndarray
    stages: List[StageRecord]
    flagged: bool = False
    applied_update_count: int = 0

    @property
    def plan_cost(self) -> float:
        """Best sampled cost of the final (narrowest) stage."""
        return self.stages[-1].best_cost if self.stages else math.nan


@dataclass
class ControllerState:
    U: np.ndarray  # plan rows (or node values in node mode)
    t: int = 0
    update_counts: Optional[np.ndarray] = None
    last: Optional[StepRecord] = None

    def copy(self) -> "ControllerState":
        return ControllerState(
            self.U.copy(), self.t,
            None if self.update_counts is None else self.update_counts.copy(),
            self.last,
        )


def shift(U) -> np.ndarray:
    """Drop the first row and replicate the last one into the freed tail slot."""
    U = np.asarray(U)
    if U.shape[0] < 1:
        raise ValueError("cannot shift an empty plan")
    return np.concatenate([U[1:], U[-1:]], axis=0)


def _interp_at(nodes: np.ndarray, pos: np.ndarray, kind: str) -> np.ndarray:
    # nodes: (..., n, d); pos: fractional node indices in [0, n-1]
    n = nodes.shape[-2]
    pos = np.clip(pos, 0.0, n - 1)
    i0 = np.minimum(np.floor(pos).astype(int), n - 1)
    f = (pos - i0)[:, None]
    p1 = nodes[..., i0, :]
    p2 = nodes[..., np.minimum(i0 + 1, n - 1), :]
    if kind == "linear":
        return (1.0 - f) * p1 + f * p2
    # Catmull-Rom with clamped end points
    p0 = nodes[..., np.maximum(i0 - 1, 0), :]
    p3 = nodes[..., np.minimum(i0 + 2, n - 1), :]
    f2, f3 = f * f, f * f * f
    return 0.5 * (
        2.0 * p1
        + (p2 - p0) * f
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * f2
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * f3
    )


def node_positions(node_count: int, n_out: int) -> np.ndarray:
    return np.linspace(0.0, node_count - 1, n_out)


def nodes_to_controls(node_values, n_out: int, kind: str = "linear") -> np.ndarray:
    """Interpolate equally spaced nodes onto ``n_out`` equally spaced control steps.

    Works on a single ``(n, d)`` node array or a batch ``(B, n, d)``; exact at
    the nodes for both interpolation kinds.
    """
    nodes = np.asarray(node_values, dtype=float)
    if nodes.shape[-2] < 2:
        raise ValueError("need at least two nodes")
    return _interp_at(nodes, node_positions(nodes.shape[-2], n_out), kind)


def shift_nodes(nodes, n_out: int, kind: str = "linear") -> np.ndarray:
    """Advance a node plan by one control step, holding the last value."""
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.shape[-2]
    advance = (n - 1) / (n_out - 1)  # one control step in node-index units
    return _interp_at(nodes, np.arange(n) + advance, kind)


class AnnealedMppi:
    """Shared receding-horizon loop; subclasses supply the stage kernel."""

    def __init__(self, model: DynamicsModel, n_iters: int, n_samples: int,
                 temperature: float, horizon: int, dt: float, seed: int = 0,
                 node_count: Optional[int] = None, interp: str = "linear"):
        if n_iters < 1 or n_samples < 1 or horizon < 1:
            raise ValueError("n_iters, n_samples and horizon must be >= 1")
        self.model = model
        self.n_iters = n_iters
        self.n_samples = n_samples
        self.temperature = temperature
        self.horizon = horizon
        self.dt = dt
        self.seed = seed
        self.node_count = node_count
        self.interp = interp
        self.rollouts = 0

    @property
    def plan_length(self) -> int:
        return self.horizon + 1

    @property
    def rollouts_per_step(self) -> int:
        return self.n_iters * self.n_samples

    def stage_sigma(self, i: int) -> np.ndarray:
        """(H + 1, d_u) standard deviations for stage ``i``."""
        raise NotImplementedError

    def _param_sigma(self, i: int) -> np.ndarray:
        sig = self.stage_sigma(i)
        if self.node_count is None:
            return sig
        # node j sits at control offset round(j * H / (n - 1))
        offsets = np.rint(np.linspace(0, self.horizon, self.node_count)).astype(int)
        return sig[offsets]

    def controls(self, U) -> np.ndarray:
        if self.node_count is None:
            return np.asarray(U)
        return nodes_to_controls(U, self.plan_length, self.interp)

    def init_state(self) -> ControllerState:
        rows = self.plan_length if self.node_count is None else self.node_count
        U = self.model.clamp(np.zeros((rows, self.model.action_dim)))
        return ControllerState(U, 0, np.zeros(rows, dtype=np.int64))

    def anneal_step(self, x0, U, i: int, rng: RngStream):
        """One MPPI update of ``U`` under the stage-``i`` kernel.

        Returns the clamped updated plan and a StageRecord. Raises
        NoValidSampleError if every candidate diverged.
        """
        sigma = self._param_sigma(i)
        params = SamplerParams(self.temperature, sigma)
        batch = sample_perturbations(params, self.n_samples, rng)
        cand = self.controls(U[None] + batch.noises)
        costs = rollout_batch(self.model, x0, cand, self.dt)
        self.rollouts += self.n_samples
        batch = PerturbationBatch(batch.noises, costs)
        w = softmax_weights(costs, self.temperature)  # raises on all-inf
        nz = w[w > 0]
        rec = StageRecord(rng.t, i, float(np.min(costs)), float(-(nz * np.log(nz)).sum()))
        U_new = self.model.clamp(mppi_update(U, batch, self.temperature))
        return U_new, rec

    def control_step(self, x_measured, state: ControllerState):
        """Optimize, emit the first action, shift. Returns (action, new state)."""
        U = state.U.copy()
        counts = state.update_counts.copy()
        root = RngStream(self.seed)
        stages = []
        any_valid = False
        for i in range(self.n_iters, 0, -1):
            try:
                U, rec = self.anneal_step(x_measured, U, i, root.at(state.t, i))
            except NoValidSampleError:
                stages.append(StageRecord(state.t, i, math.inf, math.nan, valid=False))
                continue
            any_valid = True
            counts += 1
            stages.append(rec)
        action = self.model.clamp(self.controls(U)[0])
        record = StepRecord(state.t, action.copy(), stages, flagged=not any_valid,
                            applied_update_count=int(counts[0]))
        if self.node_count is None:
            U_next = shift(U)
        else:
            U_next = self.model.clamp(shift_nodes(U, self.plan_length, self.interp))
        counts_next = np.concatenate([counts[1:], [0]])
        return action, ControllerState(U_next, state.t + 1, counts_next, record)


class DialController(AnnealedMppi):
    def __init__(self, model: DynamicsModel, cfg: DialConfig):
        if cfg.sched.action_dim != model.action_dim:
            raise ValueError("schedule action_dim does not match the model")
        super().__init__(model, cfg.sched.n_iters, cfg.n_samples, cfg.temperature,
                         cfg.sched.horizon, cfg.dt, cfg.seed, cfg.node_count, cfg.interp)
        self.cfg = cfg

    def stage_sigma(self, i: int) -> np.ndarray:
        return trajectory_kernel(i, self.cfg.sched)


def anneal_step(model: DynamicsModel, x0, U, i: int, cfg: DialConfig, rng: RngStream) -> np.ndarray:
    """Functional form of a single DIAL stage update."""
    U_new, _ = DialController(model, cfg).anneal_step(x0, np.asarray(U, dtype=float), i, rng)
    return U_new


def control_step(model: DynamicsModel, x_measured, state: ControllerState, cfg: DialConfig):
    return DialController(model, cfg).control_step(x_measured, state)


def run_episode(controller: AnnealedMppi, env: DynamicsModel, x0, steps: int):
    """Closed loop: the controller plans on its own model, ``env`` is stepped for real."""
    state = controller.init_state()
    x = np.asarray(x0, dtype=float)
    xs = [x.copy()]
    actions, records = [], []
    for _ in range(steps):
        u, state = controller.control_step(x, state)
        x = env.step(x[None], env.clamp(u)[None], controller.dt)[0]
        xs.append(x.copy())
        actions.append(u)
        records.append(state.last)
    return np.array(xs), np.array(actions), records

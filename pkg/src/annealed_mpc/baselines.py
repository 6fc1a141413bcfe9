"""Equal-budget comparison solvers: fixed-kernel MPPI and a CMA-ES planner."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DynamicsModel, rollout_batch
from .dial import AnnealedMppi, ControllerState, StageRecord, StepRecord, shift
from .sampler import RngStream

MPPI_PRESETS = {"explore": 0.2, "exploit": 0.05}


@dataclass(frozen=True)
class FixedMppiConfig:
    sigma: float
    temperature: float
    n_samples: int
    iterations: int = 1  # M; set M = N to match an N-stage annealed budget
    horizon: int = 20
    dt: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.iterations < 1 or self.n_samples < 1:
            raise ValueError("iterations and n_samples must be >= 1")

    @classmethod
    def preset(cls, name: str, **kw) -> "FixedMppiConfig":
        return cls(sigma=MPPI_PRESETS[name], **kw)

    @property
    def rollouts_per_step(self) -> int:
        return self.iterations * self.n_samples


class MppiController(AnnealedMppi):
    """Vanilla MPPI: the same kernel for every iteration and horizon offset."""

    def __init__(self, model: DynamicsModel, cfg: FixedMppiConfig):
        super().__init__(model, cfg.iterations, cfg.n_samples, cfg.temperature,
                         cfg.horizon, cfg.dt, cfg.seed)
        self.cfg = cfg

    def stage_sigma(self, i: int) -> np.ndarray:
        return np.full((self.plan_length, self.model.action_dim), self.cfg.sigma)


def mppi_fixed_step(model, x0, state: ControllerState, cfg: FixedMppiConfig):
    return MppiController(model, cfg).control_step(x0, state)


@dataclass(frozen=True)
class EvoStrategyConfig:
    population: int
    generations: int
    step_size: float = 0.3
    selection_fraction: float = 0.5
    horizon: int = 20
    dt: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 0 < self.selection_fraction <= 1:
            raise ValueError("selection_fraction must be in (0, 1]")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")

    @property
    def rollouts_per_step(self) -> int:
        return self.population * self.generations


class CmaEs:
    """Rank-based CMA-ES (weighted recombination, rank-one + rank-mu updates)."""

    def __init__(self, mean, sigma: float, population: int, selection_fraction: float = 0.5):
        self.mean = np.array(mean, dtype=float)
        n = self.dim = self.mean.size
        self.sigma0 = self.sigma = float(sigma)
        self.lam = population
        self.mu = max(1, int(math.floor(population * selection_fraction)))
        w = math.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / np.sum(self.weights ** 2)
        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(1 - self.c1, 2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff))
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        self.chiN = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
        self._reset_covariance()
        self.generation = 0
        self.resets = 0

    def _reset_covariance(self):
        n = self.dim
        self.pc = np.zeros(n)
        self.ps = np.zeros(n)
        self.C = np.eye(n)
        self.B = np.eye(n)
        self.D = np.ones(n)

    def ask(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((self.lam, self.dim))
        self._y = (z * self.D) @ self.B.T
        return self.mean + self.sigma * self._y

    def tell(self, fitness) -> bool:
        """Update from the fitness of the last ``ask``; returns True if a reset happened."""
        fitness = np.asarray(fitness, dtype=float)
        order = np.argsort(fitness, kind="stable")[: self.mu]
        y_sel = self._y[order]
        y_w = self.weights @ y_sel
        self.mean = self.mean + self.sigma * y_w
        self.generation += 1

        c_inv_sqrt = self.B @ np.diag(1.0 / self.D) @ self.B.T
        self.ps = (1 - self.cs) * self.ps + math.sqrt(self.cs * (2 - self.cs) * self.mueff) * (c_inv_sqrt @ y_w)
        ps_norm = np.linalg.norm(self.ps)
        hsig = ps_norm / math.sqrt(1 - (1 - self.cs) ** (2 * self.generation)) / self.chiN < 1.4 + 2 / (self.dim + 1)
        self.pc = (1 - self.cc) * self.pc + hsig * math.sqrt(self.cc * (2 - self.cc) * self.mueff) * y_w
        rank_mu = (y_sel * self.weights[:, None]).T @ y_sel
        self.C = ((1 - self.c1 - self.cmu) * self.C
                  + self.c1 * (np.outer(self.pc, self.pc) + (not hsig) * self.cc * (2 - self.cc) * self.C)
                  + self.cmu * rank_mu)
        self.sigma *= math.exp((self.cs / self.damps) * (ps_norm / self.chiN - 1))

        self.C = 0.5 * (self.C + self.C.T)
        evals, evecs = np.linalg.eigh(self.C)
        degenerate = (
            not np.all(np.isfinite(evals)) or evals.min() <= 0
            or evals.max() > 1e14 * evals.min()
            or not math.isfinite(self.sigma) or self.sigma <= 0
        )
        if degenerate:
            self._reset_covariance()
            self.sigma = self.sigma0
            self.resets += 1
            return True
        self.B, self.D = evecs, np.sqrt(evals)
        return False


class CmaesController:
    """Receding-horizon CMA-ES over the flattened plan; the search mean is the plan."""

    def __init__(self, model: DynamicsModel, cfg: EvoStrategyConfig):
        self.model = model
        self.cfg = cfg
        self.horizon = cfg.horizon
        self.dt = cfg.dt
        self.rollouts = 0

    @property
    def plan_length(self) -> int:
        return self.horizon + 1

    @property
    def rollouts_per_step(self) -> int:
        return self.cfg.rollouts_per_step

    def init_state(self) -> ControllerState:
        U = self.model.clamp(np.zeros((self.plan_length, self.model.action_dim)))
        return ControllerState(U, 0, np.zeros(self.plan_length, dtype=np.int64))

    def control_step(self, x_measured, state: ControllerState):
        shape = state.U.shape
        es = CmaEs(state.U.ravel(), self.cfg.step_size, self.cfg.population,
                   self.cfg.selection_fraction)
        root = RngStream(self.cfg.seed)
        stages = []
        flagged = False
        for g in range(self.cfg.generations):
            xs = es.ask(root.at(state.t, g + 1).generator())
            costs = rollout_batch(self.model, x_measured, xs.reshape((-1,) + shape), self.dt)
            self.rollouts += xs.shape[0]
            flagged |= es.tell(costs)
            stages.append(StageRecord(state.t, g + 1, float(np.min(costs)), math.nan))
        U = self.model.clamp(es.mean.reshape(shape))
        action = U[0].copy()
        counts = state.update_counts + self.cfg.generations
        record = StepRecord(state.t, action, stages, flagged=flagged,
                            applied_update_count=int(counts[0]))
        nxt = ControllerState(shift(U), state.t + 1, np.concatenate([counts[1:], [0]]), record)
        return action, nxt


def evo_step(model, x0, state: ControllerState, cfg: EvoStrategyConfig):
    return CmaesController(model, cfg).control_step(x0, state)

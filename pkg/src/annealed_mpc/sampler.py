"""Gaussian perturbations, exponential weighting and the score estimator.

The MPPI update and the score-ascent step are kept as two separate code
paths on purpose: ``mppi_update`` forms the weighted noise average directly,
while ``score_ascent_step(U, estimate_score(...))`` goes through the scaled
score. They agree to rounding error, which the tests check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class NoValidSampleError(RuntimeError):
    """Every candidate in a batch had infinite cost."""


@dataclass(frozen=True)
class RngStream:
    """Seeded stream addressed by (control step, annealing iteration).

    Sample ``k`` of a batch is row ``k`` of the draw, so the first ``k`` rows
    do not depend on the batch size.
    """

    seed: int
    t: int = 0
    i: int = 0

    def generator(self) -> np.random.Generator:
        if self.seed < 0 or self.t < 0 or self.i < 0:
            raise ValueError("rng coordinates must be non-negative")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.t, self.i))
        return np.random.default_rng(ss)

    def at(self, t: int, i: int) -> "RngStream":
        return RngStream(self.seed, t, i)


@dataclass(frozen=True)
class SamplerParams:
    temperature: float
    sigma: np.ndarray  # (L, d_u) per-entry standard deviations

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim != 2 or np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
            raise ValueError("sigma must be a finite (L, d_u) array of non-negative entries")
        object.__setattr__(self, "sigma", sigma)


@dataclass
class PerturbationBatch:
    noises: np.ndarray  # (N_W, L, d_u)
    costs: Optional[np.ndarray] = None  # (N_W,)

    @property
    def sample_count(self) -> int:
        return self.noises.shape[0]


def sample_perturbations(params: SamplerParams, n_samples: int, rng: RngStream) -> PerturbationBatch:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    z = rng.generator().standard_normal((n_samples,) + params.sigma.shape)
    return PerturbationBatch(z * params.sigma)


def softmax_weights(costs, temperature: float) -> np.ndarray:
    """Normalized exp(-J/lambda); infinite costs get weight exactly 0."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    costs = np.asarray(costs, dtype=float)
    finite = np.isfinite(costs)
    if not finite.any():
        raise NoValidSampleError("all sampled rollouts have infinite cost")
    if np.any(np.isnan(costs)):
        raise ValueError("costs contain NaN")
    shifted = np.where(finite, costs - costs[finite].min(), np.inf)
    w = np.exp(-shifted / temperature)
    return w / w.sum()


def _weighted_noise(batch: PerturbationBatch, temperature: float) -> np.ndarray:
    if batch.costs is None:
        raise ValueError("batch has no costs; roll it out first")
    w = softmax_weights(batch.costs, temperature)
    return np.tensordot(w, batch.noises, axes=1)


def mppi_update(U, batch: PerturbationBatch, temperature: float) -> np.ndarray:
    """U + sum_i w_i W_i with softmax weights over the batch costs."""
    return np.asarray(U, dtype=float) + _weighted_noise(batch, temperature)


def estimate_score(batch: PerturbationBatch, temperature: float, sigma) -> np.ndarray:
    """Monte-Carlo estimate of grad log p1(U) for a diagonal Gaussian kernel.

    ``sigma`` holds per-entry standard deviations, so the covariance inverse
    is ``1 / sigma**2`` entrywise.
    """
    var = np.asarray(sigma, dtype=float) ** 2
    return _weighted_noise(batch, temperature) / var


def score_ascent_step(U, score, sigma) -> np.ndarray:
    """U + Sigma * score; the covariance is the step size, nothing else is added."""
    var = np.asarray(sigma, dtype=float) ** 2
    return np.asarray(U, dtype=float) + var * np.asarray(score, dtype=float)


def weight_entropy(costs, temperature: float) -> float:
    w = softmax_weights(costs, temperature)
    nz = w[w > 0]
    return float(-(nz * np.log(nz)).sum())

"""Sampling-based MPC with diffusion-style dual-loop annealing."""
from .annealing import NoiseSchedule, exp_schedule, kernel_sigma, trajectory_kernel
from .core import DivergenceError, DynamicsModel, RolloutResult, rollout, rollout_batch
from .dial import (
    ControllerState,
    DialConfig,
    DialController,
    anneal_step,
    control_step,
    nodes_to_controls,
    run_episode,
    shift,
)
from .sampler import (
    NoValidSampleError,
    PerturbationBatch,
    RngStream,
    SamplerParams,
    estimate_score,
    mppi_update,
    sample_perturbations,
    score_ascent_step,
    softmax_weights,
)

__version__ = "0.1.0"

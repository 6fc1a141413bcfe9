"""Staged contact scoring and joint damping."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

JOINT_DAMPING = 0.65  # N*m*s/rad


@dataclass(frozen=True)
class Pad:
    center: float  # m, along the ground
    radius: float = 0.1
    t_min: float = 0.0  # stage window [t_min, t_max) in seconds
    t_max: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("pad radius must be positive")
        if not self.t_max > self.t_min:
            raise ValueError("pad window must satisfy t_min < t_max")

    def contains(self, positions) -> np.ndarray:
        pos = np.asarray(positions, dtype=float)
        if np.ndim(self.center) == 0:
            return np.abs(pos - self.center) <= self.radius
        return np.linalg.norm(pos - np.asarray(self.center), axis=-1) <= self.radius


def check_pads(pads: Sequence[Pad]):
    for a, b in zip(pads, pads[1:]):
        if b.t_min < a.t_max:
            raise ValueError("pad stage windows must be disjoint and ordered")


def staged_contact_reward(contacts, positions, stage: int, pads: Sequence[Pad],
                          w_correct: float = 0.1, w_wrong: float = 0.1) -> float:
    """Contact score of one time instant for stage ``stage`` (0-based).

    A contact is correct if it lies on the current pad and wrong otherwise.
    Wrong contacts that sit on the previous stage's pad are forgiven, so the
    robot is not penalized while it prepares the next jump.
    """
    if not 0 <= stage < len(pads):
        raise IndexError(f"stage {stage} outside 0..{len(pads) - 1}")
    contacts = np.asarray(contacts, dtype=bool)
    on_current = pads[stage].contains(positions) & contacts
    wrong = contacts & ~on_current
    n_correct = int(on_current.sum())
    n_wrong = int(wrong.sum())
    n_prev = int((wrong & pads[stage - 1].contains(positions)).sum()) if stage > 0 else 0
    return w_correct * n_correct - w_wrong * (n_wrong - n_prev)


@dataclass
class ContactStageRecord:
    stage: int
    values: list = field(default_factory=list)

    @property
    def minimum(self) -> float:
        if not self.values:
            raise ValueError(f"stage {self.stage} has no samples")
        return float(min(self.values))


def total_contact_score(records: Sequence[ContactStageRecord], n_stages: int | None = None) -> float:
    """Sum over stages of the worst-case (minimum) contact score in each window."""
    stages = sorted(r.stage for r in records)
    expected = list(range(n_stages if n_stages is not None else len(records)))
    if stages != expected:
        missing = sorted(set(expected) - set(stages))
        raise ValueError(f"contact records missing or duplicated stages: missing={missing}, got={stages}")
    return float(sum(r.minimum for r in records))


def damped_torque(tau, omega, d: float = JOINT_DAMPING):
    """Torque actually applied at a joint: tau - d * omega."""
    return np.asarray(tau, dtype=float) - d * np.asarray(omega, dtype=float)

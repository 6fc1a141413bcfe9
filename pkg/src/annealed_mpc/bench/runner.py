"""Solver-in-the-loop episodes, equal-budget comparisons and summary tables.

Emitted files depend only on (config, seed): wall-clock timings are kept in
the in-memory records and printed to the console, never written to disk.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..annealing import NoiseSchedule
from ..baselines import MPPI_PRESETS, CmaesController, EvoStrategyConfig, FixedMppiConfig, MppiController
from ..core import DynamicsModel
from ..dial import DialConfig, DialController, StepRecord
from ..envs import ENVIRONMENTS, ContactStageRecord, total_contact_score
from ..envs.double_integrator import DoubleIntegrator
from ..envs.hopper import Hopper
from ..envs.pendulum import Pendulum
from ..envs.wall_jump import WallJump
from .config import ExperimentConfig

CSV_VERSION = "1"


class BudgetParityError(RuntimeError):
    pass


class MismatchLeakError(RuntimeError):
    pass


@dataclass
class RunRecord:
    solver: str
    seed: int
    actions: np.ndarray  # (T, d_u)
    states: np.ndarray  # (T + 1, d_x)
    realized_cost: float
    steps: List[StepRecord] = field(default_factory=list)
    success: Optional[bool] = None
    contact_score: float = math.nan
    tracking_error: float = math.nan
    diverged: bool = False
    step_seconds: List[float] = field(default_factory=list)

    @property
    def flagged_steps(self) -> int:
        return sum(1 for s in self.steps if s.flagged)


def build_models(cfg: ExperimentConfig):
    """(true model, solver model); the mismatch overrides only touch the latter."""
    params = dict(cfg.env_params)
    if cfg.dt is not None:
        params["dt"] = cfg.dt
    true_model = ENVIRONMENTS[cfg.env_id](**params)
    return true_model, true_model.with_params(**cfg.mismatch)


def build_solver(sid: str, cfg: ExperimentConfig, model: DynamicsModel, seed: int,
                 overrides: Optional[dict] = None):
    o = dict(overrides or {})
    iterations = o.get("iterations", cfg.iterations)
    dt = model.dt
    if sid == "dial":
        sched = NoiseSchedule(iterations, cfg.horizon, model.action_dim,
                              o.get("beta1", cfg.beta1), o.get("beta2", cfg.beta2),
                              o.get("sigma_base", cfg.sigma_base))
        return DialController(model, DialConfig(sched, cfg.temperature, cfg.samples, dt,
                                                cfg.node_count, cfg.interp, seed))
    if sid.startswith("mppi"):
        sigma = cfg.mppi_sigma if sid == "mppi" else MPPI_PRESETS[sid.split("-", 1)[1]]
        iters = cfg.mppi_iterations if cfg.mppi_iterations is not None else iterations
        return MppiController(model, FixedMppiConfig(sigma, cfg.temperature, cfg.samples, iters,
                                                     cfg.horizon, dt, seed))
    if sid == "cmaes":
        return CmaesController(model, EvoStrategyConfig(
            cfg.samples, iterations, cfg.cmaes_step_size, cfg.cmaes_selection_fraction,
            cfg.horizon, dt, seed))
    raise ValueError(f"unknown solver {sid!r}")


def check_budget_parity(cfg: ExperimentConfig, model: DynamicsModel) -> int:
    budgets = {sid: build_solver(sid, cfg, model, 0).rollouts_per_step for sid in cfg.solvers}
    if len(set(budgets.values())) > 1:
        detail = ", ".join(f"{k}={v}" for k, v in budgets.items())
        raise BudgetParityError(f"solvers differ in rollouts per control step: {detail}")
    return next(iter(budgets.values()))


def _wrap(a):
    return (np.asarray(a) + math.pi) % (2 * math.pi) - math.pi


def episode_metrics(model: DynamicsModel, states: np.ndarray):
    """(success or None, contact score, tracking error) for a realized trajectory."""
    final = states[-1]
    if isinstance(model, WallJump):
        return model.is_success(states), math.nan, abs(final[0] - model.goal_x)
    if isinstance(model, Pendulum):
        err = abs(float(_wrap(final[0] - math.pi)))
        return bool(err < 0.1 and abs(final[1]) < 0.5), math.nan, err
    if isinstance(model, DoubleIntegrator):
        return None, math.nan, abs(final[0])
    if isinstance(model, Hopper):
        rewards = model.contact_reward(states)
        stages = model.stage_index(states[:, 8] * model.dt)
        recs = [ContactStageRecord(j, rewards[stages == j].tolist()) for j in np.unique(stages)]
        centers = np.array([p.center for p in model.pads])
        track = float(np.mean(np.abs(states[:, 0] - centers[stages])))
        return None, total_contact_score(recs, len(recs)), track
    return None, math.nan, math.nan


def run_seed(sid: str, cfg: ExperimentConfig, seed: int, true_model: DynamicsModel,
             solver_model: DynamicsModel, overrides: Optional[dict] = None) -> RunRecord:
    ctrl = build_solver(sid, cfg, solver_model, seed, overrides)
    state = ctrl.init_state()
    x = true_model.initial_state()
    xs, us, steps, secs = [x.copy()], [], [], []
    cost = 0.0
    diverged = False
    for _ in range(cfg.steps):
        t0 = time.perf_counter()
        u, state = ctrl.control_step(x, state)
        secs.append(time.perf_counter() - t0)
        u = true_model.clamp(u)
        cost += float(true_model.running_cost(x[None], u[None])[0])
        x = true_model.step(x[None], u[None], true_model.dt)[0]
        us.append(u)
        steps.append(state.last)
        if not np.all(np.isfinite(x)):
            diverged = True
            break
        xs.append(x.copy())
    if diverged:
        cost = math.inf
    else:
        cost += float(true_model.terminal_cost(x[None])[0])
    expected = ctrl.rollouts_per_step * len(us)
    if ctrl.rollouts != expected:
        raise BudgetParityError(f"{sid} used {ctrl.rollouts} rollouts, expected {expected}")
    states = np.array(xs)
    rec = RunRecord(sid, seed, np.array(us).reshape(len(us), -1), states, cost, steps,
                    diverged=diverged, step_seconds=secs)
    if not diverged:
        rec.success, rec.contact_score, rec.tracking_error = episode_metrics(true_model, states)
    return rec


def run_experiment(cfg: ExperimentConfig, solvers: Optional[Sequence[str]] = None,
                   overrides: Optional[dict] = None) -> List[RunRecord]:
    """Run every (solver, seed) pair; records come back grouped by solver, seeds in order."""
    solvers = list(solvers or cfg.solvers)
    true_model, solver_model = build_models(cfg)
    check_budget_parity(cfg.replace(solvers=solvers), solver_model)
    before = true_model.checksum()
    if not cfg.mismatch and solver_model.checksum() != before:
        raise MismatchLeakError("empty mismatch spec but solver model differs from the true model")
    records = []
    for sid in solvers:
        for seed in cfg.seeds:
            records.append(run_seed(sid, cfg, seed, true_model, solver_model, overrides))
            if true_model.checksum() != before:
                raise MismatchLeakError("true model parameters changed during the run")
    return records


@dataclass
class SummaryRow:
    solver: str
    trials: int
    mean_cost: float
    std_cost: float
    success_rate: float
    contact_score: float
    tracking_error: float
    diverged: int
    flagged_steps: int
    label: str = ""


def summarize(records: Sequence[RunRecord], labels: Optional[Dict[str, str]] = None) -> List[SummaryRow]:
    """Per-solver statistics in first-appearance order (population std, so one seed gives 0)."""
    order: List[str] = []
    for r in records:
        if r.solver not in order:
            order.append(r.solver)
    rows = []
    for sid in order:
        rs = [r for r in records if r.solver == sid]
        costs = np.array([r.realized_cost for r in rs])
        ok = [r.success for r in rs if r.success is not None]
        rows.append(SummaryRow(
            sid, len(rs), float(np.mean(costs)), float(np.std(costs)),
            float(sum(ok) / len(ok)) if ok else math.nan,
            float(np.mean([r.contact_score for r in rs])),
            float(np.mean([r.tracking_error for r in rs])),
            sum(r.diverged for r in rs), sum(r.flagged_steps for r in rs),
            (labels or {}).get(sid, ""),
        ))
    return rows


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


SUMMARY_COLUMNS = ["solver", "trials", "mean_cost", "std_cost", "success_rate",
                   "contact_score", "tracking_error", "diverged", "flagged_steps"]


def summary_csv(rows: Sequence[SummaryRow], extra_columns: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(f"# annealed-mpc summary csv v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(extra_columns) + SUMMARY_COLUMNS)
    for r in rows:
        extra = r.label.split("|") if extra_columns else []
        w.writerow(extra + [_fmt(getattr(r, c)) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def summary_table(rows: Sequence[SummaryRow], extra_columns: Sequence[str] = ()) -> str:
    head = list(extra_columns) + SUMMARY_COLUMNS
    body = []
    for r in rows:
        extra = r.label.split("|") if extra_columns else []
        body.append(extra + [r.solver, str(r.trials), f"{r.mean_cost:.6g}", f"{r.std_cost:.6g}",
                             f"{r.success_rate:.3f}", f"{r.contact_score:.4g}",
                             f"{r.tracking_error:.4g}", str(r.diverged), str(r.flagged_steps)])
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    lines = ["  ".join(h.ljust(wd) for h, wd in zip(head, widths))]
    lines.append("  ".join("-" * wd for wd in widths))
    lines += ["  ".join(c.rjust(wd) for c, wd in zip(row, widths)) for row in body]
    return "\n".join(lines) + "\n"


def runs_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    buf.write(f"# annealed-mpc runs csv v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["solver", "seed", "realized_cost", "success", "contact_score",
                "tracking_error", "diverged", "flagged_steps"])
    for r in records:
        w.writerow([r.solver, r.seed, _fmt(r.realized_cost),
                    "" if r.success is None else _fmt(r.success), _fmt(r.contact_score),
                    _fmt(r.tracking_error), _fmt(r.diverged), r.flagged_steps])
    return buf.getvalue()


def trajectory_csv(rec: RunRecord) -> str:
    buf = io.StringIO()
    buf.write(f"# annealed-mpc trajectory csv v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    d_u, d_x = rec.actions.shape[1], rec.states.shape[1]
    w.writerow(["t"] + [f"u{j}" for j in range(d_u)] + [f"x{j}" for j in range(d_x)]
               + ["plan_cost", "applied_updates", "flagged"])
    for t in range(rec.actions.shape[0]):
        step = rec.steps[t]
        x = rec.states[t] if t < rec.states.shape[0] else np.full(d_x, np.nan)
        w.writerow([t] + [_fmt(v) for v in rec.actions[t]] + [_fmt(v) for v in x]
                   + [_fmt(step.plan_cost), step.applied_update_count, _fmt(step.flagged)])
    return buf.getvalue()


def write_outputs(records: Sequence[RunRecord], rows: Sequence[SummaryRow], out_dir: str,
                  extra_columns: Sequence[str] = (), trajectories: bool = True):
    """Per-seed trajectories first, then the merged tables (seed order is record order)."""
    os.makedirs(out_dir, exist_ok=True)
    if trajectories:
        for r in records:
            sub = os.path.join(out_dir, "trajectories", r.solver)
            os.makedirs(sub, exist_ok=True)
            with open(os.path.join(sub, f"seed_{r.seed}.csv"), "w", newline="") as fh:
                fh.write(trajectory_csv(r))
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="") as fh:
        fh.write(runs_csv(records))
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        fh.write(summary_csv(rows, extra_columns))
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write(summary_table(rows, extra_columns))


def timing_report(records: Sequence[RunRecord]) -> str:
    lines = []
    for sid in dict.fromkeys(r.solver for r in records):
        secs = [s for r in records if r.solver == sid for s in r.step_seconds]
        if secs:
            lines.append(f"{sid}: {1e3 * float(np.mean(secs)):.2f} ms per control step "
                         f"(max {1e3 * float(np.max(secs)):.2f} ms)")
    return "\n".join(lines)

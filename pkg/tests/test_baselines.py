import math

import numpy as np
import pytest

from annealed_mpc.annealing import NoiseSchedule
from annealed_mpc.baselines import (
    MPPI_PRESETS,
    CmaEs,
    CmaesController,
    EvoStrategyConfig,
    FixedMppiConfig,
    MppiController,
    evo_step,
    mppi_fixed_step,
)
from annealed_mpc.dial import DialConfig, DialController, run_episode
from annealed_mpc.envs import DoubleIntegrator, Pendulum, WallJump


def test_presets():
    assert MPPI_PRESETS == {"explore": 0.2, "exploit": 0.05}
    assert FixedMppiConfig.preset("explore", temperature=0.1, n_samples=8).sigma == 0.2
    assert FixedMppiConfig.preset("exploit", temperature=0.1, n_samples=8).sigma == 0.05
    with pytest.raises(ValueError):
        FixedMppiConfig(0.0, 0.1, 8)


def test_fixed_mppi_equals_degenerate_dial():
    m = WallJump()
    n, H = 3, 10
    mppi = MppiController(m, FixedMppiConfig(0.2, 0.1, 64, iterations=n, horizon=H, seed=8))
    dial = DialController(m, DialConfig(NoiseSchedule(n, H, 2, math.inf, math.inf, 0.2), 0.1, 64,
                                        seed=8))
    assert mppi.rollouts_per_step == dial.rollouts_per_step == n * 64
    a = run_episode(mppi, m, m.initial_state(), 12)
    b = run_episode(dial, m, m.initial_state(), 12)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_mppi_fixed_step_is_deterministic():
    m = Pendulum()
    cfg = FixedMppiConfig(0.2, 0.1, 32, iterations=2, horizon=8, seed=3)
    st = MppiController(m, cfg).init_state()
    a, sa = mppi_fixed_step(m, m.initial_state(), st, cfg)
    b, sb = mppi_fixed_step(m, m.initial_state(), st, cfg)
    assert np.array_equal(a, b) and np.array_equal(sa.U, sb.U)


def test_cmaes_sphere_converges():
    es = CmaEs(np.array([3.0, -2.0]), 1.0, population=8)
    rng = np.random.default_rng(0)
    for g in range(50):
        x = es.ask(rng)
        es.tell(np.sum(x * x, axis=1))
        if np.linalg.norm(es.mean) < 1e-3:
            break
    assert np.linalg.norm(es.mean) < 1e-3
    assert es.generation <= 50


def test_cmaes_population_two_is_one_plus_one_like():
    es = CmaEs(np.zeros(3), 0.5, population=2, selection_fraction=0.5)
    assert es.mu == 1 and np.array_equal(es.weights, [1.0])
    rng = np.random.default_rng(1)
    x = es.ask(rng)
    f = np.array([2.0, 1.0])
    es.tell(f)
    # the mean jumps to the better of the two candidates
    np.testing.assert_allclose(es.mean, x[1], atol=1e-15)


def test_cmaes_degeneracy_resets():
    es = CmaEs(np.zeros(2), 0.5, population=6)
    es.ask(np.random.default_rng(0))
    es.sigma = math.inf
    assert es.tell(np.arange(6.0)) is True
    assert es.resets == 1 and es.sigma == 0.5
    assert np.array_equal(es.C, np.eye(2))


def test_evo_config_validation():
    for kw in (dict(population=1, generations=1), dict(population=4, generations=0),
               dict(population=4, generations=1, selection_fraction=0.0),
               dict(population=4, generations=1, step_size=0.0)):
        with pytest.raises(ValueError):
            EvoStrategyConfig(**kw)


def test_cmaes_controller_budget_and_determinism():
    m = DoubleIntegrator()
    cfg = EvoStrategyConfig(population=16, generations=4, horizon=8, dt=0.1, seed=2)
    assert cfg.rollouts_per_step == 64
    ctrl = CmaesController(m, cfg)
    st = ctrl.init_state()
    a, sa = ctrl.control_step(m.initial_state(), st)
    assert ctrl.rollouts == 64
    b, sb = evo_step(m, m.initial_state(), st, cfg)
    assert np.array_equal(a, b) and np.array_equal(sa.U, sb.U)
    assert len(sa.last.stages) == 4


def test_cmaes_controller_drives_double_integrator_home():
    m = DoubleIntegrator()
    ctrl = CmaesController(m, EvoStrategyConfig(population=32, generations=6, horizon=15, dt=0.1))
    st = ctrl.init_state()
    x = m.initial_state()
    for _ in range(40):
        u, st = ctrl.control_step(x, st)
        x = m.step(x[None], u[None], 0.1)[0]
    assert abs(x[0]) < 0.1

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from annealed_mpc.sampler import (
    NoValidSampleError,
    PerturbationBatch,
    RngStream,
    SamplerParams,
    estimate_score,
    mppi_update,
    sample_perturbations,
    score_ascent_step,
    softmax_weights,
    weight_entropy,
)


def test_zero_sigma_gives_zero_noise():
    b = sample_perturbations(SamplerParams(1.0, np.zeros((5, 2))), 10, RngStream(0))
    assert np.all(b.noises == 0.0)


def test_sample_mean_within_four_standard_errors():
    sigma = np.array([[0.5, 2.0], [1.0, 0.1]])
    n = 100_000
    b = sample_perturbations(SamplerParams(1.0, sigma), n, RngStream(7, 3, 2))
    se = sigma / math.sqrt(n)
    assert np.all(np.abs(b.noises.mean(axis=0)) < 4 * se)
    np.testing.assert_allclose(b.noises.std(axis=0), sigma, rtol=0.02)


def test_same_coordinates_reproduce_and_distinct_coordinates_differ():
    p = SamplerParams(1.0, np.ones((4, 1)))
    a = sample_perturbations(p, 8, RngStream(1, 2, 3))
    b = sample_perturbations(p, 8, RngStream(1, 2, 3))
    assert np.array_equal(a.noises, b.noises)
    for other in (RngStream(1, 2, 4), RngStream(1, 3, 3), RngStream(2, 2, 3)):
        assert not np.array_equal(a.noises, sample_perturbations(p, 8, other).noises)


def test_sample_rows_do_not_depend_on_batch_size():
    p = SamplerParams(1.0, np.ones((3, 2)))
    small = sample_perturbations(p, 5, RngStream(4))
    big = sample_perturbations(p, 50, RngStream(4))
    assert np.array_equal(small.noises, big.noises[:5])


def test_sampler_params_validation():
    with pytest.raises(ValueError):
        SamplerParams(0.0, np.ones((2, 1)))
    with pytest.raises(ValueError):
        SamplerParams(1.0, -np.ones((2, 1)))
    with pytest.raises(ValueError):
        sample_perturbations(SamplerParams(1.0, np.ones((2, 1))), 0, RngStream(0))


def test_softmax_examples():
    np.testing.assert_allclose(softmax_weights([1, 1, 1], 1.0), [1 / 3] * 3, rtol=1e-15)
    np.testing.assert_allclose(softmax_weights([0, math.log(4)], 1.0), [0.8, 0.2], rtol=1e-14)
    for lam in (0.01, 0.3, 1.0, 7.0):
        assert np.array_equal(softmax_weights([5, 6], lam), softmax_weights([105, 106], lam))


def test_softmax_infinite_costs():
    w = softmax_weights([np.inf, 1.0, 2.0], 1.0)
    assert w[0] == 0.0
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(NoValidSampleError):
        softmax_weights([np.inf, np.inf], 1.0)


def test_softmax_does_not_overflow():
    w = softmax_weights([1e6, 1e6 + 1], 0.001)
    assert np.all(np.isfinite(w)) and w[0] == 1.0


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e3, 1e3)),
       st.floats(1e-3, 1e2), st.floats(-1e3, 1e3))
def test_softmax_properties(costs, lam, shift):
    w = softmax_weights(costs, lam)
    assert np.all(w >= 0)
    assert abs(w.sum() - 1.0) <= 1e-12
    # exact shift invariance holds whenever the shift is representable without rounding
    shift = float(np.round(shift))
    if np.all(np.round(costs) == costs):
        assert np.array_equal(w, softmax_weights(costs + shift, lam))


def _batch(n, L, d, seed=0, costs=None):
    rng = np.random.default_rng(seed)
    noises = rng.normal(size=(n, L, d))
    if costs is None:
        costs = rng.uniform(0, 5, n)
    return PerturbationBatch(noises, np.asarray(costs, dtype=float))


def test_mppi_update_examples():
    U = np.arange(6.0).reshape(3, 2)
    one = _batch(1, 3, 2, costs=[123.0])
    np.testing.assert_allclose(mppi_update(U, one, 0.5), U + one.noises[0], rtol=0, atol=0)
    two = _batch(2, 3, 2, costs=[4.0, 4.0])
    np.testing.assert_allclose(mppi_update(U, two, 2.0), U + (two.noises[0] + two.noises[1]) / 2,
                               rtol=1e-15)
    b = _batch(10, 3, 2, seed=3)
    best = int(np.argmin(b.costs))
    np.testing.assert_allclose(mppi_update(U, b, 1e-6), U + b.noises[best], atol=1e-12)


def test_update_needs_costs_and_propagates_no_valid():
    U = np.zeros((2, 1))
    with pytest.raises(ValueError):
        mppi_update(U, PerturbationBatch(np.zeros((3, 2, 1))), 1.0)
    with pytest.raises(NoValidSampleError):
        mppi_update(U, _batch(3, 2, 1, costs=[np.inf] * 3), 1.0)
    with pytest.raises(NoValidSampleError):
        estimate_score(_batch(3, 2, 1, costs=[np.inf] * 3), 1.0, np.ones((2, 1)))


def test_symmetric_pair_has_zero_score():
    w = np.random.default_rng(0).normal(size=(1, 4, 2))
    b = PerturbationBatch(np.concatenate([w, -w]), np.array([1.0, 1.0]))
    assert np.all(estimate_score(b, 1.0, np.full((4, 2), 0.3)) == 0.0)


def test_score_ascent_examples():
    U = np.ones((3, 2))
    sigma = np.full((3, 2), 0.7)
    assert np.array_equal(score_ascent_step(U, np.zeros((3, 2)), sigma), U)
    s = np.random.default_rng(1).normal(size=(3, 2))
    step1 = score_ascent_step(U, s, sigma) - U
    step2 = score_ascent_step(U, s, sigma * math.sqrt(2.0)) - U
    np.testing.assert_allclose(step2, 2 * step1, rtol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.sampled_from([1, 2, 4]), st.sampled_from([1, 5, 20]),
       st.floats(1e-2, 10.0), st.integers(0, 2 ** 32 - 1))
def test_score_route_matches_direct_update(n, d, L, lam, seed):
    rng = np.random.default_rng(seed)
    sigma = rng.uniform(0.05, 2.0, (L, d))
    b = sample_perturbations(SamplerParams(lam, sigma), n, RngStream(seed % 1000))
    b.costs = rng.uniform(0, 10, n)
    U = rng.normal(size=(L, d))
    direct = mppi_update(U, b, lam)
    via_score = score_ascent_step(U, estimate_score(b, lam, sigma), sigma)
    np.testing.assert_allclose(via_score, direct, rtol=1e-12, atol=1e-15)


def test_weight_entropy_bounds():
    assert weight_entropy([1, 1, 1, 1], 1.0) == pytest.approx(math.log(4))
    assert weight_entropy([0, 1000], 0.01) == pytest.approx(0.0, abs=1e-12)

import math

import numpy as np
import pytest

from annealed_mpc.landscape import (
    BUNDLED_SIGMAS,
    DRIFT_SIGMA,
    RELOCATION_SIGMA,
    AmbiguousArgmaxError,
    GridDensity,
    argmax_location,
    bundled_wall_jump,
    convolve_density,
    count_local_maxima,
    grid_minima,
    interpolate_field,
    make_axes,
    optimum_drift,
    score_crosscheck,
    score_on_grid,
    target_density,
    write_density_csv,
)


def quad(U):
    return 0.5 * np.sum(U ** 2, axis=-1)


def normal_pdf(x, mu, s):
    return np.exp(-0.5 * ((x - mu) / s) ** 2) / (s * math.sqrt(2 * math.pi))


def test_target_density_mean_at_quadratic_minimum():
    axes = make_axes(-6, 8, 4001)
    p = target_density(lambda U: 0.5 * (U[..., 0] - 1.0) ** 2, axes, 1.0)
    mean = np.sum(p.values * axes[0]) * p.cell_volume
    assert mean == pytest.approx(1.0, abs=1e-9)
    assert p.mass() == pytest.approx(1.0, abs=1e-12)


def test_small_temperature_concentrates_on_argmin():
    axes = make_axes(-2, 2, 2001)
    cost = lambda U: (U[..., 0] ** 2 - 1.0) ** 2 + 0.2 * U[..., 0]  # noqa: E731
    p = target_density(cost, axes, 1e-3)
    loc, _ = argmax_location(p)
    near = np.abs(axes[0] - loc[0]) < 0.05
    assert np.sum(p.values[near]) * p.cell_volume > 0.99
    assert loc[0] < 0


def test_gaussian_convolution_matches_closed_form():
    axes = make_axes(-10, 10, 4001)
    p = GridDensity(axes, normal_pdf(axes[0], 0.5, 0.7))
    q = convolve_density(p, 0.4)
    ref = normal_pdf(axes[0], 0.5, math.hypot(0.7, 0.4))
    assert np.max(np.abs(q.values - ref)) < 1e-6
    assert q.mass() == pytest.approx(1.0, abs=1e-12)


def test_gaussian_convolution_2d_matches_closed_form():
    axes = make_axes([-6, -6], [6, 6], 401)
    X, Y = np.meshgrid(*axes, indexing="ij")
    p = GridDensity(axes, normal_pdf(X, 0.3, 0.6) * normal_pdf(Y, -0.2, 0.5))
    q = convolve_density(p, 0.3)
    ref = normal_pdf(X, 0.3, math.hypot(0.6, 0.3)) * normal_pdf(Y, -0.2, math.hypot(0.5, 0.3))
    assert np.max(np.abs(q.values - ref)) < 1e-6


def test_zero_sigma_is_identity_and_negative_rejected():
    p = bundled_wall_jump(512)[1]
    assert np.array_equal(convolve_density(p, 0.0).values, p.values)
    with pytest.raises(ValueError):
        convolve_density(p, -0.1)


def test_semigroup_property():
    axes = make_axes(-8, 8, 3201)
    p = target_density(lambda U: np.abs(U[..., 0]) + 0.5 * U[..., 0] ** 2, axes, 1.0)
    a = convolve_density(convolve_density(p, 0.3), 0.4)
    b = convolve_density(p, 0.5)
    assert np.max(np.abs(a.values - b.values)) < 1e-6


def test_symmetric_density_has_no_drift():
    axes = make_axes(-3, 3, 1201)
    p = target_density(quad, axes, 0.5)
    assert all(r.gap == 0.0 for r in optimum_drift(p, [0.0, 0.1, 0.5, 1.0]))


def test_flat_density_is_ambiguous():
    p = GridDensity(make_axes(0, 1, 50), np.ones(50))
    with pytest.raises(AmbiguousArgmaxError):
        argmax_location(p)


def test_score_of_normal_is_linear():
    axes = make_axes(-5, 5, 2001)
    p = target_density(quad, axes, 1.0)
    s = score_on_grid(p)[:, 0]
    inner = np.abs(axes[0]) < 3
    np.testing.assert_allclose(s[inner], -axes[0][inner], atol=1e-5)
    q = GridDensity(axes, np.ones(2001)).normalized()
    assert np.all(score_on_grid(q) == 0.0)


def test_score_interpolation_2d():
    axes = make_axes([-4, -4], [4, 4], 321)
    p = target_density(quad, axes, 1.0)
    field = score_on_grid(p)
    v = interpolate_field(p, field, [[0.5, -1.0]])[0]
    np.testing.assert_allclose(v, [-0.5, 1.0], atol=1e-3)


def test_monte_carlo_score_matches_grid_on_bimodal_landscape():
    task, _ = bundled_wall_jump()
    axes = make_axes(-1.5, 2.5, 4001)
    probes = np.linspace(0.2, 1.2, 6)[:, None]
    checks = score_crosscheck(task.cost, 0.3, 0.2, probes, 20000, seed=1, axes=axes)
    assert max(float(c.z[0]) for c in checks) < 3.0


def test_bimodal_density_modes_match_grid_minima():
    task, p = bundled_wall_jump(4001)
    assert count_local_maxima(p) == 2
    minima = grid_minima(task.cost, p.axes)[:2]
    loc, _ = argmax_location(p)
    assert loc[0] == minima[0].location[0]
    # the other mode of p0 is the stand-still basin
    mask = p.axes[0] < task.wall_clearance_control()
    other = p.axes[0][mask][np.argmax(p.values[mask])]
    assert other == pytest.approx(minima[1].location[0], abs=1e-12)


def test_drift_relocates_argmax_short_of_the_wall():
    task, p = bundled_wall_jump()
    recs = optimum_drift(p, [0.0, DRIFT_SIGMA, RELOCATION_SIGMA])
    assert recs[0].gap == 0.0
    assert recs[1].gap > 0.0
    assert recs[2].argmax[0] < task.wall_clearance_control()


def test_local_maxima_non_increasing_on_bundled_sigmas():
    _, p = bundled_wall_jump()
    counts = [count_local_maxima(convolve_density(p, s)) for s in BUNDLED_SIGMAS]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[0] == 2 and counts[-1] == 1


def test_count_local_maxima_2d_merges_plateaus():
    vals = np.zeros((20, 20))
    vals[3:6, 3:6] = 1.0
    vals[12, 14] = 0.5
    p = GridDensity(make_axes([0, 0], [1, 1], 20), vals)
    assert count_local_maxima(p) == 2


def test_density_csv(tmp_path):
    _, p = bundled_wall_jump(64)
    path = tmp_path / "d.csv"
    write_density_csv(path, [p, convolve_density(p, 0.1)], ["0", "0.1"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# annealed-mpc landscape csv v1"
    assert lines[1].split(",") == ["u", "density_0", "score_0", "density_0.1", "score_0.1"]
    assert len(lines) == 66
    with pytest.raises(ValueError):
        write_density_csv(path, [bundled_wall_jump(16, ndim=2)[1]], ["x"])

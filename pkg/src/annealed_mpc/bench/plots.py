"""Landscape artifacts: density/score CSVs, the drift table and SVG figures."""
from __future__ import annotations

import csv
import os
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..landscape import (  # noqa: E402
    BUNDLED_SIGMAS,
    BUNDLED_TEMPERATURE,
    bundled_wall_jump,
    convolve_density,
    count_local_maxima,
    optimum_drift,
    write_density_csv,
)

PLOT_SIGMAS = (0.0, 0.1, 0.3, 0.5)
GRID_2D = 256


def _save(fig, path):
    # fixed salt and no date so identical inputs give identical bytes
    with plt.rc_context({"svg.hashsalt": "annealed-mpc", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_landscape_artifacts(out_dir: str) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    task, p0 = bundled_wall_jump()
    u = p0.axes[0]
    cost = task.cost(u[:, None])
    u_wall = task.wall_clearance_control()
    written = []

    smoothed = [convolve_density(p0, s) for s in PLOT_SIGMAS]
    path = os.path.join(out_dir, "landscape_1d.csv")
    write_density_csv(path, smoothed, [f"sigma{s:g}" for s in PLOT_SIGMAS], cost=cost)
    written.append(path)

    path = os.path.join(out_dir, "drift.csv")
    with open(path, "w", newline="") as fh:
        fh.write("# annealed-mpc drift csv v1\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma", "argmax", "gap", "ties", "local_maxima", "short_of_wall"])
        for rec in optimum_drift(p0, BUNDLED_SIGMAS):
            n_max = count_local_maxima(convolve_density(p0, rec.sigma))
            w.writerow([repr(rec.sigma), repr(float(rec.argmax[0])), repr(rec.gap), rec.ties,
                        n_max, int(rec.argmax[0] < u_wall)])
    written.append(path)

    fig, (ax_c, ax_p) = plt.subplots(2, 1, figsize=(6.4, 6.0), sharex=True)
    ax_c.plot(u, np.minimum(cost, 3.0), color="k")
    ax_c.axvline(u_wall, ls=":", color="grey")
    ax_c.set_ylabel("cost J(u) (clipped at 3)")
    ax_c.set_title(f"bundled wall-jump landscape, lambda = {BUNDLED_TEMPERATURE:g}")
    for s, dens in zip(PLOT_SIGMAS, smoothed):
        ax_p.plot(u, dens.values, label=f"sigma = {s:g}")
    ax_p.axvline(u_wall, ls=":", color="grey")
    ax_p.set_xlabel("launch control u")
    ax_p.set_ylabel("density")
    ax_p.legend()
    path = os.path.join(out_dir, "landscape_1d.svg")
    _save(fig, path)
    written.append(path)

    _, q0 = bundled_wall_jump(cells=GRID_2D, ndim=2)
    sig2 = (0.0, 0.1, 0.3)
    fig, axes = plt.subplots(1, len(sig2), figsize=(4.0 * len(sig2), 3.6))
    a, b = q0.axes
    for ax, s in zip(axes, sig2):
        q = convolve_density(q0, s)
        ax.imshow(q.values.T, origin="lower", extent=(a[0], a[-1], b[0], b[-1]), aspect="auto")
        ax.set_title(f"sigma = {s:g}")
        ax.set_xlabel("horizontal launch a")
    axes[0].set_ylabel("vertical launch b")
    path = os.path.join(out_dir, "landscape_2d.svg")
    _save(fig, path)
    written.append(path)
    return written

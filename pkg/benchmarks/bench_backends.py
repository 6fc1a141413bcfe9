"""Numba kernels vs the pure-numpy rollout path.

Times ``rollout_batch`` on every environment at a DIAL-sized batch and
checks that both backends agree. Run from the repo root:

    python3 benchmarks/bench_backends.py [--samples 2048] [--horizon 20] [--repeats 5]
"""
import argparse
import time

import numpy as np

from annealed_mpc import _accel
from annealed_mpc.core import rollout_batch
from annealed_mpc.envs import ENVIRONMENTS


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(env_id, samples, horizon, repeats, seed=0):
    model = ENVIRONMENTS[env_id]()
    rng = np.random.default_rng(seed)
    cand = rng.normal(0.0, 0.5, (samples, horizon + 1, model.action_dim))
    x0 = model.initial_state()
    out = {}
    for backend in ("numba", "numpy"):
        _accel.USE_NUMBA = backend == "numba"
        costs = rollout_batch(model, x0, cand)  # warm-up, includes JIT compile
        out[backend] = (best_time(lambda: rollout_batch(model, x0, cand), repeats), costs)
    (t_nb, c_nb), (t_np, c_np) = out["numba"], out["numpy"]
    finite = np.isfinite(c_np)
    same_inf = bool(np.array_equal(finite, np.isfinite(c_nb)))
    rel = float(np.max(np.abs(c_nb[finite] - c_np[finite]) / np.maximum(1.0, np.abs(c_np[finite]))))
    return t_nb, t_np, rel, same_inf


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=2048)
    ap.add_argument("--horizon", type=int, default=20)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    default = _accel.USE_NUMBA
    print(f"rollout_batch, {args.samples} candidates x {args.horizon + 1} steps, "
          f"best of {args.repeats}")
    print(f"{'env':<18}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}{'max rel diff':>14}")
    try:
        for env_id in sorted(ENVIRONMENTS):
            t_nb, t_np, rel, same_inf = bench(env_id, args.samples, args.horizon, args.repeats)
            note = "" if same_inf else "  (divergence mask differs)"
            print(f"{env_id:<18}{1e3 * t_nb:>10.2f}{1e3 * t_np:>10.2f}{t_np / t_nb:>8.1f}x"
                  f"{rel:>14.1e}{note}")
    finally:
        _accel.USE_NUMBA = default


if __name__ == "__main__":
    main()

"""Backend selection for the rollout kernels.

``ANNEALED_MPC_NUMBA=0`` forces the pure-numpy path even when numba is
importable. ``ANNEALED_MPC_THREADS`` caps the numba thread pool; it never
changes results because every candidate rollout is computed independently.
"""
import os

_FALSE = {"0", "false", "no", "off"}


def _threads_from_env():
    raw = os.environ.get("ANNEALED_MPC_THREADS")
    if raw is None or raw.strip() == "":
        return None
    n = int(raw)
    if n < 1:
        raise ValueError(f"ANNEALED_MPC_THREADS must be >= 1, got {raw!r}")
    return n


_requested_threads = _threads_from_env()
if _requested_threads is not None and "NUMBA_NUM_THREADS" not in os.environ:
    # must be set before numba is first imported to lift the default pool size
    os.environ["NUMBA_NUM_THREADS"] = str(_requested_threads)

# TBB is probed first by default and warns on old installs; workqueue is enough
# because kernels are only launched from one thread at a time
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

USE_NUMBA = os.environ.get("ANNEALED_MPC_NUMBA", "1").strip().lower() not in _FALSE

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    USE_NUMBA = False


def _noop(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(func):
        return func

    return wrapper


if numba is not None:
    njit = numba.njit
    prange = numba.prange
else:  # pragma: no cover
    njit = _noop
    prange = range


def configure_threads():
    """Apply the ``ANNEALED_MPC_THREADS`` cap to the numba pool (no-op otherwise)."""
    if numba is None or _requested_threads is None:
        return
    numba.set_num_threads(min(_requested_threads, numba.config.NUMBA_NUM_THREADS))


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


configure_threads()

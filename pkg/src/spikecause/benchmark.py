"""Timing comparison of the compiled kernels against the numpy fallbacks.

Runs representative workloads (network integration, row softmax both
directions, layer norm both directions, an optimizer sweep) through both
backend modules regardless of which one the package selected, and
reports per-call times plus the speedup. Compiled functions are warmed
up once so JIT compilation does not pollute the numbers.
"""

import time

import numpy as np

from spikecause.backend import numba_available
from spikecause.kernels import _numpy as knp
from spikecause.rng import Rng


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _workloads(mod, rng):
    n, steps = 20, 2000
    adjacency = (rng.uniform((n, n)) < 0.3).astype(np.float64)
    np.fill_diagonal(adjacency, 0.0)
    noise = rng.normal(5.0, np.sqrt(5.0), (steps, n))
    a = np.full(n, 0.02)
    b = np.full(n, -0.1)
    c_reset = np.full(n, -65.0)
    d = np.full(n, 8.0)
    syn = np.full(n, 5.0)

    def integrate():
        v = np.empty((steps + 1, n))
        u = np.empty((steps + 1, n))
        v[0] = -65.0
        u[0] = 6.5
        mod.izhikevich_run(v, u, a, b, c_reset, d, syn, adjacency, noise)

    logits = rng.normal(0.0, 1.0, (8800, 11))
    softmax_out, _ = knp.softmax_fwd(logits)
    upstream = rng.normal(0.0, 1.0, (8800, 11))

    x = rng.normal(0.0, 1.0, (880, 100))
    gain = np.ones(100)
    bias = np.zeros(100)
    _, xhat, rstd = knp.layernorm_fwd(x, gain, bias, 1e-5)
    dy = rng.normal(0.0, 1.0, (880, 100))

    p = rng.normal(0.0, 0.1, 260000)
    g = rng.normal(0.0, 0.01, 260000)
    m = np.zeros_like(p)
    v2 = np.zeros_like(p)

    return {
        "izhikevich_run (2000 steps, n=20)": integrate,
        "softmax_fwd (8800x11)": lambda: mod.softmax_fwd(logits),
        "softmax_bwd (8800x11)": lambda: mod.softmax_bwd(softmax_out, upstream),
        "layernorm_fwd (880x100)": lambda: mod.layernorm_fwd(x, gain, bias, 1e-5),
        "layernorm_bwd (880x100)": lambda: mod.layernorm_bwd(dy, xhat, rstd, gain),
        "adamw_update (260k params)": lambda: mod.adamw_update(
            p.copy(), g, m.copy(), v2.copy(),
            5e-4, 0.9, 0.999, 1e-8, 1e-3, 0.1, 0.001),
    }


def run_benchmark(repeats=3):
    """Yields human-readable result lines."""
    rng = Rng(7)
    numpy_times = {
        name: _time(fn, repeats)
        for name, fn in _workloads(knp, rng.derive("numpy")).items()
    }
    if not numba_available():
        yield "numba backend unavailable; numpy fallback timings only"
        for name, t in numpy_times.items():
            yield f"{name}: numpy {t * 1e3:.3f} ms"
        return

    from spikecause.kernels import _numba as knb
    warm = _workloads(knb, rng.derive("warmup"))
    for fn in warm.values():
        fn()
    numba_times = {
        name: _time(fn, repeats)
        for name, fn in _workloads(knb, rng.derive("numba")).items()
    }
    yield f"{'workload':<36} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    for name in numpy_times:
        tn, tb = numpy_times[name], numba_times[name]
        yield (f"{name:<36} {tn * 1e3:>8.3f}ms {tb * 1e3:>8.3f}ms "
               f"{tn / tb:>7.2f}x")

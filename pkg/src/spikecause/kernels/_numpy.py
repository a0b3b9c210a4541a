"""Pure-numpy reference kernels.

These are the fallback implementations selected by SPIKECAUSE_BACKEND=numpy
(or whenever numba is unavailable). The numba variants in ``_numba`` follow
the same operation order so both backends agree to round-off; for the
simulator the per-neuron arithmetic is written in the identical expression
order, which makes single-neuron traces bit-equal across backends.
"""

import numpy as np

BACKEND_NAME = "numpy"


def izhikevich_run(v, u, a, b, c_reset, d, syn_weight, adjacency, noise):
    """Advance the membrane/recovery state over the whole trace in place.

    ``v`` and ``u`` are (T, n) arrays whose row 0 holds the initial state;
    rows 1..T-1 are filled with post-update (pre-reset) values. ``noise``
    is the (T-1, n) injected-current array. ``syn_weight[i]`` is the signed
    synaptic strength of presynaptic neuron i; ``adjacency[j, i] == 1``
    wires i into j. Returns the first timestep at which a non-finite
    membrane potential appeared, or -1 if the run stayed finite.
    """
    steps = noise.shape[0]
    for t in range(steps):
        spiked = v[t] >= 30.0
        v_eff = np.where(spiked, c_reset, v[t])
        u_eff = np.where(spiked, u[t] + d, u[t])
        current = noise[t] + adjacency @ (spiked * syn_weight)
        v_next = v_eff + (0.04 * v_eff * v_eff + 4.1 * v_eff + 108.0 - u_eff + current)
        u_next = u_eff + a * (b * v_eff - u_eff)
        if not np.all(np.isfinite(v_next)):
            return t + 1
        v[t + 1] = v_next
        u[t + 1] = u_next
    return -1


def softmax_fwd(x):
    """Row softmax of a 2-D array; -inf entries map to exactly 0.

    Returns (y, bad_row) where bad_row is the first row whose entries are
    all -inf (no allowed key), or -1 when every row is well formed.
    """
    m = np.max(x, axis=1)
    bad = np.flatnonzero(np.isneginf(m))
    if bad.size:
        return np.zeros_like(x), int(bad[0])
    e = np.exp(x - m[:, None])
    y = e / np.sum(e, axis=1)[:, None]
    return y, -1


def softmax_bwd(y, dy):
    dot = np.sum(dy * y, axis=1)
    return y * (dy - dot[:, None])


def layernorm_fwd(x, gain, bias, eps):
    """Per-row standardization followed by the affine map.

    Returns (y, xhat, rstd); xhat and rstd are consumed by the backward.
    """
    mu = np.mean(x, axis=1)
    xc = x - mu[:, None]
    var = np.mean(xc * xc, axis=1)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd[:, None]
    return xhat * gain + bias, xhat, rstd


def layernorm_bwd(dy, xhat, rstd, gain):
    dgain = np.sum(dy * xhat, axis=0)
    dbias = np.sum(dy, axis=0)
    dxhat = dy * gain
    m1 = np.mean(dxhat, axis=1)
    m2 = np.mean(dxhat * xhat, axis=1)
    dx = (dxhat - m1[:, None] - xhat * m2[:, None]) * rstd[:, None]
    return dx, dgain, dbias


def adamw_update(p, g, m, v, lr, beta1, beta2, eps, weight_decay, bc1, bc2):
    """One AdamW step on flat views, in place.

    Weight decay is decoupled (applied to the parameter before the adaptive
    update); bc1/bc2 are the precomputed bias corrections 1 - beta^t.
    """
    if weight_decay != 0.0:
        p -= lr * weight_decay * p
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)

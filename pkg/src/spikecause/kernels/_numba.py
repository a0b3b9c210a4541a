"""Numba @njit kernels, the default backend.

Same contracts as ``_numpy``; explicit loops replace array temporaries.
All kernels are single-threaded (no prange) so results are reproducible
run to run. Compiled code is cached on disk after the first call.
"""

import math

import numpy as np
from numba import njit

BACKEND_NAME = "numba"


@njit(cache=True)
def izhikevich_run(v, u, a, b, c_reset, d, syn_weight, adjacency, noise):
    steps = noise.shape[0]
    n = v.shape[1]
    spiked = np.empty(n, np.bool_)
    for t in range(steps):
        for i in range(n):
            spiked[i] = v[t, i] >= 30.0
        for j in range(n):
            if spiked[j]:
                v_eff = c_reset[j]
                u_eff = u[t, j] + d[j]
            else:
                v_eff = v[t, j]
                u_eff = u[t, j]
            current = noise[t, j]
            for i in range(n):
                if spiked[i] and adjacency[j, i] != 0.0:
                    current += syn_weight[i]
            v_next = v_eff + (0.04 * v_eff * v_eff + 4.1 * v_eff + 108.0 - u_eff + current)
            u_next = u_eff + a[j] * (b[j] * v_eff - u_eff)
            if not math.isfinite(v_next):
                return t + 1
            v[t + 1, j] = v_next
            u[t + 1, j] = u_next
    return -1


@njit(cache=True)
def softmax_fwd(x):
    rows, cols = x.shape
    y = np.empty_like(x)
    for r in range(rows):
        m = -np.inf
        for c in range(cols):
            if x[r, c] > m:
                m = x[r, c]
        if m == -np.inf:
            return np.zeros_like(x), r
        total = 0.0
        for c in range(cols):
            e = math.exp(x[r, c] - m)
            y[r, c] = e
            total += e
        inv = 1.0 / total
        for c in range(cols):
            y[r, c] *= inv
    return y, -1


@njit(cache=True)
def softmax_bwd(y, dy):
    rows, cols = y.shape
    dx = np.empty_like(y)
    for r in range(rows):
        dot = 0.0
        for c in range(cols):
            dot += dy[r, c] * y[r, c]
        for c in range(cols):
            dx[r, c] = y[r, c] * (dy[r, c] - dot)
    return dx


@njit(cache=True)
def layernorm_fwd(x, gain, bias, eps):
    rows, cols = x.shape
    y = np.empty_like(x)
    xhat = np.empty_like(x)
    rstd = np.empty(rows, np.float64)
    inv_c = 1.0 / cols
    for r in range(rows):
        mu = 0.0
        for c in range(cols):
            mu += x[r, c]
        mu *= inv_c
        var = 0.0
        for c in range(cols):
            diff = x[r, c] - mu
            var += diff * diff
        var *= inv_c
        rs = 1.0 / math.sqrt(var + eps)
        rstd[r] = rs
        for c in range(cols):
            xh = (x[r, c] - mu) * rs
            xhat[r, c] = xh
            y[r, c] = xh * gain[c] + bias[c]
    return y, xhat, rstd


@njit(cache=True)
def layernorm_bwd(dy, xhat, rstd, gain):
    rows, cols = dy.shape
    dx = np.empty_like(dy)
    dgain = np.zeros(cols, np.float64)
    dbias = np.zeros(cols, np.float64)
    inv_c = 1.0 / cols
    for r in range(rows):
        m1 = 0.0
        m2 = 0.0
        for c in range(cols):
            dxh = dy[r, c] * gain[c]
            m1 += dxh
            m2 += dxh * xhat[r, c]
        m1 *= inv_c
        m2 *= inv_c
        rs = rstd[r]
        for c in range(cols):
            dxh = dy[r, c] * gain[c]
            dx[r, c] = (dxh - m1 - xhat[r, c] * m2) * rs
            dgain[c] += dy[r, c] * xhat[r, c]
            dbias[c] += dy[r, c]
    return dx, dgain, dbias


@njit(cache=True)
def adamw_update(p, g, m, v, lr, beta1, beta2, eps, weight_decay, bc1, bc2):
    size = p.shape[0]
    for i in range(size):
        pi = p[i]
        if weight_decay != 0.0:
            pi -= lr * weight_decay * pi
        mi = beta1 * m[i] + (1.0 - beta1) * g[i]
        vi = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i])
        m[i] = mi
        v[i] = vi
        p[i] = pi - lr * (mi / bc1) / (math.sqrt(vi / bc2) + eps)

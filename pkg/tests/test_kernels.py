"""Kernel contracts, checked against slow scalar re-implementations.

Every numeric claim is recomputed here from first principles (plain Python
loops over floats), then both backend variants are held to it.
"""

import numpy as np
import pytest

from spikecause import backend
from spikecause.kernels import _numpy
from spikecause.rng import Rng

BACKENDS = [_numpy]
if backend.numba_available():
    from spikecause.kernels import _numba

    BACKENDS.append(_numba)


def _ids(mod):
    return mod.BACKEND_NAME


# --- membrane dynamics ---------------------------------------------------


def _scalar_reference(v0, u0, a, b, c_reset, d, currents):
    """Single neuron, plain-float stepping, no coupling."""
    vs = [v0]
    us = [u0]
    v, u = v0, u0
    for i_t in currents:
        if v >= 30.0:
            v = c_reset
            u = u + d
        dv = 0.04 * v * v + 4.1 * v + 108.0 - u + i_t
        du = a * (b * v - u)
        v = v + dv
        u = u + du
        vs.append(v)
        us.append(u)
    return np.array(vs), np.array(us)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_single_neuron_matches_scalar_reference(mod):
    rng = Rng(101)
    currents = rng.normal(mean=5.0, std=np.sqrt(5.0), size=1000)
    want_v, want_u = _scalar_reference(-65.0, 6.5, 0.02, -0.1, -65.0, 2.0, currents)

    v = np.zeros((1001, 1))
    u = np.zeros((1001, 1))
    v[0, 0] = -65.0
    u[0, 0] = 6.5
    bad = mod.izhikevich_run(
        v, u,
        np.array([0.02]), np.array([-0.1]), np.array([-65.0]), np.array([2.0]),
        np.array([5.0]), np.zeros((1, 1)), currents[:, None],
    )
    assert bad == -1
    np.testing.assert_allclose(v[:, 0], want_v, rtol=0, atol=1e-9)
    np.testing.assert_allclose(u[:, 0], want_u, rtol=0, atol=1e-9)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_quiescent_point_increments(mod):
    # At v=-65, u=6.5, I=0 the update is dv=+4.0 exactly and du=0:
    # 0.04*65^2 = 169, 4.1*(-65) = -266.5, 169 - 266.5 + 108 - 6.5 = 4.
    v = np.zeros((2, 1))
    u = np.zeros((2, 1))
    v[0, 0] = -65.0
    u[0, 0] = 6.5
    bad = mod.izhikevich_run(
        v, u,
        np.array([0.02]), np.array([-0.1]), np.array([-65.0]), np.array([2.0]),
        np.array([5.0]), np.zeros((1, 1)), np.zeros((1, 1)),
    )
    assert bad == -1
    assert v[1, 0] == pytest.approx(-61.0, abs=1e-12)
    assert u[1, 0] == pytest.approx(6.5, abs=1e-12)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_reset_and_synaptic_delivery(mod):
    # Neuron 0 starts above threshold; neuron 1 receives its weight as
    # current on the same step the reset is applied.
    v = np.zeros((2, 2))
    u = np.zeros((2, 2))
    v[0] = [31.0, -65.0]
    u[0] = [6.5, 6.5]
    a = np.array([0.02, 0.02])
    b = np.array([-0.1, -0.1])
    c_reset = np.array([-60.0, -65.0])
    d = np.array([2.0, 2.0])
    syn = np.array([5.0, 5.0])
    adj = np.array([[0.0, 0.0], [1.0, 0.0]])
    bad = mod.izhikevich_run(v, u, a, b, c_reset, d, syn, adj, np.zeros((1, 2)))
    assert bad == -1
    # neuron 0 stepped from the reset state (-60, 8.5)
    want0 = -60.0 + (0.04 * 3600.0 - 4.1 * 60.0 + 108.0 - 8.5)
    assert v[1, 0] == pytest.approx(want0, abs=1e-12)
    # neuron 1 stepped from rest with I = 5
    assert v[1, 1] == pytest.approx(-65.0 + 4.0 + 5.0, abs=1e-12)
    assert u[1, 0] == pytest.approx(8.5 + 0.02 * (6.0 - 8.5), abs=1e-12)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_divergence_reports_first_bad_step(mod):
    v = np.zeros((5, 1))
    u = np.zeros((5, 1))
    v[0, 0] = -65.0
    u[0, 0] = 6.5
    noise = np.zeros((4, 1))
    noise[2, 0] = np.inf
    bad = mod.izhikevich_run(
        v, u,
        np.array([0.02]), np.array([-0.1]), np.array([-65.0]), np.array([2.0]),
        np.array([5.0]), np.zeros((1, 1)), noise,
    )
    assert bad == 3


@pytest.mark.skipif(len(BACKENDS) < 2, reason="numba unavailable")
def test_backends_agree_on_coupled_network():
    rng = Rng(77)
    n, steps = 8, 400
    adj = (rng.uniform(size=(n, n)) < 0.4).astype(np.float64)
    np.fill_diagonal(adj, 0.0)
    syn = np.where(rng.uniform(size=n) < 0.25, -5.0, 5.0)
    noise = rng.normal(mean=5.0, std=np.sqrt(5.0), size=(steps, n))
    a = np.full(n, 0.02)
    b = np.full(n, -0.1)
    c_reset = np.full(n, -65.0)
    d = np.full(n, 2.0)

    results = []
    for mod in BACKENDS:
        v = np.zeros((steps + 1, n))
        u = np.zeros((steps + 1, n))
        v[0] = -65.0
        u[0] = 6.5
        bad = mod.izhikevich_run(v, u, a, b, c_reset, d, syn, adj.copy(), noise.copy())
        assert bad == -1
        results.append((v.copy(), u.copy()))
    # Synaptic sums are exact integers times 5, so both backends round
    # identically and the traces are bit-equal.
    np.testing.assert_array_equal(results[0][0], results[1][0])
    np.testing.assert_array_equal(results[0][1], results[1][1])


# --- softmax -------------------------------------------------------------


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_softmax_rows_sum_to_one(mod):
    rng = Rng(5)
    x = rng.normal(size=(40, 17)) * 3.0
    y, bad = mod.softmax_fwd(x)
    assert bad == -1
    np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-12)
    assert (y > 0).all()


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_softmax_masked_entries_exactly_zero(mod):
    x = np.array([[1.0, -np.inf, 2.0], [-np.inf, 0.5, -np.inf]])
    y, bad = mod.softmax_fwd(x)
    assert bad == -1
    assert y[0, 1] == 0.0
    assert y[1, 0] == 0.0 and y[1, 2] == 0.0
    assert y[1, 1] == 1.0
    e = np.exp([1.0 - 2.0, 0.0])
    np.testing.assert_allclose(y[0, [0, 2]], e / e.sum(), atol=1e-15)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_softmax_reports_dead_row(mod):
    x = np.array([[0.0, 1.0], [-np.inf, -np.inf], [1.0, 1.0]])
    y, bad = mod.softmax_fwd(x)
    assert bad == 1
    assert np.all(y == 0.0)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_softmax_shift_invariance(mod):
    rng = Rng(13)
    x = rng.normal(size=(6, 9))
    y1, _ = mod.softmax_fwd(x)
    y2, _ = mod.softmax_fwd(x + 123.0)
    np.testing.assert_allclose(y1, y2, atol=1e-12)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_softmax_bwd_matches_finite_difference(mod):
    rng = Rng(29)
    x = rng.normal(size=(4, 6))
    dy = rng.normal(size=(4, 6))
    y, _ = mod.softmax_fwd(x)
    dx = mod.softmax_bwd(y, dy)
    eps = 1e-6
    for r in range(4):
        for c in range(6):
            xp = x.copy()
            xp[r, c] += eps
            xm = x.copy()
            xm[r, c] -= eps
            up = (mod.softmax_fwd(xp)[0] * dy).sum()
            dn = (mod.softmax_fwd(xm)[0] * dy).sum()
            fd = (up - dn) / (2 * eps)
            assert dx[r, c] == pytest.approx(fd, abs=2e-8)


# --- layer norm ----------------------------------------------------------


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_layernorm_standardizes_rows(mod):
    rng = Rng(41)
    x = rng.normal(size=(10, 32)) * 4.0 + 7.0
    gain = np.ones(32)
    bias = np.zeros(32)
    y, xhat, rstd = mod.layernorm_fwd(x, gain, bias, 1e-5)
    np.testing.assert_allclose(y.mean(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(y.std(axis=1), 1.0, atol=1e-3)
    np.testing.assert_array_equal(y, xhat)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_layernorm_affine_applied(mod):
    x = np.array([[1.0, 2.0, 3.0]])
    gain = np.array([2.0, 2.0, 2.0])
    bias = np.array([0.5, 0.5, 0.5])
    y, xhat, _ = mod.layernorm_fwd(x, gain, bias, 0.0)
    np.testing.assert_allclose(y, xhat * 2.0 + 0.5, atol=1e-15)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_layernorm_bwd_matches_finite_difference(mod):
    rng = Rng(43)
    x = rng.normal(size=(3, 8))
    gain = rng.normal(size=8) * 0.3 + 1.0
    bias = rng.normal(size=8) * 0.1
    dy = rng.normal(size=(3, 8))
    eps_ln = 1e-5

    _, xhat, rstd = mod.layernorm_fwd(x, gain, bias, eps_ln)
    dx, dgain, dbias = mod.layernorm_bwd(dy, xhat, rstd, gain)

    def loss(xv, gv, bv):
        yv, _, _ = mod.layernorm_fwd(xv, gv, bv, eps_ln)
        return (yv * dy).sum()

    h = 1e-6
    for r in range(3):
        for c in range(8):
            xp = x.copy()
            xp[r, c] += h
            xm = x.copy()
            xm[r, c] -= h
            fd = (loss(xp, gain, bias) - loss(xm, gain, bias)) / (2 * h)
            assert dx[r, c] == pytest.approx(fd, abs=5e-7)
    for c in range(8):
        gp = gain.copy()
        gp[c] += h
        gm = gain.copy()
        gm[c] -= h
        fd = (loss(x, gp, bias) - loss(x, gm, bias)) / (2 * h)
        assert dgain[c] == pytest.approx(fd, abs=5e-7)
        bp = bias.copy()
        bp[c] += h
        bm = bias.copy()
        bm[c] -= h
        fd = (loss(x, gain, bp) - loss(x, gain, bm)) / (2 * h)
        assert dbias[c] == pytest.approx(fd, abs=5e-7)


# --- optimizer -----------------------------------------------------------


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_adamw_single_step_closed_form(mod):
    p = np.array([1.0, -2.0])
    g = np.array([0.5, 0.25])
    m = np.zeros(2)
    v = np.zeros(2)
    lr, b1, b2, eps, wd = 0.1, 0.9, 0.999, 1e-8, 0.01
    mod.adamw_update(p, g, m, v, lr, b1, b2, eps, wd, 1 - b1, 1 - b2)

    # decay first, then the bias-corrected adaptive step
    want = np.array([1.0, -2.0])
    want -= lr * wd * want
    m_ref = (1 - b1) * g
    v_ref = (1 - b2) * g * g
    want -= lr * (m_ref / (1 - b1)) / (np.sqrt(v_ref / (1 - b2)) + eps)
    np.testing.assert_allclose(p, want, atol=1e-15)
    np.testing.assert_allclose(m, m_ref, atol=1e-15)
    np.testing.assert_allclose(v, v_ref, atol=1e-15)


@pytest.mark.parametrize("mod", BACKENDS, ids=_ids)
def test_adamw_decay_is_decoupled(mod):
    # With zero gradient the adaptive term vanishes and only the decay
    # multiplier acts; a coupled (L2-in-gradient) variant would move m/v.
    p = np.array([3.0])
    m = np.zeros(1)
    v = np.zeros(1)
    mod.adamw_update(p, np.zeros(1), m, v, 0.1, 0.9, 0.999, 1e-8, 0.5, 0.1, 0.001)
    assert p[0] == pytest.approx(3.0 * (1 - 0.1 * 0.5), abs=1e-15)
    assert m[0] == 0.0 and v[0] == 0.0


@pytest.mark.skipif(len(BACKENDS) < 2, reason="numba unavailable")
def test_backends_agree_on_dense_kernels():
    rng = Rng(99)
    x = rng.normal(size=(30, 25))
    dy = rng.normal(size=(30, 25))
    y_np, _ = _numpy.softmax_fwd(x)
    y_nb, _ = _numba.softmax_fwd(x)
    np.testing.assert_allclose(y_nb, y_np, atol=1e-14)
    np.testing.assert_allclose(
        _numba.softmax_bwd(y_np, dy), _numpy.softmax_bwd(y_np, dy), atol=1e-14
    )

    gain = rng.normal(size=25) * 0.2 + 1.0
    bias = rng.normal(size=25) * 0.1
    f_np = _numpy.layernorm_fwd(x, gain, bias, 1e-5)
    f_nb = _numba.layernorm_fwd(x, gain, bias, 1e-5)
    for a, b in zip(f_np, f_nb):
        np.testing.assert_allclose(b, a, atol=1e-13)
    b_np = _numpy.layernorm_bwd(dy, f_np[1], f_np[2], gain)
    b_nb = _numba.layernorm_bwd(dy, f_np[1], f_np[2], gain)
    for a, b in zip(b_np, b_nb):
        np.testing.assert_allclose(b, a, atol=1e-13)

    p1 = rng.normal(size=200)
    g1 = rng.normal(size=200)
    state = [p1.copy(), g1, np.zeros(200), np.zeros(200)]
    state2 = [p1.copy(), g1, np.zeros(200), np.zeros(200)]
    _numpy.adamw_update(state[0], state[1], state[2], state[3],
                        1e-3, 0.9, 0.999, 1e-8, 0.01, 0.1, 0.001)
    _numba.adamw_update(state2[0], state2[1], state2[2], state2[3],
                        1e-3, 0.9, 0.999, 1e-8, 0.01, 0.1, 0.001)
    np.testing.assert_allclose(state2[0], state[0], atol=1e-15)


# --- backend selection ---------------------------------------------------


def test_resolve_backend_env(monkeypatch):
    monkeypatch.setenv(backend.ENV_VAR, "numpy")
    assert backend.resolve_backend() == "numpy"
    monkeypatch.setenv(backend.ENV_VAR, "bogus")
    with pytest.raises(ValueError):
        backend.resolve_backend()
    monkeypatch.delenv(backend.ENV_VAR)
    assert backend.resolve_backend() in ("numba", "numpy")


def test_active_backend_matches_environment():
    from spikecause import kernels

    assert kernels.BACKEND in ("numba", "numpy")

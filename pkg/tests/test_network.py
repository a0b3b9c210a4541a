"""Topology sampling: wiring statistics, cell types, serialization."""

import numpy as np
import pytest

from spikecause.errors import ConfigError
from spikecause.network import (
    NetworkTopology,
    generate_topology,
    sample_neuron_params,
)
from spikecause.rng import Rng


def test_adjacency_shape_and_zero_diagonal():
    topo = generate_topology(10, 0.5, Rng(1))
    assert topo.adjacency.shape == (10, 10)
    np.testing.assert_array_equal(np.diag(topo.adjacency), 0.0)
    assert set(np.unique(topo.adjacency)) <= {0.0, 1.0}


def test_edge_probability_statistics():
    # 90 off-diagonal slots per draw; the mean over many topologies must
    # approach p (binomial std of the mean ~ 0.005 here).
    count = 0
    for seed in range(80):
        topo = generate_topology(10, 0.3, Rng(seed))
        count += int(topo.adjacency.sum())
    rate = count / (80 * 90)
    assert abs(rate - 0.3) < 0.02


def test_p_extremes():
    full = generate_topology(6, 1.0, Rng(3))
    assert full.adjacency.sum() == 30  # all off-diagonal pairs
    empty = generate_topology(6, 0.0, Rng(3))
    assert empty.adjacency.sum() == 0


def test_inhibitory_count_is_a_fifth_rounded_down():
    for n, want in [(5, 1), (10, 2), (20, 4), (40, 8), (4, 0), (9, 1)]:
        topo = generate_topology(n, 0.5, Rng(n))
        assert int((~topo.excitatory).sum()) == want


def test_inhibitory_position_varies_with_seed():
    # labels are shuffled, so the inhibitory slot must move around
    positions = set()
    for seed in range(30):
        topo = generate_topology(5, 0.5, Rng(seed))
        positions.add(int(np.flatnonzero(~topo.excitatory)[0]))
    assert len(positions) >= 3


def test_cell_type_parameter_ranges():
    topo = generate_topology(40, 0.5, Rng(7))
    exc = topo.excitatory
    # excitatory: fixed a, reset in [-65, -50], d in [2, 8], weight +5
    np.testing.assert_array_equal(topo.a[exc], 0.02)
    assert (topo.c_reset[exc] >= -65.0).all() and (topo.c_reset[exc] <= -50.0).all()
    assert (topo.d[exc] >= 2.0).all() and (topo.d[exc] <= 8.0).all()
    np.testing.assert_array_equal(topo.syn_weight[exc], 5.0)
    # inhibitory: a in [0.02, 0.1], fixed reset and d, weight -5
    inh = ~exc
    assert (topo.a[inh] >= 0.02).all() and (topo.a[inh] <= 0.1).all()
    np.testing.assert_array_equal(topo.c_reset[inh], -65.0)
    np.testing.assert_array_equal(topo.d[inh], 2.0)
    np.testing.assert_array_equal(topo.syn_weight[inh], -5.0)
    # shared recovery coupling
    np.testing.assert_array_equal(topo.b, -0.1)


def test_theta_links_c_and_d_for_excitatory():
    # c = -65 + 15 t^2 and d = 8 - 6 t^2 use the same theta, so
    # (c + 65) / 15 == (8 - d) / 6 elementwise.
    topo = generate_topology(30, 0.5, Rng(11))
    exc = topo.excitatory
    t2_from_c = (topo.c_reset[exc] + 65.0) / 15.0
    t2_from_d = (8.0 - topo.d[exc]) / 6.0
    np.testing.assert_allclose(t2_from_c, t2_from_d, atol=1e-12)


def test_sample_neuron_params_consumes_one_theta_per_neuron():
    rng = Rng(19)
    sample_neuron_params(np.array([True, False, True]), rng)
    twin = Rng(19)
    twin.uniform(size=3)
    assert rng.uniform() == twin.uniform()


def test_same_seed_same_topology():
    t1 = generate_topology(12, 0.4, Rng(42))
    t2 = generate_topology(12, 0.4, Rng(42))
    np.testing.assert_array_equal(t1.adjacency, t2.adjacency)
    np.testing.assert_array_equal(t1.excitatory, t2.excitatory)
    np.testing.assert_array_equal(t1.a, t2.a)


def test_argument_validation():
    with pytest.raises(ConfigError):
        generate_topology(1, 0.5, Rng(1))
    with pytest.raises(ConfigError):
        generate_topology(5, 1.5, Rng(1))
    with pytest.raises(ConfigError):
        generate_topology(5, 0.5, Rng(1), coupling_strength=0.0)


def test_dict_roundtrip():
    topo = generate_topology(8, 0.5, Rng(33))
    clone = NetworkTopology.from_dict(topo.to_dict())
    np.testing.assert_array_equal(clone.adjacency, topo.adjacency)
    np.testing.assert_array_equal(clone.excitatory, topo.excitatory)
    np.testing.assert_allclose(clone.c_reset, topo.c_reset, atol=0)
    np.testing.assert_allclose(clone.syn_weight, topo.syn_weight, atol=0)


def test_from_dict_validates():
    topo = generate_topology(5, 0.5, Rng(2))
    payload = topo.to_dict()
    payload["adjacency"][2][2] = 1
    with pytest.raises(ConfigError):
        NetworkTopology.from_dict(payload)
    payload = topo.to_dict()
    payload["a"] = payload["a"][:-1]
    with pytest.raises(ConfigError):
        NetworkTopology.from_dict(payload)

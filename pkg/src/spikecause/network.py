"""Random directed network topologies and per-neuron dynamics parameters.

A topology fixes everything static about a simulated circuit: who wires
into whom, which neurons are excitatory, the signed synaptic strengths,
and the four Izhikevich coefficients of every cell. ``adjacency[j, i]``
is 1 when neuron i drives neuron j, so rows index targets and columns
index sources; every causal matrix downstream uses the same orientation.
"""

from dataclasses import dataclass

import numpy as np

from spikecause.errors import ConfigError

# one inhibitory neuron per four excitatory ones
INHIBITORY_FRACTION = 0.2


@dataclass
class NetworkTopology:
    n: int
    adjacency: np.ndarray          # (n, n) 0/1 floats, zero diagonal
    excitatory: np.ndarray         # (n,) bools
    syn_weight: np.ndarray         # (n,) signed strength of each source
    a: np.ndarray
    b: np.ndarray
    c_reset: np.ndarray
    d: np.ndarray

    def to_dict(self):
        return {
            "n": int(self.n),
            "adjacency": self.adjacency.astype(int).tolist(),
            "excitatory": [bool(x) for x in self.excitatory],
            "syn_weight": [float(x) for x in self.syn_weight],
            "a": [float(x) for x in self.a],
            "b": [float(x) for x in self.b],
            "c_reset": [float(x) for x in self.c_reset],
            "d": [float(x) for x in self.d],
        }

    @classmethod
    def from_dict(cls, payload):
        n = int(payload["n"])
        topo = cls(
            n=n,
            adjacency=np.array(payload["adjacency"], dtype=np.float64),
            excitatory=np.array(payload["excitatory"], dtype=bool),
            syn_weight=np.array(payload["syn_weight"], dtype=np.float64),
            a=np.array(payload["a"], dtype=np.float64),
            b=np.array(payload["b"], dtype=np.float64),
            c_reset=np.array(payload["c_reset"], dtype=np.float64),
            d=np.array(payload["d"], dtype=np.float64),
        )
        _validate(topo)
        return topo


def _validate(topo):
    n = topo.n
    if topo.adjacency.shape != (n, n):
        raise ConfigError(f"adjacency must be ({n}, {n})")
    if np.any(np.diag(topo.adjacency) != 0):
        raise ConfigError("self-connections are not allowed")
    for name in ("excitatory", "syn_weight", "a", "b", "c_reset", "d"):
        arr = getattr(topo, name)
        if arr.shape != (n,):
            raise ConfigError(f"{name} must have shape ({n},)")


def sample_neuron_params(excitatory, rng):
    """Draw heterogeneous Izhikevich coefficients, one theta per neuron.

    Excitatory cells spread over regular-spiking variants
    (c = -65 + 15 theta^2, d = 8 - 6 theta^2); inhibitory cells over
    fast-spiking variants (a = 0.02 + 0.08 theta). Both share b = -0.1.
    """
    excitatory = np.asarray(excitatory, dtype=bool)
    n = excitatory.size
    theta = rng.uniform(n)
    a = np.where(excitatory, 0.02, 0.02 + 0.08 * theta)
    b = np.full(n, -0.1)
    c_reset = np.where(excitatory, -65.0 + 15.0 * theta ** 2, -65.0)
    d = np.where(excitatory, 8.0 - 6.0 * theta ** 2, 2.0)
    return a, b, c_reset, d


def generate_topology(n, p, rng, coupling_strength=5.0):
    """Sample a directed Erdos-Renyi circuit with mixed cell types.

    Each ordered pair (i -> j), i != j, is wired independently with
    probability ``p``. A fifth of the population (rounded down) is
    inhibitory, with the labels assigned by a shuffle so cell type is
    independent of index. Source strengths are +/- coupling_strength.
    """
    if n < 2:
        raise ConfigError(f"need at least 2 neurons, got {n}")
    if not (0.0 <= p <= 1.0):
        raise ConfigError(f"edge probability must lie in [0, 1], got {p}")
    if coupling_strength <= 0.0:
        raise ConfigError("coupling strength must be positive")

    edges = (rng.uniform((n, n)) < p).astype(np.float64)
    np.fill_diagonal(edges, 0.0)

    n_inh = int(n * INHIBITORY_FRACTION)
    excitatory = np.array([True] * (n - n_inh) + [False] * n_inh)
    rng.shuffle(excitatory)

    a, b, c_reset, d = sample_neuron_params(excitatory, rng)
    syn_weight = np.where(excitatory, coupling_strength, -coupling_strength)
    topo = NetworkTopology(
        n=n, adjacency=edges, excitatory=excitatory, syn_weight=syn_weight,
        a=a, b=b, c_reset=c_reset, d=d,
    )
    _validate(topo)
    return topo

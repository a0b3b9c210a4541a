"""Forward-Euler integration of coupled Izhikevich neurons.

The membrane model is

    v' = 0.04 v^2 + 4.1 v + 108 - u + I
    u' = a (b v - u)

stepped at 1 ms. Whenever v crosses 30 mV the recorded value keeps the
spike peak, and the *next* update starts from the reset state
(v <- c_reset, u <- u + d). A spike at step t contributes its synaptic
weight to the input current used for the t -> t+1 update, alongside
Gaussian noise drive.
"""

from dataclasses import dataclass

import numpy as np

from spikecause import kernels
from spikecause.errors import ConfigError, DivergenceError

SPIKE_THRESHOLD = 30.0
V_INIT = -65.0
NOISE_MEAN = 5.0
NOISE_STD = np.sqrt(5.0)


@dataclass
class SimulationTrace:
    v: np.ndarray        # (steps + 1, n) membrane potentials, row 0 initial
    u: np.ndarray        # (steps + 1, n) recovery variables
    spikes: np.ndarray   # (steps + 1, n) bools, v >= threshold

    @property
    def steps(self):
        return self.v.shape[0] - 1

    @property
    def n(self):
        return self.v.shape[1]


def step(v, u, a, b, c_reset, d, current):
    """Single reference update, returned rather than written in place.

    Inputs may be scalars or aligned 1-D arrays. ``current`` is the total
    input I for this step (noise plus synaptic drive). Returns
    (v_next, u_next, spiked) where ``spiked`` flags the *incoming* state.
    """
    v = np.asarray(v, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    spiked = v >= SPIKE_THRESHOLD
    v_eff = np.where(spiked, c_reset, v)
    u_eff = np.where(spiked, u + d, u)
    v_next = v_eff + (0.04 * v_eff * v_eff + 4.1 * v_eff + 108.0 - u_eff + current)
    u_next = u_eff + a * (b * v_eff - u_eff)
    return v_next, u_next, spiked


def simulate(topology, steps, rng, noise_mean=NOISE_MEAN, noise_std=NOISE_STD):
    """Run the network for ``steps`` milliseconds from the standard rest state.

    Every neuron starts at v = -65, u = b * v. The noise drive is drawn
    up front from ``rng`` so the trace depends only on (topology, steps,
    rng state), not on the compute backend. Raises DivergenceError if the
    state leaves the representable range.
    """
    if steps < 1:
        raise ConfigError(f"need at least 1 step, got {steps}")
    n = topology.n
    noise = rng.normal(noise_mean, noise_std, (steps, n))

    v = np.empty((steps + 1, n))
    u = np.empty((steps + 1, n))
    v[0] = V_INIT
    u[0] = topology.b * V_INIT

    bad = kernels.izhikevich_run(
        v, u, topology.a, topology.b, topology.c_reset, topology.d,
        topology.syn_weight, topology.adjacency, noise,
    )
    if bad >= 0:
        raise DivergenceError(
            f"membrane potential became non-finite at step {bad}", step=bad
        )
    return SimulationTrace(v=v, u=u, spikes=v >= SPIKE_THRESHOLD)

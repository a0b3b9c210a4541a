"""Named parameter collection with AdamW state and gradient bookkeeping.

The store owns every trainable tensor of a model, keyed by dotted names.
Iteration order is always lexicographic by name so that checkpoints and
flattened views are reproducible regardless of construction order.
"""

import numpy as np

from spikecause import kernels, tensor
from spikecause.errors import ConfigError, GradientStateError


class ParamStore:
    def __init__(self):
        self._params = {}
        self._m = {}
        self._v = {}
        self.step_count = 0
        # set after a backward pass, cleared by zero_grads / adamw_step;
        # guards against accumulating two backward passes into one update
        self._pending = False
        self._flat = None    # (p, g, m, v) buffers once frozen

    def add(self, name, value):
        if self._flat is not None:
            raise ConfigError("cannot add parameters to a frozen store")
        if name in self._params:
            raise ConfigError(f"duplicate parameter name: {name}")
        t = tensor.Tensor(np.array(value, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        self._m[name] = np.zeros_like(t.data)
        self._v[name] = np.zeros_like(t.data)
        return t

    def freeze(self):
        """Repack parameters and optimizer state into contiguous buffers.

        Each parameter tensor's array becomes a view into one flat buffer
        (lexicographic order), letting the optimizer update everything in
        a single fused kernel call. Loading, saving and per-name access
        keep working unchanged. Idempotent.
        """
        if self._flat is not None or not self._params:
            return
        names = self.names()
        flat_p = np.concatenate([self._params[n].data.reshape(-1) for n in names])
        flat_m = np.concatenate([self._m[n].reshape(-1) for n in names])
        flat_v = np.concatenate([self._v[n].reshape(-1) for n in names])
        flat_g = np.zeros_like(flat_p)
        offset = 0
        for n in names:
            p = self._params[n]
            size = p.data.size
            shape = p.data.shape
            p.data = flat_p[offset:offset + size].reshape(shape)
            self._m[n] = flat_m[offset:offset + size].reshape(shape)
            self._v[n] = flat_v[offset:offset + size].reshape(shape)
            offset += size
        self._flat = (flat_p, flat_g, flat_m, flat_v)

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def names(self):
        return sorted(self._params)

    def items(self):
        for name in self.names():
            yield name, self._params[name]

    def total_size(self):
        return sum(p.data.size for p in self._params.values())

    def zero_grads(self):
        for p in self._params.values():
            p.grad = None
        self._pending = False

    def adamw_step(self, lr, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.01):
        """One decoupled-weight-decay Adam update over every parameter.

        Parameters that received no gradient are updated as if their
        gradient were zero (decay still applies). Grads are cleared at
        the end so the next backward pass starts fresh.
        """
        if lr <= 0.0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ConfigError("adam betas must lie in [0, 1)")
        self.step_count += 1
        bc1 = 1.0 - beta1 ** self.step_count
        bc2 = 1.0 - beta2 ** self.step_count
        if self._flat is not None:
            flat_p, flat_g, flat_m, flat_v = self._flat
            offset = 0
            for name in self.names():
                p = self._params[name]
                size = p.data.size
                dest = flat_g[offset:offset + size]
                if p.grad is None:
                    dest[:] = 0.0
                else:
                    np.copyto(dest, p.grad.reshape(-1))
                offset += size
            kernels.adamw_update(
                flat_p, flat_g, flat_m, flat_v,
                float(lr), float(beta1), float(beta2), float(eps),
                float(weight_decay), bc1, bc2,
            )
        else:
            for name in self.names():
                p = self._params[name]
                g = p.grad
                if g is None:
                    g = np.zeros_like(p.data)
                kernels.adamw_update(
                    p.data.reshape(-1),
                    np.ascontiguousarray(g.reshape(-1)),
                    self._m[name].reshape(-1),
                    self._v[name].reshape(-1),
                    float(lr), float(beta1), float(beta2), float(eps),
                    float(weight_decay), bc1, bc2,
                )
        self.zero_grads()

    # checkpoint support ----------------------------------------------------

    def to_flat(self):
        """Concatenate all parameters (lexicographic order) into one vector."""
        if self._flat is not None:
            return self._flat[0].copy()
        if not self._params:
            return np.zeros(0)
        return np.concatenate([self._params[n].data.reshape(-1) for n in self.names()])

    def load_flat(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.total_size():
            raise ConfigError(
                f"flat vector has {vec.size} entries, store holds {self.total_size()}"
            )
        offset = 0
        for name in self.names():
            p = self._params[name]
            n = p.data.size
            p.data[...] = vec[offset:offset + n].reshape(p.data.shape)
            offset += n

    def optimizer_state(self):
        """Flat m / v vectors plus the step counter, for checkpointing."""
        if not self._params:
            return np.zeros(0), np.zeros(0), self.step_count
        m = np.concatenate([self._m[n].reshape(-1) for n in self.names()])
        v = np.concatenate([self._v[n].reshape(-1) for n in self.names()])
        return m, v, self.step_count

    def load_optimizer_state(self, m, v, step_count):
        m = np.asarray(m, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if m.size != self.total_size() or v.size != self.total_size():
            raise ConfigError("optimizer state size does not match parameters")
        offset = 0
        for name in self.names():
            n = self._m[name].size
            self._m[name][...] = m[offset:offset + n].reshape(self._m[name].shape)
            self._v[name][...] = v[offset:offset + n].reshape(self._v[name].shape)
            offset += n
        self.step_count = int(step_count)


def backward(loss, store):
    """Backward pass routed through the store's accumulation guard.

    Raises if a previous backward's gradients are still pending, which
    would silently sum two batches into one optimizer step.
    """
    if store._pending:
        raise GradientStateError(
            "gradients from a previous backward pass were never consumed"
        )
    tensor.backward(loss)
    store._pending = True

"""Dense float64 tensors with reverse-mode automatic differentiation.

A small tape-based engine: every operation records its parents and a
backward closure on the result, and :func:`backward` replays the tape in
reverse topological order. Arrays are always 64-bit floats; softmax and
layer norm dispatch to the switchable numba/numpy kernels.

Masking uses true ``-inf`` logits so masked-out attention weights are
exactly zero, which is what makes the information-separation guarantees
of the model exact rather than approximate.

Set ``SPIKECAUSE_DEBUG=1`` to assert after every forward op that no NaN
appeared (``-inf`` is legal in masked logits and therefore not flagged).
"""

import os
from contextlib import contextmanager

import numpy as np

from spikecause import kernels
from spikecause.errors import DimensionError, GradientStateError, MaskingError

_DEBUG = os.environ.get("SPIKECAUSE_DEBUG", "") not in ("", "0")

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable tape recording inside the block (evaluation mode)."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward",
                 "_consumed", "_grad_owned")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self._consumed = False
        self._grad_owned = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def item(self):
        return float(self.data.item())


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _check_debug(arr):
    if _DEBUG and np.isnan(arr).any():
        raise FloatingPointError("NaN produced by a forward op")


def _node(data, parents, backward_fn):
    _check_debug(data)
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _accum(t, g):
    # First accumulation keeps a reference without copying; the incoming
    # array may be shared with another tensor's grad (add hands the same
    # buffer to both parents), so a second accumulation must allocate a
    # fresh sum instead of writing in place.  Only once this tensor owns
    # its buffer is += safe.
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g
        t._grad_owned = False
    elif t._grad_owned:
        t.grad += g
    else:
        t.grad = t.grad + g
        t._grad_owned = True


def _unbroadcast(g, shape):
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def backward(loss):
    """Run reverse-mode accumulation from a scalar loss.

    Gradients land in ``.grad`` of every tensor with ``requires_grad``.
    The tape is released afterwards; a second call on the same loss raises.
    """
    if loss.data.size != 1:
        raise DimensionError("backward requires a scalar loss")
    if loss._consumed:
        raise GradientStateError("backward already ran for this loss")
    loss._consumed = True

    topo = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
        node._backward = None
        node._parents = ()


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _node(a.data + b.data, (a, b), bwd)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _node(a.data - b.data, (a, b), bwd)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(a.data * b.data, (a, b), bwd)


def scale(a, factor):
    factor = float(factor)

    def bwd(g):
        _accum(a, g * factor)

    return _node(a.data * factor, (a,), bwd)


def matmul(a, b):
    """Matrix product with the usual stacked-batch broadcasting.

    Backward: dA = dC @ B^T, dB = A^T @ dC, reduced over broadcast axes.
    The inner reduction is delegated to BLAS, which is deterministic for a
    fixed build and thread count.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise DimensionError("matmul operands must have ndim >= 2")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise DimensionError(
            f"matmul inner dimensions disagree: {a.data.shape} @ {b.data.shape}"
        )

    def bwd(g):
        _accum(a, _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape))
        _accum(b, _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape))

    return _node(a.data @ b.data, (a, b), bwd)


def linear(x, w, b=None):
    """Fused ``x @ w + b`` over the last axis, for any leading shape."""
    d_in, d_out = w.data.shape
    if x.data.shape[-1] != d_in:
        raise DimensionError(
            f"linear expects last axis {d_in}, got {x.data.shape}"
        )
    lead = x.data.shape[:-1]
    x2 = x.data.reshape(-1, d_in)
    y2 = x2 @ w.data
    if b is not None:
        y2 += b.data
    parents = (x, w) if b is None else (x, w, b)

    def bwd(g):
        g2 = np.ascontiguousarray(g.reshape(-1, d_out))
        _accum(x, (g2 @ w.data.T).reshape(x.data.shape))
        _accum(w, x2.T @ g2)
        if b is not None:
            _accum(b, g2.sum(axis=0))

    return _node(y2.reshape(lead + (d_out,)), parents, bwd)


def reshape(x, shape):
    old = x.data.shape

    def bwd(g):
        _accum(x, g.reshape(old))

    return _node(x.data.reshape(shape), (x,), bwd)


def transpose(x, axes):
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def bwd(g):
        _accum(x, g.transpose(inverse))

    return _node(x.data.transpose(axes), (x,), bwd)


def concat_last(a, b):
    split = a.data.shape[-1]

    def bwd(g):
        _accum(a, g[..., :split])
        _accum(b, g[..., split:])

    return _node(np.concatenate([a.data, b.data], axis=-1), (a, b), bwd)


def gather_rows(table, indices):
    """Row lookup ``table[indices]``; backward scatter-adds into the table."""
    indices = np.asarray(indices)

    def bwd(g):
        if table.requires_grad:
            acc = np.zeros_like(table.data)
            np.add.at(acc, indices, g)
            _accum(table, acc)

    return _node(table.data[indices], (table,), bwd)


def relu(x):
    mask = x.data > 0

    def bwd(g):
        _accum(x, g * mask)

    return _node(np.maximum(x.data, 0.0), (x,), bwd)


def split_heads(x, heads, d_head):
    """(B, L, heads*d_head) -> contiguous (B, heads, L, d_head)."""
    b, length, wide = x.data.shape
    if wide != heads * d_head:
        raise DimensionError(f"cannot split {wide} into {heads}x{d_head}")
    y = np.ascontiguousarray(
        x.data.reshape(b, length, heads, d_head).transpose(0, 2, 1, 3)
    )

    def bwd(g):
        _accum(x, np.ascontiguousarray(g.transpose(0, 2, 1, 3))
               .reshape(b, length, wide))

    return _node(y, (x,), bwd)


def merge_heads(x):
    """(B, heads, L, d_head) -> contiguous (B, L, heads*d_head)."""
    b, heads, length, d_head = x.data.shape
    y = np.ascontiguousarray(x.data.transpose(0, 2, 1, 3)) \
        .reshape(b, length, heads * d_head)

    def bwd(g):
        _accum(x, np.ascontiguousarray(
            g.reshape(b, length, heads, d_head).transpose(0, 2, 1, 3)
        ))

    return _node(y, (x,), bwd)


def split_blocks(x, n, heads, d_head):
    """(B, n*per, heads*d_head) -> contiguous (B, n, heads, per, d_head).

    Groups the neuron-major token axis into per-neuron blocks so local
    attention can run without masks.
    """
    b, length, wide = x.data.shape
    if length % n or wide != heads * d_head:
        raise DimensionError(
            f"cannot block {x.data.shape} into n={n}, {heads}x{d_head}"
        )
    per = length // n
    y = np.ascontiguousarray(
        x.data.reshape(b, n, per, heads, d_head).transpose(0, 1, 3, 2, 4)
    )

    def bwd(g):
        _accum(x, np.ascontiguousarray(g.transpose(0, 1, 3, 2, 4))
               .reshape(b, length, wide))

    return _node(y, (x,), bwd)


def merge_blocks(x):
    """(B, n, heads, per, d_head) -> contiguous (B, n*per, heads*d_head)."""
    b, n, heads, per, d_head = x.data.shape
    y = np.ascontiguousarray(x.data.transpose(0, 1, 3, 2, 4)) \
        .reshape(b, n * per, heads * d_head)

    def bwd(g):
        _accum(x, np.ascontiguousarray(
            g.reshape(b, n, per, heads, d_head).transpose(0, 1, 3, 2, 4)
        ))

    return _node(y, (x,), bwd)


def dropout(x, p, rng, training):
    """Inverted dropout driven by the seeded rng; identity in eval mode."""
    if not training or p <= 0.0:
        return x
    keep = (rng.uniform(x.data.shape) >= p) / (1.0 - p)

    def bwd(g):
        _accum(x, g * keep)

    return _node(x.data * keep, (x,), bwd)


def softmax_last(x, mask=None):
    """Softmax over the last axis; ``mask`` adds 0 / -inf to the logits.

    Entries masked to -inf come out exactly 0. A row with every entry
    masked raises :class:`MaskingError`.
    """
    z = x.data if mask is None else x.data + mask
    cols = z.shape[-1]
    flat = np.ascontiguousarray(z.reshape(-1, cols))
    y2, bad_row = kernels.softmax_fwd(flat)
    if bad_row >= 0:
        raise MaskingError(f"softmax row {bad_row} has no allowed entry")
    y = y2.reshape(z.shape)

    def bwd(g):
        g2 = np.ascontiguousarray(g.reshape(-1, cols))
        dx = kernels.softmax_bwd(y2, g2).reshape(z.shape)
        _accum(x, dx)

    return _node(y, (x,), bwd)


def softmax_rows(m):
    """Row softmax of a 2-D tensor (the general op restricted to matrices)."""
    if as_tensor(m).data.ndim != 2:
        raise DimensionError("softmax_rows expects a 2-D tensor")
    return softmax_last(as_tensor(m))


def layer_norm(x, gain, bias, eps=1e-5):
    """Standardize the last axis to mean 0 / variance 1, then apply gain+bias."""
    d = x.data.shape[-1]
    if d < 2:
        raise DimensionError("layer_norm needs a feature axis of size >= 2")
    if gain.data.shape != (d,) or bias.data.shape != (d,):
        raise DimensionError("layer_norm gain/bias must have shape (d,)")
    flat = np.ascontiguousarray(x.data.reshape(-1, d))
    y2, xhat, rstd = kernels.layernorm_fwd(flat, gain.data, bias.data, float(eps))

    def bwd(g):
        g2 = np.ascontiguousarray(g.reshape(-1, d))
        dx, dgain, dbias = kernels.layernorm_bwd(g2, xhat, rstd, gain.data)
        _accum(x, dx.reshape(x.data.shape))
        _accum(gain, dgain)
        _accum(bias, dbias)

    return _node(y2.reshape(x.data.shape), (x, gain, bias), bwd)


def sum_all(x):
    def bwd(g):
        _accum(x, np.broadcast_to(g, x.data.shape).copy())

    return _node(np.asarray(x.data.sum()), (x,), bwd)


def mean_all(x):
    inv = 1.0 / x.data.size

    def bwd(g):
        _accum(x, np.broadcast_to(g * inv, x.data.shape).copy())

    return _node(np.asarray(x.data.mean()), (x,), bwd)


def mse(pred, target):
    """Mean squared error against a constant target array (fused node)."""
    target = np.asarray(target, dtype=np.float64)
    if target.shape != pred.data.shape:
        raise DimensionError(
            f"mse shapes disagree: {pred.data.shape} vs {target.shape}"
        )
    diff = pred.data - target
    inv = 2.0 / diff.size

    def bwd(g):
        _accum(pred, (g * inv) * diff)

    return _node(np.asarray(np.mean(diff * diff)), (pred,), bwd)

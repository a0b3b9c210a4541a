"""Encoder-decoder forecaster whose attention layout exposes causal structure.

Every (neuron, timestep) pair becomes one token, laid out neuron-major:
all of neuron 0's steps, then neuron 1's, and so on. The encoder runs
self-attention restricted to each neuron's own history, so a neuron's
representation provably contains no information about other neurons.
The decoder queries the encoded history from zero-filled target tokens
through one global cross-attention sublayer whose weights are recorded:
it is the only place information reaches the targets at all, so the
recorded rows are direct evidence of which source histories each target
drew on. Giving the targets no other route to their own history is what
keeps that evidence sharp; with a parallel per-neuron path the global
sublayer's weights degrade toward uniform because the value signal
splits across routes.

Token timestamps are window-relative (0 at the start of the context),
scaled by 1/time_denom. Absolute trace positions would let the model key
predictions to specific training rows instead of to the values, which
shows up as a train-validation gap.

Local attention never materializes masked logits; it reshapes the token
axis into per-neuron blocks, which is algebraically identical to a dense
softmax with -inf masking (the equivalence is covered by tests) and about
n times cheaper. The dense masked path remains available through
:func:`multihead_attention` for arbitrary masks.

Sublayers use pre-norm residuals with a final layer norm on each stack;
the feed-forward nets are ReLU. Dropout sits on the token embedding and
the feed-forward outputs.
"""

from dataclasses import dataclass, asdict

import numpy as np

from spikecause import tensor
from spikecause.errors import ConfigError, DimensionError
from spikecause.params import ParamStore
from spikecause.tensor import (
    Tensor, concat_last, dropout, gather_rows, layer_norm, linear,
    matmul, merge_blocks, merge_heads, relu, reshape, scale, softmax_last,
    split_blocks, split_heads, transpose,
)


@dataclass
class ModelConfig:
    n: int
    context: int = 10
    horizon: int = 1
    d_model: int = 100
    heads: int = 10
    d_head: int = 8
    ffn_dim: int = 400
    dropout: float = 0.1
    token_mix: str = "sum"      # "sum" or "concat"
    time_denom: float = 1.0     # window-relative steps are scaled by 1/this

    def __post_init__(self):
        if self.n < 1 or self.context < 1 or self.horizon < 1:
            raise ConfigError("n, context and horizon must be >= 1")
        if min(self.d_model, self.heads, self.d_head, self.ffn_dim) < 1:
            raise ConfigError("model dimensions must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.token_mix not in ("sum", "concat"):
            raise ConfigError(f"unknown token_mix {self.token_mix!r}")
        if self.token_mix == "concat" and self.d_model % 2:
            raise ConfigError("concat token_mix needs an even d_model")
        if self.time_denom <= 0:
            raise ConfigError("time_denom must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, payload):
        return cls(**payload)


@dataclass
class AttentionRecord:
    """Recorded global cross-attention: (batch, heads, n*h, n*(c+1))."""
    global_cross: np.ndarray


def local_mask(n, len_q, len_k, per_neuron_q, per_neuron_k):
    """Additive 0/-inf mask allowing attention only within one neuron.

    Under neuron-major layout the allowed region is block-diagonal, with
    per_neuron_q x per_neuron_k blocks.
    """
    if len_q != n * per_neuron_q or len_k != n * per_neuron_k:
        raise DimensionError(
            f"lengths ({len_q}, {len_k}) do not factor as "
            f"{n} x ({per_neuron_q}, {per_neuron_k})"
        )
    mask = np.full((len_q, len_k), -np.inf)
    for i in range(n):
        mask[i * per_neuron_q:(i + 1) * per_neuron_q,
             i * per_neuron_k:(i + 1) * per_neuron_k] = 0.0
    return mask


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return (rng.uniform(shape) * 2.0 - 1.0) * limit


class AttentionParams:
    """Q/K/V/output projections for one multi-head sublayer.

    The per-head d_model -> d_head projections are stored stacked as
    (d_model, heads*d_head) matrices; column block k belongs to head k.
    """

    def __init__(self, store, prefix, d_model, heads, d_head, rng=None):
        wide = heads * d_head
        def init(shape, fi, fo):
            if rng is None:
                return np.zeros(shape)
            return _glorot(rng, shape, fi, fo)
        self.wq = store.add(f"{prefix}.wq", init((d_model, wide), d_model, d_head))
        self.wk = store.add(f"{prefix}.wk", init((d_model, wide), d_model, d_head))
        self.wv = store.add(f"{prefix}.wv", init((d_model, wide), d_model, d_head))
        self.wo = store.add(f"{prefix}.wo", init((wide, d_model), wide, d_model))
        self.bq = store.add(f"{prefix}.bq", np.zeros(wide))
        self.bk = store.add(f"{prefix}.bk", np.zeros(wide))
        self.bv = store.add(f"{prefix}.bv", np.zeros(wide))
        self.bo = store.add(f"{prefix}.bo", np.zeros(d_model))
        self.heads = heads
        self.d_head = d_head
        self.d_model = d_model


def multihead_attention(q_tokens, k_tokens, v_tokens, mask, head_params,
                        record=False):
    """Dense scaled-dot-product attention over full token sequences.

    ``mask`` is an additive (L_q, L_k) array of 0 / -inf entries, or None
    for unrestricted attention. Returns (output, weights) where weights
    is a detached (B, heads, L_q, L_k) array when ``record`` else None.
    """
    p = head_params
    q = split_heads(linear(q_tokens, p.wq, p.bq), p.heads, p.d_head)
    k = split_heads(linear(k_tokens, p.wk, p.bk), p.heads, p.d_head)
    v = split_heads(linear(v_tokens, p.wv, p.bv), p.heads, p.d_head)
    logits = scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(p.d_head))
    weights = softmax_last(logits, mask=mask)
    mixed = merge_heads(matmul(weights, v))
    out = linear(mixed, p.wo, p.bo)
    recorded = weights.data.copy() if record else None
    return out, recorded


def _local_attention(q_tokens, k_tokens, v_tokens, n, head_params):
    """Same-neuron attention via per-neuron blocks instead of masking.

    Token counts must be multiples of n (neuron-major layout). Equivalent
    to the dense path under a block-diagonal mask, without ever touching
    the disallowed (always-zero) entries.
    """
    p = head_params
    q5 = split_blocks(linear(q_tokens, p.wq, p.bq), n, p.heads, p.d_head)
    k5 = split_blocks(linear(k_tokens, p.wk, p.bk), n, p.heads, p.d_head)
    v5 = split_blocks(linear(v_tokens, p.wv, p.bv), n, p.heads, p.d_head)
    logits = scale(matmul(q5, transpose(k5, (0, 1, 2, 4, 3))),
                   1.0 / np.sqrt(p.d_head))
    weights = softmax_last(logits)
    merged = merge_blocks(matmul(weights, v5))
    return linear(merged, p.wo, p.bo)


class CausalTransformer:
    """One encoder layer + one decoder layer with recorded global mixing."""

    def __init__(self, config, rng=None):
        self.config = config
        self.store = ParamStore()
        c = config
        s = self.store

        mix_dim = c.d_model // 2 if c.token_mix == "concat" else c.d_model
        ident_dim = c.d_model - mix_dim if c.token_mix == "concat" else c.d_model

        def init(shape, fi, fo):
            if rng is None:
                return np.zeros(shape)
            return _glorot(rng, shape, fi, fo)

        # shared token embedding: scalar time map, [value, time] projection,
        # neuron identity table
        s.add("embed.time_w", np.ones(1) if rng is None else rng.uniform(1) * 0.2 - 0.1)
        s.add("embed.time_b", np.zeros(1))
        s.add("embed.in_w", init((2, mix_dim), 2, mix_dim))
        s.add("embed.in_b", np.zeros(mix_dim))
        s.add("embed.ident",
              np.zeros((c.n, ident_dim)) if rng is None
              else rng.normal(0.0, 0.02, (c.n, ident_dim)))

        self.enc_attn = AttentionParams(s, "enc.attn", c.d_model, c.heads, c.d_head, rng)
        for name in ("enc.ln1", "enc.ln2", "enc.ln_out",
                     "dec.ln1", "dec.ln2", "dec.ln_out"):
            s.add(f"{name}.g", np.ones(c.d_model))
            s.add(f"{name}.b", np.zeros(c.d_model))
        s.add("enc.ffn.w1", init((c.d_model, c.ffn_dim), c.d_model, c.ffn_dim))
        s.add("enc.ffn.b1", np.zeros(c.ffn_dim))
        s.add("enc.ffn.w2", init((c.ffn_dim, c.d_model), c.ffn_dim, c.d_model))
        s.add("enc.ffn.b2", np.zeros(c.d_model))

        self.dec_global = AttentionParams(s, "dec.global", c.d_model, c.heads, c.d_head, rng)
        s.add("dec.ffn.w1", init((c.d_model, c.ffn_dim), c.d_model, c.ffn_dim))
        s.add("dec.ffn.b1", np.zeros(c.ffn_dim))
        s.add("dec.ffn.w2", init((c.ffn_dim, c.d_model), c.ffn_dim, c.d_model))
        s.add("dec.ffn.b2", np.zeros(c.d_model))

        s.add("readout.w", init((c.d_model, 1), c.d_model, 1))
        s.add("readout.b", np.zeros(1))
        s.freeze()

    # ------------------------------------------------------------------

    def _ln(self, name, x):
        return layer_norm(x, self.store[f"{name}.g"], self.store[f"{name}.b"])

    def _ffn(self, prefix, x, training, rng):
        s = self.store
        h = relu(linear(x, s[f"{prefix}.w1"], s[f"{prefix}.b1"]))
        out = linear(h, s[f"{prefix}.w2"], s[f"{prefix}.b2"])
        return dropout(out, self.config.dropout, rng, training)

    def embed(self, values, steps, neuron_ids, training=False, rng=None):
        """Token embedding for (value, step index, neuron id) triples.

        ``values`` and ``steps`` are (B, L) arrays; ``steps`` holds raw
        step indices, scaled here by 1/time_denom before the learned
        1-dimensional time map. ``neuron_ids`` is a length-L int array.
        """
        s = self.store
        b, length = values.shape
        norm_steps = Tensor(np.asarray(steps, dtype=np.float64)
                            / self.config.time_denom)
        time_feat = norm_steps * s["embed.time_w"] + s["embed.time_b"]
        vals = Tensor(np.asarray(values, dtype=np.float64))
        feats = concat_last(
            reshape(vals, (b, length, 1)), reshape(time_feat, (b, length, 1))
        )
        projected = linear(feats, s["embed.in_w"], s["embed.in_b"])
        ident = gather_rows(s["embed.ident"], np.asarray(neuron_ids))
        if self.config.token_mix == "concat":
            # replicate the (L, d) identity rows across the batch axis
            ident_b = reshape(ident, (1,) + ident.data.shape) + Tensor(
                np.zeros((b, 1, 1)))
            tokens = concat_last(projected, ident_b)
        else:
            tokens = projected + ident
        return dropout(tokens, self.config.dropout, rng, training)

    # ------------------------------------------------------------------

    def forward(self, x, training=False, record=False, internals=False,
                rng=None):
        """Forecast the next ``horizon`` steps for every neuron.

        ``x`` is (B, context+1, n) of normalized history values; token
        timestamps count from the start of the window. Returns
        (predictions (B, horizon, n), AttentionRecord | None,
        internals dict | None).
        """
        cfg = self.config
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] != cfg.context + 1 or x.shape[2] != cfg.n:
            raise DimensionError(
                f"expected (B, {cfg.context + 1}, {cfg.n}) input, got {x.shape}"
            )
        if training and cfg.dropout > 0.0 and rng is None:
            raise ConfigError("training forward needs an rng for dropout")
        b = x.shape[0]
        n, ctx, hor = cfg.n, cfg.context + 1, cfg.horizon

        # --- encode the history -------------------------------------------
        vals_enc = np.ascontiguousarray(x.transpose(0, 2, 1)).reshape(b, n * ctx)
        steps_enc = np.tile(np.tile(np.arange(ctx, dtype=np.float64), n), (b, 1))
        ids_enc = np.repeat(np.arange(n), ctx)
        h0 = self.embed(vals_enc, steps_enc, ids_enc, training, rng)

        normed = self._ln("enc.ln1", h0)
        h1 = h0 + _local_attention(normed, normed, normed, n, self.enc_attn)
        h2 = h1 + self._ffn("enc.ffn", self._ln("enc.ln2", h1), training, rng)
        enc_out = self._ln("enc.ln_out", h2)

        # --- decode zero-filled targets -----------------------------------
        vals_dec = np.zeros((b, n * hor))
        steps_dec = np.tile(np.tile(ctx + np.arange(hor, dtype=np.float64), n),
                            (b, 1))
        ids_dec = np.repeat(np.arange(n), hor)
        t_emb = self.embed(vals_dec, steps_dec, ids_dec, training, rng)

        mixed, weights = multihead_attention(
            self._ln("dec.ln1", t_emb), enc_out, enc_out, None, self.dec_global,
            record=record,
        )
        t1 = t_emb + mixed
        t2 = t1 + self._ffn("dec.ffn", self._ln("dec.ln2", t1), training, rng)
        dec_out = self._ln("dec.ln_out", t2)

        tokens = linear(dec_out, self.store["readout.w"], self.store["readout.b"])
        pred = transpose(reshape(tokens, (b, n, hor)), (0, 2, 1))

        rec = AttentionRecord(global_cross=weights) if record else None
        extra = None
        if internals:
            extra = {
                "enc_out": enc_out.data.copy(),
                "dec_pre_global": t_emb.data.copy(),
            }
        return pred, rec, extra

    def predict(self, x):
        """Inference-mode forecasts as a plain array (B, horizon, n)."""
        with tensor.no_grad():
            pred, _, _ = self.forward(x, training=False)
        return pred.data

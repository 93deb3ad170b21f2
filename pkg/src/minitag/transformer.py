"""Configurable transformer encoder covering teacher and student shapes.

Post-layer-norm residual layout, GELU feed-forward, learned absolute
position embeddings: the choices of the public BERT family. Also houses
the exact parameter and FLOP accounting used by the size/speed reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from . import tensor as T
from .tensor import Parameter, Tensor


@dataclass(frozen=True)
class EncoderConfig:
    layers: int
    hidden: int
    intermediate: int
    heads: int
    vocab: int
    max_positions: int = 128
    type_vocab: int = 1

    def __post_init__(self):
        for name in ("layers", "hidden", "intermediate", "heads", "vocab",
                     "max_positions"):
            if getattr(self, name) <= 0 and not (name == "layers" and self.layers == 0):
                raise ValueError(f"{name} must be positive")
        if self.hidden % self.heads != 0:
            raise ValueError(f"hidden {self.hidden} not divisible by heads {self.heads}")
        if self.type_vocab != 1:
            raise ValueError("only a single segment type is supported")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        return cls(**{k: int(v) for k, v in d.items()})


def minibert_config(vocab: int = 119547, max_positions: int = 512) -> EncoderConfig:
    """The 3-layer compact shape: H=256, I=1024, A=4."""
    return EncoderConfig(layers=3, hidden=256, intermediate=1024, heads=4,
                         vocab=vocab, max_positions=max_positions)


def bert_base_config(vocab: int = 119547, max_positions: int = 512) -> EncoderConfig:
    """The 12-layer teacher shape: H=768, I=3072, A=12."""
    return EncoderConfig(layers=12, hidden=768, intermediate=3072, heads=12,
                         vocab=vocab, max_positions=max_positions)


class TransformerModel:
    """Encoder stack; parameter shapes derive from the config alone."""

    model_type = "transformer"

    def __init__(self, config: EncoderConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        H, I = config.hidden, config.intermediate
        p: dict[str, Parameter] = {}

        def param(name, shape, kind="normal"):
            if kind == "normal":
                data = rng.normal(0.0, 0.02, size=shape)
            elif kind == "ones":
                data = np.ones(shape)
            else:
                data = np.zeros(shape)
            p[name] = Parameter(name, data)

        param("embed.token", (config.vocab, H))
        param("embed.position", (config.max_positions, H))
        param("embed.ln.gain", (H,), "ones")
        param("embed.ln.bias", (H,), "zeros")
        for i in range(config.layers):
            pre = f"layer{i}"
            for proj in ("q", "k", "v", "o"):
                param(f"{pre}.attn.{proj}.w", (H, H))
                param(f"{pre}.attn.{proj}.b", (H,), "zeros")
            param(f"{pre}.ln1.gain", (H,), "ones")
            param(f"{pre}.ln1.bias", (H,), "zeros")
            param(f"{pre}.ffn.w1", (H, I))
            param(f"{pre}.ffn.b1", (I,), "zeros")
            param(f"{pre}.ffn.w2", (I, H))
            param(f"{pre}.ffn.b2", (H,), "zeros")
            param(f"{pre}.ln2.gain", (H,), "ones")
            param(f"{pre}.ln2.bias", (H,), "zeros")
        self.params = p

    def parameters(self) -> dict[str, Parameter]:
        return self.params

    @property
    def output_dim(self) -> int:
        return self.config.hidden

    def forward(self, piece_ids: np.ndarray, mask: np.ndarray) -> Tensor:
        """Encode [batch, positions] ids; mask is 1 for real pieces, 0 for pads.

        Padded positions never influence unpadded outputs: their attention
        weights underflow to exactly zero.
        """
        ids = np.asarray(piece_ids)
        mask = np.asarray(mask, dtype=np.float64)
        if ids.ndim != 2:
            raise ValueError("piece_ids must be [batch, positions]")
        cfg = self.config
        B, P = ids.shape
        if P > cfg.max_positions:
            raise ValueError(f"sequence length {P} exceeds {cfg.max_positions}")
        p = self.params

        x = T.add(T.embedding(p["embed.token"], ids),
                  p["embed.position"][np.arange(P)])
        x = T.layer_norm(x, p["embed.ln.gain"], p["embed.ln.bias"])

        A = cfg.heads
        dh = cfg.hidden // A
        scale = 1.0 / math.sqrt(dh)
        # [B, 1, 1, P] additive bias; exp(-1e9) underflows to exactly 0.
        attn_bias = ((1.0 - mask) * -1e9)[:, None, None, :]

        for i in range(cfg.layers):
            pre = f"layer{i}"

            def heads(t):
                return T.transpose(T.reshape(t, (B, P, A, dh)), (0, 2, 1, 3))

            q = heads(T.add(T.matmul(x, p[f"{pre}.attn.q.w"]), p[f"{pre}.attn.q.b"]))
            k = heads(T.add(T.matmul(x, p[f"{pre}.attn.k.w"]), p[f"{pre}.attn.k.b"]))
            v = heads(T.add(T.matmul(x, p[f"{pre}.attn.v.w"]), p[f"{pre}.attn.v.b"]))
            scores = T.add(T.mul(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), scale),
                           attn_bias)
            weights = T.softmax_with_temperature(scores, 1.0)
            ctx = T.reshape(T.transpose(T.matmul(weights, v), (0, 2, 1, 3)), (B, P, cfg.hidden))
            attn_out = T.add(T.matmul(ctx, p[f"{pre}.attn.o.w"]), p[f"{pre}.attn.o.b"])
            x = T.layer_norm(T.add(x, attn_out),
                             p[f"{pre}.ln1.gain"], p[f"{pre}.ln1.bias"])

            h = T.gelu(T.add(T.matmul(x, p[f"{pre}.ffn.w1"]), p[f"{pre}.ffn.b1"]))
            ffn_out = T.add(T.matmul(h, p[f"{pre}.ffn.w2"]), p[f"{pre}.ffn.b2"])
            x = T.layer_norm(T.add(x, ffn_out),
                             p[f"{pre}.ln2.gain"], p[f"{pre}.ln2.bias"])
        return x


def count_parameters(config: EncoderConfig) -> dict:
    """Scalar counts by category; the classification head is excluded.

    ``hidden`` covers everything outside the embedding layer, matching the
    instantiated model exactly. No pooler exists (sequence labeling only),
    so none is counted.
    """
    H, I, L = config.hidden, config.intermediate, config.layers
    per_layer = (4 * H * H + 4 * H) + (2 * H * I + I + H) + 4 * H
    embedding = config.vocab * H + config.max_positions * H + 2 * H
    hidden = L * per_layer
    return {
        "embedding": embedding,
        "hidden": hidden,
        "total": embedding + hidden,
        "note": "output head excluded; no pooler layer",
    }


def count_flops(config: EncoderConfig, seq_len: int) -> dict:
    """Forward multiply-add FLOPs, quadratic attention term kept separate.

    The score+context term is exactly L*4*n^2*H (two n x n x H matmuls per
    layer at 2 FLOPs per multiply-add); projection and feed-forward terms
    grow linearly in n.
    """
    if seq_len < 1:
        raise ValueError("seq_len must be >= 1")
    H, I, L, n = config.hidden, config.intermediate, config.layers, seq_len
    quadratic = L * 4 * n * n * H
    projections = L * 8 * n * H * H
    ffn = L * 4 * n * H * I
    return {
        "attention_quadratic": quadratic,
        "attention_projections": projections,
        "ffn": ffn,
        "total": quadratic + projections + ffn,
    }


def num_scalars(model) -> int:
    return sum(p.data.size for p in model.parameters().values())

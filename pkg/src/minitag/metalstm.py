"""Meta-LSTM encoder: char BiLSTM + word BiLSTM + joint BiLSTM on top.

The three sub-networks are independently addressable (parameter name
prefixes "char.", "word.", "joint.") so they can be trained in stages.
Word vectors come from a pretrained embedding table and stay frozen; the
char embedding and all LSTM weights train. Gate order inside the packed
kernels is i, f, g, o with the forget-gate bias initialized to +1.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from . import tensor as T
from .conllu import EmbeddingTable
from .errors import DataError
from .tensor import Parameter, Tensor

UNK_CHAR = "\x00"


@dataclass(frozen=True)
class MetaLstmConfig:
    char_emb_dim: int = 16
    char_hidden: int = 32
    word_emb_dim: int = 300
    word_hidden: int = 64
    joint_hidden: int = 64

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetaLstmConfig":
        return cls(**{k: int(v) for k, v in d.items()})


class CharVocab:
    def __init__(self, chars: list[str]):
        self.chars = [UNK_CHAR] + [c for c in chars if c != UNK_CHAR]
        self.index = {c: i for i, c in enumerate(self.chars)}

    def __len__(self) -> int:
        return len(self.chars)

    def ids(self, word: str) -> np.ndarray:
        return np.array([self.index.get(c, 0) for c in word], dtype=np.int64)

    @classmethod
    def from_sentences(cls, sentences) -> "CharVocab":
        chars = sorted({c for s in sentences for t in s.tokens for c in t.form})
        return cls(chars)


def _lstm_step(x, h, c, wx, wh, b, hidden):
    z = T.add(T.add(T.matmul(x, wx), T.matmul(h, wh)), b)
    i = T.sigmoid(z[:, 0 * hidden:1 * hidden])
    f = T.sigmoid(z[:, 1 * hidden:2 * hidden])
    g = T.tanh(z[:, 2 * hidden:3 * hidden])
    o = T.sigmoid(z[:, 3 * hidden:4 * hidden])
    c_new = T.add(T.mul(f, c), T.mul(i, g))
    h_new = T.mul(o, T.tanh(c_new))
    return h_new, c_new


def _run_lstm(inputs, wx, wh, b, hidden):
    """Unroll over a list of [1, in] rows; returns (per-step h list, final h)."""
    h = Tensor(np.zeros((1, hidden)))
    c = Tensor(np.zeros((1, hidden)))
    outs = []
    for x in inputs:
        h, c = _lstm_step(x, h, c, wx, wh, b, hidden)
        outs.append(h)
    return outs, h


class MetaLstmModel:
    model_type = "metalstm"

    def __init__(self, config: MetaLstmConfig, char_vocab: CharVocab,
                 embeddings: EmbeddingTable, seed: int = 0):
        if embeddings.dim != config.word_emb_dim:
            raise DataError(
                f"embedding dim {embeddings.dim} != config word_emb_dim "
                f"{config.word_emb_dim}"
            )
        self.config = config
        self.char_vocab = char_vocab
        self.embeddings = embeddings
        rng = np.random.default_rng(seed)
        p: dict[str, Parameter] = {}

        def lstm_params(prefix, in_dim, hidden):
            scale = 1.0 / np.sqrt(in_dim)
            p[f"{prefix}.wx"] = Parameter(
                f"{prefix}.wx", rng.uniform(-scale, scale, (in_dim, 4 * hidden)))
            p[f"{prefix}.wh"] = Parameter(
                f"{prefix}.wh", rng.uniform(-scale, scale, (hidden, 4 * hidden)))
            bias = np.zeros(4 * hidden)
            bias[hidden:2 * hidden] = 1.0  # forget gate opens at init
            p[f"{prefix}.b"] = Parameter(f"{prefix}.b", bias)

        cfg = config
        p["char.embed"] = Parameter(
            "char.embed", rng.normal(0.0, 0.1, (len(char_vocab), cfg.char_emb_dim)))
        lstm_params("char.fwd", cfg.char_emb_dim, cfg.char_hidden)
        lstm_params("char.bwd", cfg.char_emb_dim, cfg.char_hidden)
        lstm_params("word.fwd", cfg.word_emb_dim, cfg.word_hidden)
        lstm_params("word.bwd", cfg.word_emb_dim, cfg.word_hidden)
        joint_in = 2 * cfg.char_hidden + 2 * cfg.word_hidden
        lstm_params("joint.fwd", joint_in, cfg.joint_hidden)
        lstm_params("joint.bwd", joint_in, cfg.joint_hidden)
        self.params = p

    def parameters(self) -> dict[str, Parameter]:
        return self.params

    def sub_parameters(self, prefix: str) -> dict[str, Parameter]:
        return {k: v for k, v in self.params.items() if k.startswith(prefix + ".")}

    @property
    def char_dim(self) -> int:
        return 2 * self.config.char_hidden

    @property
    def word_dim(self) -> int:
        return 2 * self.config.word_hidden

    @property
    def output_dim(self) -> int:
        return 2 * self.config.joint_hidden

    def char_encode(self, forms: list[str]) -> Tensor:
        """Per token: concat of forward-final and backward-final char states."""
        if not forms:
            raise ValueError("empty sentence")
        p = self.params
        ch = self.config.char_hidden
        rows = []
        for form in forms:
            ids = self.char_vocab.ids(form)
            embedded = T.embedding(p["char.embed"], ids)
            steps = [embedded[i:i + 1] for i in range(len(ids))]
            _, fwd_final = _run_lstm(steps, p["char.fwd.wx"], p["char.fwd.wh"],
                                     p["char.fwd.b"], ch)
            _, bwd_final = _run_lstm(steps[::-1], p["char.bwd.wx"], p["char.bwd.wh"],
                                     p["char.bwd.b"], ch)
            rows.append(T.concat([fwd_final, bwd_final], axis=-1))
        return T.concat(rows, axis=0)

    def word_encode(self, forms: list[str]) -> Tensor:
        """BiLSTM over (frozen) word vectors; OOV words map to the unk vector."""
        if not forms:
            raise ValueError("empty sentence")
        p = self.params
        wh = self.config.word_hidden
        steps = [Tensor(self.embeddings.lookup(f)[None, :]) for f in forms]
        fwd, _ = _run_lstm(steps, p["word.fwd.wx"], p["word.fwd.wh"],
                           p["word.fwd.b"], wh)
        bwd, _ = _run_lstm(steps[::-1], p["word.bwd.wx"], p["word.bwd.wh"],
                           p["word.bwd.b"], wh)
        bwd = bwd[::-1]
        rows = [T.concat([f, b], axis=-1) for f, b in zip(fwd, bwd)]
        return T.concat(rows, axis=0)

    def joint_encode(self, char_out: Tensor, word_out: Tensor) -> Tensor:
        """BiLSTM over per-token concat(char features, word features)."""
        if char_out.shape[0] != word_out.shape[0]:
            raise DataError(
                f"length mismatch: char {char_out.shape[0]} vs word {word_out.shape[0]}"
            )
        p = self.params
        jh = self.config.joint_hidden
        combined = T.concat([char_out, word_out], axis=-1)
        steps = [combined[i:i + 1] for i in range(combined.shape[0])]
        fwd, _ = _run_lstm(steps, p["joint.fwd.wx"], p["joint.fwd.wh"],
                           p["joint.fwd.b"], jh)
        bwd, _ = _run_lstm(steps[::-1], p["joint.bwd.wx"], p["joint.bwd.wh"],
                           p["joint.bwd.b"], jh)
        bwd = bwd[::-1]
        rows = [T.concat([f, b], axis=-1) for f, b in zip(fwd, bwd)]
        return T.concat(rows, axis=0)

    def encode(self, forms: list[str]) -> Tensor:
        return self.joint_encode(self.char_encode(forms), self.word_encode(forms))

"""Bundle of encoder, head, label inventory and tokenizer state.

A tagger is the unit that training produces and that tagging, evaluation,
distillation and benchmarking consume. Checkpoints are directories holding
one named-tensor container (model.json + model.bin) whose metadata fully
reconstructs the bundle.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .checkpoint import read_container, write_container
from .conllu import EmbeddingTable, LabelInventory
from .errors import DataError
from .head import TaggingHead, TokenPrediction, predict
from .metalstm import CharVocab, MetaLstmConfig, MetaLstmModel
from .transformer import EncoderConfig, TransformerModel
from .wordpiece import Encoding, WordpieceVocab, encode_sentence


class Tagger:
    def __init__(self, encoder, head: TaggingHead, task: str,
                 vocab: WordpieceVocab | None = None, max_len: int = 128):
        self.encoder = encoder
        self.head = head
        self.inventory = head.inventory
        self.task = task
        self.vocab = vocab
        self.max_len = max_len
        if encoder.model_type == "transformer" and vocab is None:
            raise DataError("transformer taggers need a wordpiece vocab")

    def parameters(self) -> dict:
        params = dict(self.encoder.parameters())
        for name, p in self.head.parameters().items():
            if name in params:
                raise DataError(f"duplicate parameter name {name}")
            params[name] = p
        return params

    # forward paths -----------------------------------------------------------

    def encode_tokens(self, forms: list[str]) -> list[Encoding]:
        if self.encoder.model_type != "transformer":
            raise DataError("encode_tokens is a transformer path")
        return encode_sentence(forms, self.vocab, self.max_len)

    def predict_tokens(self, forms: list[str]) -> list[TokenPrediction]:
        """One prediction per token, across split encodings if needed."""
        if self.encoder.model_type == "transformer":
            preds: list[TokenPrediction] = []
            for enc in self.encode_tokens(forms):
                ids = np.asarray(enc.piece_ids)[None, :]
                mask = (ids != self.vocab.pad_id).astype(np.float64)
                with T.no_grad():
                    states = self.encoder.forward(ids, mask)
                    rows = states.data[0]
                preds.extend(predict(T.Tensor(rows), enc.first_subword_index,
                                     self.head))
            return preds
        with T.no_grad():
            states = self.encoder.encode(forms)
        return predict(states, list(range(len(forms))), self.head)

    # persistence -------------------------------------------------------------

    def save(self, directory: str, dtype: str | None = None):
        arrays = {name: p.data for name, p in self.parameters().items()}
        meta = {
            "model_type": self.encoder.model_type,
            "task": self.task,
            "labels": list(self.inventory.labels),
            "max_len": self.max_len,
            "config": self.encoder.config.to_dict(),
        }
        if self.encoder.model_type == "transformer":
            meta["wordpiece_pieces"] = self.vocab.pieces
        else:
            meta["char_vocab"] = self.encoder.char_vocab.chars
            meta["embed_words"] = list(self.encoder.embeddings.entries.keys())
            arrays["embeddings.matrix"] = np.stack(
                list(self.encoder.embeddings.entries.values()))
            arrays["embeddings.unk"] = self.encoder.embeddings.unk
        write_container(directory, "model", arrays, meta, dtype=dtype)

    @classmethod
    def load(cls, directory: str) -> "Tagger":
        arrays, meta = read_container(directory, "model")
        inventory = LabelInventory(meta["task"], tuple(meta["labels"]))
        if meta["model_type"] == "transformer":
            config = EncoderConfig.from_dict(meta["config"])
            encoder = TransformerModel(config)
            vocab = WordpieceVocab(meta["wordpiece_pieces"])
            head = TaggingHead(config.hidden, inventory)
            tagger = cls(encoder, head, meta["task"], vocab=vocab,
                         max_len=meta["max_len"])
        elif meta["model_type"] == "metalstm":
            config = MetaLstmConfig.from_dict(meta["config"])
            words = meta["embed_words"]
            matrix = arrays.pop("embeddings.matrix")
            unk = arrays.pop("embeddings.unk")
            table = EmbeddingTable(
                dim=config.word_emb_dim,
                entries={w: matrix[i] for i, w in enumerate(words)},
                unk=unk,
            )
            char_vocab = CharVocab.__new__(CharVocab)
            char_vocab.chars = meta["char_vocab"]
            char_vocab.index = {c: i for i, c in enumerate(char_vocab.chars)}
            encoder = MetaLstmModel(config, char_vocab, table)
            head = TaggingHead(encoder.output_dim, inventory)
            tagger = cls(encoder, head, meta["task"], max_len=meta["max_len"])
        else:
            raise DataError(f"unknown model_type {meta['model_type']!r}")

        params = tagger.parameters()
        for name, arr in arrays.items():
            if name not in params:
                raise DataError(f"checkpoint tensor {name!r} has no parameter slot")
            if tuple(arr.shape) != params[name].shape:
                raise DataError(f"shape mismatch for {name}")
            params[name].data = arr.astype(np.float64)
            params[name].grad = np.zeros_like(params[name].data)
        return tagger

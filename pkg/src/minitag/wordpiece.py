"""Greedy longest-match wordpiece tokenization with token alignment.

Cased, byte-exact forms: no lowercasing or accent stripping. Continuation
pieces carry a "##" prefix. Each token's label is read at its first piece,
so encodings track the first-subword position of every input token.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
MAX_WORD_CHARS = 100


class WordpieceVocab:
    def __init__(self, pieces: list[str]):
        self.pieces = list(pieces)
        self.index = {p: i for i, p in enumerate(self.pieces)}
        if len(self.index) != len(self.pieces):
            raise DataError("duplicate pieces in vocab")
        for special in (PAD, UNK, CLS, SEP):
            if special not in self.index:
                raise DataError(f"vocab is missing {special}")
        self.pad_id = self.index[PAD]
        self.unk_id = self.index[UNK]
        self.cls_id = self.index[CLS]
        self.sep_id = self.index[SEP]

    def __len__(self) -> int:
        return len(self.pieces)

    def __contains__(self, piece: str) -> bool:
        return piece in self.index

    def id(self, piece: str) -> int:
        return self.index[piece]

    @classmethod
    def from_file(cls, path: str) -> "WordpieceVocab":
        # One piece per line; line number is the id.
        with open(path, encoding="utf-8") as f:
            pieces = [line.rstrip("\r\n") for line in f]
        while pieces and pieces[-1] == "":
            pieces.pop()
        return cls(pieces)

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            for piece in self.pieces:
                f.write(piece + "\n")


@dataclass
class Encoding:
    """One model input: [CLS] pieces... [SEP] [PAD]..., plus alignment.

    ``first_subword_index[i]`` is the position of token i's first piece;
    it never points at a special position. ``n_tokens`` counts the tokens
    covered by this encoding (a long sentence may span several).
    """

    piece_ids: list[int]
    first_subword_index: list[int]
    n_tokens: int


def tokenize_word(word: str, vocab: WordpieceVocab) -> list[str]:
    """Greedy longest-prefix match; any unmatched chunk collapses to [UNK]."""
    if not word:
        raise ValueError("cannot tokenize an empty word")
    if len(word) > MAX_WORD_CHARS:
        return [UNK]
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            sub = word[start:end]
            if start > 0:
                sub = "##" + sub
            if sub in vocab:
                match = sub
                break
            end -= 1
        if match is None:
            return [UNK]
        pieces.append(match)
        start = end
    return pieces


def encode_sentence(tokens: list[str], vocab: WordpieceVocab,
                    max_len: int) -> list[Encoding]:
    """Encode a token sequence, splitting at token boundaries on overflow.

    Splitting (rather than truncation) guarantees every token keeps its
    label position. Returns one Encoding per chunk, padded to ``max_len``.
    """
    if max_len < 3:
        raise ValueError("max_len must allow [CLS], one piece and [SEP]")
    budget = max_len - 2
    token_pieces = [tokenize_word(tok, vocab) for tok in tokens]
    for tok, pieces in zip(tokens, token_pieces):
        if len(pieces) > budget:
            raise DataError(
                f"token {tok!r} needs {len(pieces)} pieces, over max_len {max_len}"
            )

    encodings: list[Encoding] = []
    chunk: list[list[str]] = []
    used = 0

    def flush():
        ids = [vocab.cls_id]
        align = []
        for pieces in chunk:
            align.append(len(ids))
            ids.extend(vocab.id(p) for p in pieces)
        ids.append(vocab.sep_id)
        ids.extend([vocab.pad_id] * (max_len - len(ids)))
        encodings.append(Encoding(ids, align, len(chunk)))

    for pieces in token_pieces:
        if used + len(pieces) > budget and chunk:
            flush()
            chunk, used = [], 0
        chunk.append(pieces)
        used += len(pieces)
    if chunk:
        flush()
    return encodings


def detokenize(pieces: list[str]) -> str:
    """Inverse of tokenize_word when no [UNK] was emitted."""
    return "".join(p[2:] if p.startswith("##") else p for p in pieces)

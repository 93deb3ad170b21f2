"""CoNLL-U parsing, label inventories, treebank mixing, text embeddings."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

# The 17 universal POS tags, canonical alphabetical order.
UPOS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
)
UPOS_SET = frozenset(UPOS_TAGS)


@dataclass
class Token:
    form: str
    upos: str = "_"
    feats: str = "_"


@dataclass
class Sentence:
    tokens: list[Token]
    treebank_id: str = ""
    sent_id: str | None = None

    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def labels(self, task: str) -> list[str]:
        if task == "pos":
            return [t.upos for t in self.tokens]
        if task == "morph":
            return [t.feats for t in self.tokens]
        raise ValueError(f"unknown task {task!r}")


def parse_conllu(source, treebank_id: str = "") -> list[Sentence]:
    """Parse CoNLL-U text (str, file object, or path-opened stream).

    Multiword ranges ("3-4") and empty nodes ("5.1") are skipped; only
    FORM, UPOS and FEATS are retained. A blank line ends a sentence.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    sentences: list[Sentence] = []
    tokens: list[Token] = []
    sent_id: str | None = None
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if line.startswith("#"):
            if line.startswith("# sent_id"):
                _, _, value = line.partition("=")
                sent_id = value.strip() or None
            continue
        if not line:
            if tokens:
                sentences.append(Sentence(tokens, treebank_id, sent_id))
                tokens, sent_id = [], None
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise DataError(f"line {lineno}: expected 10 columns, got {len(cols)}")
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue
        if not cols[1]:
            raise DataError(f"line {lineno}: empty FORM")
        tokens.append(Token(form=cols[1], upos=cols[3], feats=cols[5]))
    if tokens:
        sentences.append(Sentence(tokens, treebank_id, sent_id))
    return sentences


def parse_conllu_file(path: str, treebank_id: str = "") -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        try:
            return parse_conllu(f, treebank_id)
        except DataError as e:
            raise DataError(f"{path}: {e}") from None


def write_conllu(sentences: list[Sentence]) -> str:
    """Minimal 10-column serialization that round-trips through parse_conllu."""
    out = []
    for sent in sentences:
        if sent.sent_id:
            out.append(f"# sent_id = {sent.sent_id}")
        for i, tok in enumerate(sent.tokens, start=1):
            out.append("\t".join(
                [str(i), tok.form, "_", tok.upos, "_", tok.feats, "_", "_", "_", "_"]
            ))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def read_treebank_manifest(path: str) -> list[tuple[str, str]]:
    """Manifest lines are `treebank_id<TAB>path`; paths resolve relative to it."""
    import os

    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path} line {lineno}: expected `id<TAB>path`")
            tb_id, tb_path = parts
            if not os.path.isabs(tb_path):
                tb_path = os.path.join(base, tb_path)
            entries.append((tb_id, tb_path))
    return entries


def load_treebanks(manifest_path: str) -> list[tuple[str, list[Sentence]]]:
    return [(tb_id, parse_conllu_file(path, tb_id))
            for tb_id, path in read_treebank_manifest(manifest_path)]


@dataclass
class LabelInventory:
    """Bidirectional label <-> index map for one task."""

    task: str
    labels: tuple[str, ...]
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise DataError("duplicate labels in inventory")

    def __len__(self) -> int:
        return len(self.labels)

    def id(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise DataError(f"label {label!r} not in {self.task} inventory") from None

    def label(self, i: int) -> str:
        return self.labels[i]


def build_inventory(sentences: list[Sentence], task: str) -> LabelInventory:
    """POS inventories are always the fixed 17 tags; morph is data-derived."""
    if task == "pos":
        for sent in sentences:
            for tok in sent.tokens:
                if tok.upos not in UPOS_SET:
                    raise DataError(f"unknown UPOS tag {tok.upos!r}")
        return LabelInventory("pos", UPOS_TAGS)
    if task == "morph":
        feats = sorted({tok.feats for sent in sentences for tok in sent.tokens})
        return LabelInventory("morph", tuple(feats))
    raise ValueError(f"unknown task {task!r}")


def mix_treebanks(treebanks: list[list[Sentence]], seed: int) -> list[Sentence]:
    """Concatenate all treebanks and apply one seeded uniform shuffle."""
    if not treebanks:
        raise ValueError("need at least one treebank")
    pool = [s for tb in treebanks for s in tb]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pool))
    return [pool[i] for i in order]


# text embeddings -------------------------------------------------------------

UNK_WORD = "<unk>"


@dataclass
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray]
    unk: np.ndarray
    collisions: int = 0

    def lookup(self, word: str) -> np.ndarray:
        return self.entries.get(word, self.unk)

    def __len__(self) -> int:
        return len(self.entries)


def load_embeddings(source) -> EmbeddingTable:
    """Text format: header `count dim`, then `word v1 ... v_dim` per line."""
    if isinstance(source, str):
        source = io.StringIO(source)
    header = source.readline().split()
    if len(header) != 2:
        raise DataError("embedding file must start with `count dim`")
    count, dim = int(header[0]), int(header[1])
    entries: dict[str, np.ndarray] = {}
    for lineno, raw in enumerate(source, start=2):
        parts = raw.rstrip("\n").split(" ")
        if len(parts) == 1 and not parts[0]:
            continue
        if len(parts) != dim + 1:
            raise DataError(f"line {lineno}: expected {dim} values")
        entries[parts[0]] = np.array([float(v) for v in parts[1:]], dtype=np.float64)
    if len(entries) != count:
        raise DataError(f"header says {count} words, file has {len(entries)}")
    return EmbeddingTable(dim=dim, entries=entries, unk=_unk_vector(entries))


def load_embeddings_file(path: str) -> EmbeddingTable:
    with open(path, encoding="utf-8") as f:
        return load_embeddings(f)


def _unk_vector(entries: dict[str, np.ndarray]) -> np.ndarray:
    if UNK_WORD in entries:
        return entries[UNK_WORD]
    if not entries:
        raise DataError("empty embedding table")
    return np.mean(list(entries.values()), axis=0)


def union_embeddings(tables: list[EmbeddingTable]) -> EmbeddingTable:
    """Union of word vectors; first occurrence wins, collisions counted."""
    if not tables:
        raise ValueError("need at least one table")
    dim = tables[0].dim
    merged: dict[str, np.ndarray] = {}
    collisions = 0
    for table in tables:
        if table.dim != dim:
            raise DataError(f"embedding dim mismatch: {table.dim} != {dim}")
        for word, vec in table.entries.items():
            if word in merged:
                collisions += 1
            else:
                merged[word] = vec
    return EmbeddingTable(dim=dim, entries=merged, unk=_unk_vector(merged),
                          collisions=collisions)

"""Synthetic multilingual treebanks with a zero-Bayes-error tag rule.

Each language gets a private stem pool plus a configurable shared pool;
every word ends in a suffix character that deterministically fixes its
tag, so an oracle reading suffixes scores F1 1.0 and anything a model
misses is its own fault. Output is ordinary CoNLL-U plus the side files
the pipeline needs: a wordpiece vocab (characters and continuation
characters by default, so the suffix stays visible to subword models), a
word embedding file, and an unlabeled corpus for distillation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .conllu import Sentence, Token, write_conllu
from .wordpiece import CLS, PAD, SEP, UNK

# Suffix character -> (UPOS, FEATS); the morph class mirrors the suffix.
DEFAULT_TAG_RULE = {
    "a": ("NOUN", "Kind=A"),
    "e": ("VERB", "Kind=E"),
    "i": ("ADJ", "Kind=I"),
    "o": ("ADV", "Kind=O"),
    "u": ("DET", "Kind=U"),
}
_STEM_CHARS = "bcdfghjklmnprstvz"


@dataclass(frozen=True)
class SyntheticTaskSpec:
    n_languages: int = 2
    vocab_size: int = 60          # words per language, shared pool included
    shared_fraction: float = 0.25
    train_size: int = 80          # sentences per language
    dev_size: int = 20
    test_size: int = 40
    min_len: int = 4              # words per sentence, before final punct
    max_len: int = 8
    seed: int = 0
    unlabeled_size: int = 400     # raw sentences for distillation
    tiny_train_sizes: dict = field(default_factory=dict)  # language -> override
    # Whole words as pieces make the tag rule learnable fast (one piece per
    # token); char pieces remain as OOV fallback. Disable to force subword
    # composition, which is much harder at these model sizes.
    whole_word_pieces: bool = True

    def language_ids(self) -> list[str]:
        return [f"lang{i}" for i in range(self.n_languages)]


def _make_word(rng: np.random.Generator, suffix: str, prefix: str) -> str:
    stem_len = int(rng.integers(2, 5))
    stem = "".join(rng.choice(list(_STEM_CHARS), size=stem_len))
    return prefix + stem + suffix


def _make_vocab(spec: SyntheticTaskSpec, rng: np.random.Generator) -> dict[str, list[str]]:
    """Word pools per language; the shared pool has no language prefix."""
    suffixes = sorted(DEFAULT_TAG_RULE)
    n_shared = int(round(spec.shared_fraction * spec.vocab_size))
    shared: list[str] = []
    seen: set[str] = set()
    while len(shared) < n_shared:
        word = _make_word(rng, suffixes[len(shared) % len(suffixes)], "q")
        if word not in seen:
            seen.add(word)
            shared.append(word)
    pools = {}
    for li, lang in enumerate(spec.language_ids()):
        prefix = chr(ord("w") + (li % 3)) * 1  # w/x/y keep stems disjoint
        private: list[str] = []
        while len(private) < spec.vocab_size - n_shared:
            word = _make_word(rng, suffixes[len(private) % len(suffixes)], prefix)
            if word not in seen:
                seen.add(word)
                private.append(word)
        pools[lang] = shared + private
    return pools


def tag_of(word: str, task: str = "pos") -> str:
    """The oracle rule: the final character decides the label."""
    if word == ".":
        return "PUNCT" if task == "pos" else "_"
    upos, feats = DEFAULT_TAG_RULE[word[-1]]
    return upos if task == "pos" else feats


def _make_sentence(rng: np.random.Generator, pool: list[str], lang: str,
                   idx: int, spec: SyntheticTaskSpec) -> Sentence:
    n = int(rng.integers(spec.min_len, spec.max_len + 1))
    words = [pool[int(i)] for i in rng.integers(0, len(pool), size=n)] + ["."]
    tokens = [Token(form=w, upos=tag_of(w, "pos"), feats=tag_of(w, "morph"))
              for w in words]
    return Sentence(tokens, treebank_id=lang, sent_id=f"{lang}-{idx}")


@dataclass
class SynthCorpus:
    spec: SyntheticTaskSpec
    train: dict[str, list[Sentence]]
    dev: dict[str, list[Sentence]]
    test: dict[str, list[Sentence]]
    unlabeled: list[str]
    wordpiece_pieces: list[str]
    words: list[str]


def generate(spec: SyntheticTaskSpec) -> SynthCorpus:
    rng = np.random.default_rng(spec.seed)
    pools = _make_vocab(spec, rng)

    train, dev, test = {}, {}, {}
    for lang in spec.language_ids():
        pool = pools[lang]
        n_train = spec.tiny_train_sizes.get(lang, spec.train_size)
        train[lang] = [_make_sentence(rng, pool, lang, i, spec)
                       for i in range(n_train)]
        dev[lang] = [_make_sentence(rng, pool, lang, i, spec)
                     for i in range(spec.dev_size)]
        test[lang] = [_make_sentence(rng, pool, lang, i, spec)
                      for i in range(spec.test_size)]

    langs = spec.language_ids()
    unlabeled = []
    for i in range(spec.unlabeled_size):
        lang = langs[i % len(langs)]
        sent = _make_sentence(rng, pools[lang], lang, i, spec)
        unlabeled.append(" ".join(sent.forms()))

    words = sorted({w for pool in pools.values() for w in pool})
    chars = sorted({c for w in words for c in w})
    pieces = [PAD, UNK, CLS, SEP, "."]
    if spec.whole_word_pieces:
        pieces += words
    pieces += chars
    pieces += ["##" + c for c in chars]
    return SynthCorpus(spec=spec, train=train, dev=dev, test=test,
                       unlabeled=unlabeled, wordpiece_pieces=pieces, words=words)


def write_corpus(corpus: SynthCorpus, out_dir: str,
                 embedding_dim: int = 16) -> dict[str, str]:
    """Write CoNLL-U files, manifests, vocab, embeddings and unlabeled text.

    Returns a path map. Same spec (and seed) always produces identical
    files.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths: dict[str, str] = {}
    for split_name, split in (("train", corpus.train), ("dev", corpus.dev),
                              ("test", corpus.test)):
        manifest_lines = []
        for lang in corpus.spec.language_ids():
            fname = f"{lang}.{split_name}.conllu"
            with open(os.path.join(out_dir, fname), "w", encoding="utf-8") as f:
                f.write(write_conllu(split[lang]))
            manifest_lines.append(f"{lang}\t{fname}")
        manifest_path = os.path.join(out_dir, f"{split_name}.manifest")
        with open(manifest_path, "w", encoding="utf-8") as f:
            f.write("\n".join(manifest_lines) + "\n")
        paths[split_name] = manifest_path

    vocab_path = os.path.join(out_dir, "wordpiece.vocab")
    with open(vocab_path, "w", encoding="utf-8") as f:
        f.write("\n".join(corpus.wordpiece_pieces) + "\n")
    paths["vocab"] = vocab_path

    unlabeled_path = os.path.join(out_dir, "unlabeled.txt")
    with open(unlabeled_path, "w", encoding="utf-8") as f:
        f.write("\n".join(corpus.unlabeled) + "\n")
    paths["unlabeled"] = unlabeled_path

    # Deterministic word vectors for the Meta-LSTM path.
    rng = np.random.default_rng(corpus.spec.seed + 1)
    emb_path = os.path.join(out_dir, "embeddings.txt")
    all_words = corpus.words + ["."]
    with open(emb_path, "w", encoding="utf-8") as f:
        f.write(f"{len(all_words)} {embedding_dim}\n")
        for word in all_words:
            vec = rng.normal(0.0, 1.0, size=embedding_dim)
            f.write(word + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")
    paths["embeddings"] = emb_path
    return paths


def gen_synthetic(spec: SyntheticTaskSpec, out_dir: str) -> dict[str, str]:
    """Generate and write a synthetic corpus; returns the path map."""
    return write_corpus(generate(spec), out_dir)


def oracle_tag(sentences: list[Sentence], task: str = "pos") -> list[Sentence]:
    """Label sentences with the generating rule itself (F1 1.0 by design)."""
    out = []
    for sent in sentences:
        tokens = [Token(form=t.form, upos=tag_of(t.form, "pos"),
                        feats=tag_of(t.form, "morph")) for t in sent.tokens]
        out.append(Sentence(tokens, sent.treebank_id, sent.sent_id))
    return out

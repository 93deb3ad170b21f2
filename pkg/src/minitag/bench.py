"""Single-thread CPU latency benchmarking with exact FLOP accounting.

Wall-clock numbers are reported, never asserted in tests beyond coarse
ordering: they depend on the machine. The FLOP ratios are exact rationals
and carry the testable contract. Batch size is fixed at 1 and the median
over >= 30 timed runs (after 5 warmups) is reported.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tagger import Tagger
from .transformer import count_flops

DEFAULT_SEQ_LENS = (32, 128)


@dataclass
class BenchRow:
    model_id: str
    seq_len: int
    median_ms: float
    flops: int | None
    speedup_wall: float = 1.0
    speedup_flops: float | None = None


def _random_words(rng: np.random.Generator, n: int) -> list[str]:
    letters = "abcdefghij"
    return ["".join(rng.choice(list(letters), size=4)) for _ in range(n)]


def _time_transformer(tagger: Tagger, seq_len: int, runs: int, warmups: int,
                      rng: np.random.Generator) -> float:
    vocab = tagger.vocab
    specials = {vocab.pad_id, vocab.unk_id, vocab.cls_id, vocab.sep_id}
    usable = [i for i in range(len(vocab)) if i not in specials] or [vocab.unk_id]
    inner = rng.choice(usable, size=seq_len - 2)
    ids = np.concatenate([[vocab.cls_id], inner, [vocab.sep_id]])[None, :]
    mask = np.ones_like(ids, dtype=np.float64)
    times = []
    with T.no_grad():
        for i in range(warmups + runs):
            start = time.perf_counter()
            states = tagger.encoder.forward(ids, mask)
            tagger.head.logits(states)
            elapsed = time.perf_counter() - start
            if i >= warmups:
                times.append(elapsed)
    return statistics.median(times)


def _time_metalstm(tagger: Tagger, seq_len: int, runs: int, warmups: int,
                   rng: np.random.Generator) -> float:
    words = _random_words(rng, seq_len)
    times = []
    with T.no_grad():
        for i in range(warmups + runs):
            start = time.perf_counter()
            states = tagger.encoder.encode(words)
            tagger.head.logits(states)
            elapsed = time.perf_counter() - start
            if i >= warmups:
                times.append(elapsed)
    return statistics.median(times)


def bench(models: list[tuple[str, Tagger]], reference_id: str,
          seq_lens=DEFAULT_SEQ_LENS, runs: int = 30, warmups: int = 5,
          seed: int = 0) -> list[BenchRow]:
    """Measure each model at each sequence length; speedups vs the reference.

    ``seq_len`` counts input positions for transformers (words for the
    LSTM path). FLOP counts only exist for transformer models; their
    FLOP-based speedup is reported next to the wall-clock one.
    """
    ids = [mid for mid, _ in models]
    if reference_id not in ids:
        raise ValueError(f"reference model {reference_id!r} not among models")
    rows: list[BenchRow] = []
    for model_id, tagger in models:
        for seq_len in seq_lens:
            rng = np.random.default_rng(np.random.SeedSequence([seed, seq_len]))
            if tagger.encoder.model_type == "transformer":
                median = _time_transformer(tagger, seq_len, runs, warmups, rng)
                flops = count_flops(tagger.encoder.config, seq_len)["total"]
            else:
                median = _time_metalstm(tagger, seq_len, runs, warmups, rng)
                flops = None
            rows.append(BenchRow(model_id=model_id, seq_len=seq_len,
                                 median_ms=median * 1e3, flops=flops))

    ref = {row.seq_len: row for row in rows if row.model_id == reference_id}
    for row in rows:
        base = ref[row.seq_len]
        row.speedup_wall = base.median_ms / row.median_ms
        if row.flops is not None and base.flops is not None:
            row.speedup_flops = base.flops / row.flops
    return rows


def bench_table(rows: list[BenchRow], reference_id: str) -> str:
    """Relative-speedup table: one model per row, one column per length."""
    seq_lens = sorted({r.seq_len for r in rows})
    by_model: dict[str, dict[int, BenchRow]] = {}
    for row in rows:
        by_model.setdefault(row.model_id, {})[row.seq_len] = row
    width = max(len(m) for m in by_model) + 2
    header = f"{'Input':<{width}}" + "".join(
        f"{str(n) + ' words':>14}" for n in seq_lens)
    lines = [f"Relative inference speedup over {reference_id} (CPU)", header]
    for model_id, cells in by_model.items():
        line = f"{model_id:<{width}}"
        for n in seq_lens:
            line += f"{cells[n].speedup_wall:>13.1f}x"
        lines.append(line)
    lines.append("")
    lines.append(f"{'median ms':<{width}}" + "".join(
        f"{str(n) + ' words':>14}" for n in seq_lens))
    for model_id, cells in by_model.items():
        line = f"{model_id:<{width}}"
        for n in seq_lens:
            line += f"{cells[n].median_ms:>14.2f}"
        lines.append(line)
    return "\n".join(lines)


def bench_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["model", "seq_len", "median_ms", "flops",
                     "speedup_wall", "speedup_flops"])
    for r in rows:
        writer.writerow([
            r.model_id, r.seq_len, f"{r.median_ms:.4f}",
            r.flops if r.flops is not None else "",
            f"{r.speedup_wall:.4f}",
            f"{r.speedup_flops:.4f}" if r.speedup_flops is not None else "",
        ])
    return buf.getvalue()

"""Figure rendering for report paths; every CSV gets a PNG next to it."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def _save(fig, path: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_loss_curve(rows: list[tuple[int, int, float]], path: str,
                    title: str = "training loss"):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    steps = [r[1] for r in rows]
    losses = [r[2] for r in rows]
    ax.plot(steps, losses, lw=0.8, color="tab:blue")
    epochs = sorted({r[0] for r in rows})
    if len(epochs) > 1:
        for e in epochs[1:]:
            first = next(r[1] for r in rows if r[0] == e)
            ax.axvline(first, color="0.85", lw=0.6, zorder=0)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title(title)
    _save(fig, path)


def save_eval_bars(report, path: str, title: str = "per-treebank F1"):
    fig, ax = plt.subplots(figsize=(max(4, 1 + len(report.per_treebank_f1)), 3.5))
    names = list(report.per_treebank_f1)
    values = [report.per_treebank_f1[n] for n in names]
    ax.bar(names, values, color="tab:blue")
    ax.axhline(report.macro_f1, color="tab:red", lw=1.0, ls="--",
               label=f"macro {report.macro_f1:.3f}")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("F1")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)


def save_bench_bars(rows, path: str, title: str = "relative speedup"):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    seq_lens = sorted({r.seq_len for r in rows})
    models = []
    for r in rows:
        if r.model_id not in models:
            models.append(r.model_id)
    width = 0.8 / len(seq_lens)
    for j, n in enumerate(seq_lens):
        xs = [i + j * width for i in range(len(models))]
        ys = [next(r.speedup_wall for r in rows
                   if r.model_id == m and r.seq_len == n) for m in models]
        ax.bar(xs, ys, width=width, label=f"{n} words")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(models))])
    ax.set_xticklabels(models)
    ax.axhline(1.0, color="0.6", lw=0.8)
    ax.set_ylabel("speedup (x)")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)


def save_ablation_bars(report, path: str, title: str = "distillation ablation"):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    names = ["teacher", "distilled", "scratch"]
    medians = [report.median("teacher_f1"), report.median("distilled_f1"),
               report.median("scratch_f1")]
    ax.bar(names, medians, color=["tab:green", "tab:blue", "tab:orange"])
    for row in report.rows:
        ax.plot(names, [row.teacher_f1, row.distilled_f1, row.scratch_f1],
                "o", color="0.3", ms=3, alpha=0.6)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("macro F1 (median, dots per seed)")
    ax.set_title(title)
    _save(fig, path)


def save_lowresource_bars(report, path: str, title: str = "low-resource transfer"):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    names = ["per-language", "multilingual"]
    medians = [report.median("per_language_f1"), report.median("multilingual_f1")]
    ax.bar(names, medians, color=["tab:orange", "tab:blue"])
    for row in report.rows:
        ax.plot(names, [row.per_language_f1, row.multilingual_f1],
                "o", color="0.3", ms=3, alpha=0.6)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel(f"F1 on {report.tiny_language} (median, dots per seed)")
    ax.set_title(title)
    _save(fig, path)


def save_sweep_curve(rows: list[dict], path: str,
                     title: str = "temperature sweep"):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    temps = [r["temperature"] for r in rows]
    agree = [r["agreement"] for r in rows]
    ax.plot(temps, agree, "o-", color="tab:blue")
    ax.set_xlabel("temperature")
    ax.set_ylabel("teacher-student agreement")
    ax.set_title(title)
    _save(fig, path)

"""Token-level F1 and per-treebank evaluation reports.

With gold segmentation, precision equals recall equals accuracy, so token
F1 reduces to accuracy; it is still computed as matched-token F1 so a
non-gold segmenter could slot in later. The macro average is the
unweighted mean over treebanks (not languages).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .conllu import Sentence
from .errors import DataError
from .head import resolve_codemixed
from .tagger import Tagger


def token_f1(gold: list[Sentence], predicted: list[Sentence],
             task: str = "pos") -> float:
    """Matched-token F1 between aligned gold and predicted sentences."""
    if len(gold) != len(predicted):
        raise DataError(f"{len(gold)} gold sentences vs {len(predicted)} predicted")
    matched = 0
    n_gold = 0
    n_pred = 0
    for g, p in zip(gold, predicted):
        g_labels = g.labels(task)
        p_labels = p.labels(task)
        if len(g_labels) != len(p_labels):
            raise DataError(
                f"token count mismatch ({len(g_labels)} vs {len(p_labels)}); "
                f"only gold segmentation is supported")
        n_gold += len(g_labels)
        n_pred += len(p_labels)
        matched += sum(a == b for a, b in zip(g_labels, p_labels))
    if n_gold == 0 and n_pred == 0:
        return 0.0
    precision = matched / n_pred if n_pred else 0.0
    recall = matched / n_gold if n_gold else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass
class EvalReport:
    per_treebank_f1: dict[str, float]
    macro_f1: float
    token_counts: dict[str, int]

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["treebank", "f1", "tokens"])
        for tb_id in self.per_treebank_f1:
            writer.writerow([tb_id, f"{self.per_treebank_f1[tb_id]:.6f}",
                             self.token_counts[tb_id]])
        writer.writerow(["macro", f"{self.macro_f1:.6f}",
                         sum(self.token_counts.values())])
        return buf.getvalue()

    def table_text(self) -> str:
        width = max([len(tb) for tb in self.per_treebank_f1] + [len("treebank")])
        lines = [f"{'treebank':<{width}}  {'F1':>8}  {'tokens':>8}"]
        for tb_id in self.per_treebank_f1:
            lines.append(f"{tb_id:<{width}}  {self.per_treebank_f1[tb_id]:>8.4f}"
                         f"  {self.token_counts[tb_id]:>8}")
        lines.append(f"{'macro':<{width}}  {self.macro_f1:>8.4f}"
                     f"  {sum(self.token_counts.values()):>8}")
        return "\n".join(lines)


def tag_sentence(tagger: Tagger, sent: Sentence, codemixed: bool = False) -> Sentence:
    """Predict labels for one sentence; returns a new labeled Sentence."""
    preds = tagger.predict_tokens(sent.forms())
    if codemixed:
        labels = resolve_codemixed(preds, tagger.task)
    else:
        labels = [p.label for p in preds]
    tokens = []
    for tok, label in zip(sent.tokens, labels):
        if tagger.task == "pos":
            tokens.append(type(tok)(form=tok.form, upos=label, feats="_"))
        else:
            tokens.append(type(tok)(form=tok.form, upos=tok.upos, feats=label))
    return Sentence(tokens, sent.treebank_id, sent.sent_id)


def evaluate(tagger: Tagger, treebanks: list[tuple[str, list[Sentence]]],
             codemixed: bool = False) -> EvalReport:
    """Per-treebank F1 and the unweighted macro mean.

    Gold labels outside the tagger's inventory are an error. The codemixed
    flag routes predictions through the second-best substitution first.
    """
    per_tb: dict[str, float] = {}
    counts: dict[str, int] = {}
    for tb_id, sentences in treebanks:
        for sent in sentences:
            for lab in sent.labels(tagger.task):
                if lab not in tagger.inventory.index:
                    raise DataError(
                        f"gold label {lab!r} in {tb_id} is outside the model's "
                        f"inventory")
        predicted = [tag_sentence(tagger, s, codemixed) for s in sentences]
        per_tb[tb_id] = token_f1(sentences, predicted, tagger.task)
        counts[tb_id] = sum(len(s.tokens) for s in sentences)
    if not per_tb:
        raise DataError("no treebanks to evaluate")
    macro = sum(per_tb.values()) / len(per_tb)
    return EvalReport(per_treebank_f1=per_tb, macro_f1=macro, token_counts=counts)


def evaluate_sentences(tagger: Tagger, sentences: list[Sentence],
                       codemixed: bool = False) -> EvalReport:
    """Group a flat sentence list by treebank id, then evaluate."""
    groups: dict[str, list[Sentence]] = {}
    for sent in sentences:
        groups.setdefault(sent.treebank_id or "all", []).append(sent)
    return evaluate(tagger, sorted(groups.items()), codemixed)

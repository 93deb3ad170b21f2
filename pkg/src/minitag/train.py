"""Supervised training: multilingual finetuning and staged Meta-LSTM runs.

Constant learning rate (no warmup schedule at this scale), Adam with the
usual moments, gradient clipping at global norm 1.0 to keep the LSTMs out
of trouble. Every source of randomness derives from (seed, epoch), so a
checkpoint reloaded mid-run continues bit-exactly.
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .checkpoint import container_exists, read_container, write_container
from .conllu import Sentence
from .errors import NumericalAbort
from .head import TaggingHead, supervised_loss
from .tagger import Tagger
from .tensor import Parameter, Tensor

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 3e-5
    batch_size: int = 16
    epochs: int = 10
    seed: int = 0
    task: str = "pos"
    clip_norm: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ValueError("learning_rate, batch_size and epochs must be positive")


class Adam:
    """Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8."""

    def __init__(self, params: dict[str, Parameter], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.names = list(params.keys())
        self.params = [params[n] for n in self.names]
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {"t": np.array([self.t], dtype=np.int64)}
        for name, m, v in zip(self.names, self.m, self.v):
            arrays[f"m.{name}"] = m
            arrays[f"v.{name}"] = v
        return arrays

    def load_state(self, arrays: dict[str, np.ndarray]):
        self.t = int(arrays["t"][0])
        for i, name in enumerate(self.names):
            self.m[i] = arrays[f"m.{name}"].astype(np.float64)
            self.v[i] = arrays[f"v.{name}"].astype(np.float64)


def clip_global_norm(params: list[Parameter], max_norm: float) -> float:
    total = 0.0
    for p in params:
        total += float((p.grad * p.grad).sum())
    norm = float(np.sqrt(total))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for p in params:
            p.grad *= scale
    return norm


# batch construction ----------------------------------------------------------


@dataclass
class _Example:
    """One encoding (or one full sentence for the LSTM path) plus gold labels."""

    forms: list[str]
    labels: list[str]
    sent_id: str
    piece_ids: np.ndarray | None = None
    align: list[int] | None = None
    true_len: int = 0


def _transformer_examples(tagger: Tagger, sentences: list[Sentence],
                          task: str) -> list[_Example]:
    examples = []
    for idx, sent in enumerate(sentences):
        labels = sent.labels(task)
        start = 0
        for enc in tagger.encode_tokens(sent.forms()):
            ids = np.asarray(enc.piece_ids, dtype=np.int64)
            pad = tagger.vocab.pad_id
            nonpad = int((ids != pad).sum())
            examples.append(_Example(
                forms=sent.forms()[start:start + enc.n_tokens],
                labels=labels[start:start + enc.n_tokens],
                sent_id=sent.sent_id or f"{sent.treebank_id}:{idx}",
                piece_ids=ids,
                align=enc.first_subword_index,
                true_len=nonpad,
            ))
            start += enc.n_tokens
    return examples


def _lstm_examples(sentences: list[Sentence], task: str) -> list[_Example]:
    return [
        _Example(forms=s.forms(), labels=s.labels(task),
                 sent_id=s.sent_id or f"{s.treebank_id}:{i}")
        for i, s in enumerate(sentences)
    ]


def _transformer_batch_loss(tagger: Tagger, batch: list[_Example]) -> Tensor:
    pad = tagger.vocab.pad_id
    width = max(ex.true_len for ex in batch)
    ids = np.full((len(batch), width), pad, dtype=np.int64)
    for i, ex in enumerate(batch):
        ids[i, :ex.true_len] = ex.piece_ids[:ex.true_len]
    mask = (ids != pad).astype(np.float64)
    states = tagger.encoder.forward(ids, mask)
    rows_b = np.concatenate([np.full(len(ex.align), i, dtype=np.int64)
                             for i, ex in enumerate(batch)])
    rows_p = np.concatenate([np.asarray(ex.align, dtype=np.int64) for ex in batch])
    gathered = states[(rows_b, rows_p)]
    logits = tagger.head.logits(gathered)
    gold = [lab for ex in batch for lab in ex.labels]
    return supervised_loss(logits, gold, tagger.inventory)


def _encoder_states(tagger: Tagger, forms: list[str], stage: str) -> Tensor:
    enc = tagger.encoder
    if stage == "char":
        return enc.char_encode(forms)
    if stage == "word":
        return enc.word_encode(forms)
    return enc.encode(forms)


def _lstm_batch_loss(tagger: Tagger, batch: list[_Example], head: TaggingHead,
                     stage: str) -> Tensor:
    all_logits = []
    gold = []
    for ex in batch:
        states = _encoder_states(tagger, ex.forms, stage)
        all_logits.append(head.logits(states))
        gold.extend(ex.labels)
    return supervised_loss(T.concat(all_logits, axis=0), gold, tagger.inventory)


# finetuning ------------------------------------------------------------------


@dataclass
class FinetuneResult:
    loss_rows: list[tuple[int, int, float]]
    epoch_means: list[float]
    best_epoch: int | None = None
    best_dev_f1: float | None = None
    checkpoints: list[str] = field(default_factory=list)


def _epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch]))
    return rng.permutation(n)


def finetune(tagger: Tagger, sentences: list[Sentence], config: TrainConfig,
             out_dir: str | None = None, dev_sentences: list[Sentence] | None = None,
             resume_from: str | None = None) -> FinetuneResult:
    """Train on an already-mixed sentence stream.

    Reshuffles every epoch from (seed, epoch). Saves a checkpoint (model +
    optimizer state) per epoch when ``out_dir`` is given; training resumed
    from such a checkpoint matches the uninterrupted run bit-exactly.
    Aborts with the offending batch's sentence ids if the loss goes
    non-finite.
    """
    is_transformer = tagger.encoder.model_type == "transformer"
    if is_transformer:
        examples = _transformer_examples(tagger, sentences, config.task)
    else:
        examples = _lstm_examples(sentences, config.task)

    params = tagger.parameters()
    optim = Adam(params, lr=config.learning_rate)
    start_epoch = 0
    if resume_from is not None:
        arrays, meta = read_container(resume_from, "model")
        for name, arr in arrays.items():
            if name in params:
                params[name].data = arr.astype(np.float64)
                params[name].grad = np.zeros_like(params[name].data)
        if container_exists(resume_from, "optim"):
            state, optim_meta = read_container(resume_from, "optim")
            optim.load_state(state)
            start_epoch = int(optim_meta.get("next_epoch", 0))

    result = FinetuneResult(loss_rows=[], epoch_means=[])
    step = 0
    for epoch in range(start_epoch, config.epochs):
        order = _epoch_order(len(examples), config.seed, epoch)
        epoch_losses = []
        for lo in range(0, len(order), config.batch_size):
            batch = [examples[i] for i in order[lo:lo + config.batch_size]]
            optim.zero_grad()
            if is_transformer:
                loss = _transformer_batch_loss(tagger, batch)
            else:
                loss = _lstm_batch_loss(tagger, batch, tagger.head, "joint")
            value = loss.item()
            if not np.isfinite(value):
                raise NumericalAbort(
                    f"non-finite loss at epoch {epoch} step {step}",
                    batch_ids=[ex.sent_id for ex in batch],
                )
            loss.backward()
            clip_global_norm(list(params.values()), config.clip_norm)
            optim.step()
            result.loss_rows.append((epoch, step, value))
            epoch_losses.append(value)
            step += 1
        mean_loss = float(np.mean(epoch_losses)) if epoch_losses else 0.0
        result.epoch_means.append(mean_loss)
        log.info("epoch %d: mean loss %.6f", epoch, mean_loss)

        if out_dir is not None:
            ckpt = os.path.join(out_dir, f"epoch_{epoch + 1:03d}")
            tagger.save(ckpt)
            write_container(ckpt, "optim", optim.state_arrays(),
                            {"next_epoch": epoch + 1})
            result.checkpoints.append(ckpt)

        if dev_sentences is not None:
            from .evaluate import evaluate_sentences

            f1 = evaluate_sentences(tagger, dev_sentences).macro_f1
            if result.best_dev_f1 is None or f1 > result.best_dev_f1:
                result.best_dev_f1 = f1
                result.best_epoch = epoch
            log.info("epoch %d: dev macro F1 %.4f", epoch, f1)

    if out_dir is not None:
        write_loss_curve(result.loss_rows,
                         os.path.join(out_dir, "loss_curve.csv"))
    return result


def write_loss_curve(rows: list[tuple[int, int, float]], path: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "step", "loss"])
        for epoch, step, loss in rows:
            writer.writerow([epoch, step, f"{loss:.10g}"])


# staged Meta-LSTM training ----------------------------------------------------

STAGES = ("char", "word", "joint")


@dataclass
class StagedResult:
    stages_run: list[str]
    stage_losses: dict[str, list[float]]


def train_metalstm_staged(tagger: Tagger, sentences: list[Sentence],
                          config: TrainConfig,
                          stages: tuple[str, ...] = STAGES,
                          stage_epochs: dict[str, int] | None = None,
                          freeze_pretrained: bool = False,
                          out_dir: str | None = None) -> StagedResult:
    """Run the staged recipe: char and word sub-networks first, then all.

    Stages 1 and 2 train each sub-BiLSTM with a throwaway head on the task;
    the final stage trains the full network and the real head (everything
    unfrozen unless ``freeze_pretrained``). Pass a shorter ``stages`` tuple
    to skip stages, e.g. ("joint",) for the no-pretraining ablation.
    """
    if tagger.encoder.model_type != "metalstm":
        raise ValueError("staged training applies to Meta-LSTM taggers")
    for stage in stages:
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")

    examples = _lstm_examples(sentences, config.task)
    enc = tagger.encoder
    result = StagedResult(stages_run=[], stage_losses={})

    for stage in stages:
        if stage == "char":
            head = TaggingHead(enc.char_dim, tagger.inventory, seed=config.seed,
                               prefix="stage_char_head")
            params = dict(enc.sub_parameters("char"))
        elif stage == "word":
            head = TaggingHead(enc.word_dim, tagger.inventory, seed=config.seed,
                               prefix="stage_word_head")
            params = dict(enc.sub_parameters("word"))
        else:
            head = tagger.head
            if freeze_pretrained:
                params = dict(enc.sub_parameters("joint"))
            else:
                params = dict(enc.parameters())
        params.update(head.parameters())

        epochs = (stage_epochs or {}).get(stage, config.epochs)
        optim = Adam(params, lr=config.learning_rate)
        log.info("stage %s: %d epochs over %d sentences", stage, epochs,
                 len(examples))
        losses = []
        for epoch in range(epochs):
            order = _epoch_order(len(examples), config.seed, epoch)
            epoch_losses = []
            for lo in range(0, len(order), config.batch_size):
                batch = [examples[i] for i in order[lo:lo + config.batch_size]]
                optim.zero_grad()
                loss = _lstm_batch_loss(tagger, batch, head, stage)
                value = loss.item()
                if not np.isfinite(value):
                    raise NumericalAbort(
                        f"non-finite loss in stage {stage} epoch {epoch}",
                        batch_ids=[ex.sent_id for ex in batch],
                    )
                loss.backward()
                clip_global_norm(list(params.values()), config.clip_norm)
                optim.step()
                epoch_losses.append(value)
            losses.append(float(np.mean(epoch_losses)))
        result.stages_run.append(stage)
        result.stage_losses[stage] = losses
        log.info("stage %s done: final mean loss %.6f", stage, losses[-1])

    if out_dir is not None:
        tagger.save(os.path.join(out_dir, "final"))
    return result

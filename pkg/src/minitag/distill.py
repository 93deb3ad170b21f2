"""Teacher-to-student distillation over cached logit shards.

The teacher's logits are computed once on unlabeled text, at every
wordpiece position, and cached in named-tensor shards so student training
is deterministic and teacher-free. Phase 1 trains the student from scratch
on the temperature-softened cross-entropy between teacher and student
distributions; phase 2 finetunes on the labeled data the teacher saw.

The teacher's distribution is a constant: no gradient flows to it. The
loss carries no T^2 rescaling factor (some implementations add one; the
objective here is plain H(softmax(t/T), softmax(s/T)) averaged over
positions).
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .checkpoint import read_container, sha256_file, write_container
from .conllu import LabelInventory, Sentence
from .errors import DataError, NumericalAbort
from .head import TaggingHead
from .tagger import Tagger
from .tensor import Tensor
from .train import Adam, FinetuneResult, TrainConfig, clip_global_norm, finetune
from .transformer import EncoderConfig, TransformerModel
from .wordpiece import WordpieceVocab, encode_sentence

log = logging.getLogger(__name__)


@dataclass
class DistillConfig:
    temperature: float = 3.0
    learning_rate: float = 1e-4
    batch_size: int = 256
    epochs: int = 24
    min_sentence_chars: int = 10
    seed: int = 0
    clip_norm: float = 1.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ValueError("learning_rate, batch_size and epochs must be positive")


def prepare_unlabeled(source, min_chars: int = 10) -> list[str]:
    """One sentence per line; lines shorter than ``min_chars`` are dropped."""
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [line.rstrip("\n") for line in source]
    return [line for line in lines if len(line) >= min_chars]


def prepare_unlabeled_file(path: str, min_chars: int = 10) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return prepare_unlabeled(f, min_chars)


def distill_loss(teacher_logits, student_logits: Tensor,
                 temperature: float) -> Tensor:
    """Mean over positions of H(softmax(t/T), softmax(s/T)).

    ``teacher_logits`` is treated as a constant; only the student side
    receives gradient.
    """
    t_arr = (teacher_logits.data if isinstance(teacher_logits, Tensor)
             else np.asarray(teacher_logits, dtype=np.float64))
    if t_arr.shape != student_logits.shape:
        raise ValueError(
            f"shape mismatch: teacher {t_arr.shape} vs student {student_logits.shape}")
    target = T.softmax_with_temperature(Tensor(t_arr), temperature)
    return T.cross_entropy(target, T.softmax_with_temperature(student_logits,
                                                              temperature))


# logit shards ----------------------------------------------------------------

SHARD_MANIFEST = "shards.json"


def generate_teacher_logits(teacher: Tagger, sentences: list[str], out_dir: str,
                            shard_size: int = 256, batch_size: int = 32) -> str:
    """Cache the teacher's per-piece logits for every sentence into shards.

    Logits are stored for every piece including [CLS]/[SEP] (the training
    loss later masks those rows). Returns the shard manifest path. Shards
    are self-contained: the manifest carries the teacher's label set and
    wordpiece vocab so students can train without the teacher.
    """
    if teacher.encoder.model_type != "transformer":
        raise DataError("logit generation needs a transformer teacher")
    vocab = teacher.vocab
    entries: list[np.ndarray] = []
    for sentence in sentences:
        tokens = sentence.split()
        if not tokens:
            continue
        for enc in encode_sentence(tokens, vocab, teacher.max_len):
            ids = np.asarray(enc.piece_ids, dtype=np.int64)
            entries.append(ids[ids != vocab.pad_id])

    os.makedirs(out_dir, exist_ok=True)
    shard_infos = []
    for shard_idx, lo in enumerate(range(0, len(entries), shard_size)):
        chunk = entries[lo:lo + shard_size]
        arrays: dict[str, np.ndarray] = {}
        for j_lo in range(0, len(chunk), batch_size):
            batch = chunk[j_lo:j_lo + batch_size]
            width = max(len(ids) for ids in batch)
            ids_mat = np.full((len(batch), width), vocab.pad_id, dtype=np.int64)
            for i, ids in enumerate(batch):
                ids_mat[i, :len(ids)] = ids
            mask = (ids_mat != vocab.pad_id).astype(np.float64)
            with T.no_grad():
                states = teacher.encoder.forward(ids_mat, mask)
                logits = teacher.head.logits(states).data
            for i, ids in enumerate(batch):
                j = j_lo + i
                arrays[f"e{j:05d}.pieces"] = ids
                arrays[f"e{j:05d}.logits"] = logits[i, :len(ids)]
        name = f"shard_{shard_idx:04d}"
        write_container(out_dir, name, arrays, {"count": len(chunk)})
        shard_infos.append({
            "name": name,
            "count": len(chunk),
            "blob_sha256": sha256_file(os.path.join(out_dir, f"{name}.bin")),
        })

    manifest = {
        "shards": shard_infos,
        "n_entries": len(entries),
        "task": teacher.task,
        "labels": list(teacher.inventory.labels),
        "wordpiece_pieces": vocab.pieces,
        "max_len": teacher.max_len,
    }
    manifest_path = os.path.join(out_dir, SHARD_MANIFEST)
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    return manifest_path


class ShardSet:
    """Loaded logit shards: (piece_ids, logits) pairs plus teacher metadata."""

    def __init__(self, entries, task, labels, pieces, max_len):
        self.entries = entries
        self.task = task
        self.labels = labels
        self.pieces = pieces
        self.max_len = max_len

    def __len__(self):
        return len(self.entries)

    @classmethod
    def load(cls, directory: str) -> "ShardSet":
        manifest_path = os.path.join(directory, SHARD_MANIFEST)
        try:
            with open(manifest_path, encoding="utf-8") as f:
                manifest = json.load(f)
        except FileNotFoundError:
            raise DataError(f"no shard manifest at {manifest_path}")
        entries = []
        for info in manifest["shards"]:
            blob = os.path.join(directory, f"{info['name']}.bin")
            if sha256_file(blob) != info["blob_sha256"]:
                raise DataError(f"shard checksum mismatch: {blob}")
            arrays, meta = read_container(directory, info["name"])
            for j in range(meta["count"]):
                entries.append((arrays[f"e{j:05d}.pieces"],
                                arrays[f"e{j:05d}.logits"]))
        return cls(entries, manifest["task"], manifest["labels"],
                   manifest["wordpiece_pieces"], manifest["max_len"])


# student training --------------------------------------------------------------


@dataclass
class DistillResult:
    phase1_losses: list[float]
    phase1_epoch_means: list[float]
    finetune: FinetuneResult
    student_dir: str | None = None
    temperature: float = 3.0


def _phase1_batch_loss(student: TransformerModel, head: TaggingHead,
                       vocab: WordpieceVocab, batch, temperature: float) -> Tensor:
    width = max(len(ids) for ids, _ in batch)
    ids_mat = np.full((len(batch), width), vocab.pad_id, dtype=np.int64)
    for i, (ids, _) in enumerate(batch):
        ids_mat[i, :len(ids)] = ids
    mask = (ids_mat != vocab.pad_id).astype(np.float64)
    states = student.forward(ids_mat, mask)

    # Positions 1..len-2 skip [CLS] and [SEP]; pads never enter the gather.
    rows_b, rows_p, teacher_rows = [], [], []
    for i, (ids, logits) in enumerate(batch):
        inner = np.arange(1, len(ids) - 1, dtype=np.int64)
        rows_b.append(np.full(len(inner), i, dtype=np.int64))
        rows_p.append(inner)
        teacher_rows.append(logits[1:len(ids) - 1])
    gathered = states[(np.concatenate(rows_b), np.concatenate(rows_p))]
    student_logits = head.logits(gathered)
    return distill_loss(np.concatenate(teacher_rows), student_logits, temperature)


def distill(student_config: EncoderConfig, dconfig: DistillConfig,
            labeled: list[Sentence], out_dir: str | None = None,
            teacher: Tagger | None = None, shards_dir: str | None = None,
            unlabeled: list[str] | None = None,
            finetune_config: TrainConfig | None = None) -> tuple[Tagger, DistillResult]:
    """Train a student from scratch on teacher logits, then finetune it.

    Either pass ``shards_dir`` with pre-generated logits, or a ``teacher``
    plus ``unlabeled`` sentences (shards are then generated under
    ``out_dir``/shards). The student inherits the teacher's label space and
    wordpiece vocab; a labeled set with labels outside that space is an
    error.
    """
    if shards_dir is None:
        if teacher is None or unlabeled is None:
            raise ValueError("need shards_dir, or teacher plus unlabeled text")
        if out_dir is None:
            raise ValueError("out_dir required when generating shards")
        shards_dir = os.path.join(out_dir, "shards")
        generate_teacher_logits(teacher, unlabeled, shards_dir)
    shards = ShardSet.load(shards_dir)

    if student_config.vocab != len(shards.pieces):
        raise DataError(
            f"student vocab {student_config.vocab} != teacher wordpiece vocab "
            f"{len(shards.pieces)}")
    n_labels = shards.entries[0][1].shape[-1] if shards.entries else len(shards.labels)
    if n_labels != len(shards.labels):
        raise DataError("shard logits width disagrees with shard label set")
    inventory = LabelInventory(shards.task, tuple(shards.labels))
    for sent in labeled:
        for lab in sent.labels(shards.task):
            if lab not in inventory.index:
                raise DataError(
                    f"label {lab!r} in labeled data is outside the teacher's "
                    f"label space")

    vocab = WordpieceVocab(shards.pieces)
    student = TransformerModel(student_config, seed=dconfig.seed)
    head = TaggingHead(student_config.hidden, inventory, seed=dconfig.seed)
    student_tagger = Tagger(student, head, shards.task, vocab=vocab,
                            max_len=shards.max_len)

    params = student_tagger.parameters()
    optim = Adam(params, lr=dconfig.learning_rate)
    losses: list[float] = []
    epoch_means: list[float] = []
    log.info("phase 1: distilling over %d cached entries, T=%.1f",
             len(shards), dconfig.temperature)
    for epoch in range(dconfig.epochs):
        rng = np.random.default_rng(np.random.SeedSequence([dconfig.seed, epoch]))
        order = rng.permutation(len(shards.entries))
        epoch_losses = []
        for lo in range(0, len(order), dconfig.batch_size):
            batch = [shards.entries[i] for i in order[lo:lo + dconfig.batch_size]]
            optim.zero_grad()
            loss = _phase1_batch_loss(student, head, vocab, batch,
                                      dconfig.temperature)
            value = loss.item()
            if not np.isfinite(value):
                raise NumericalAbort(f"non-finite distill loss at epoch {epoch}")
            loss.backward()
            clip_global_norm(list(params.values()), dconfig.clip_norm)
            optim.step()
            losses.append(value)
            epoch_losses.append(value)
        epoch_means.append(float(np.mean(epoch_losses)))
        log.info("phase 1 epoch %d: mean loss %.6f", epoch, epoch_means[-1])

    ft_config = finetune_config or TrainConfig(task=shards.task, seed=dconfig.seed)
    log.info("phase 2: finetuning on %d labeled sentences at lr %g",
             len(labeled), ft_config.learning_rate)
    ft_result = finetune(student_tagger, labeled, ft_config)

    student_dir = None
    if out_dir is not None:
        student_dir = os.path.join(out_dir, "student")
        student_tagger.save(student_dir)
    return student_tagger, DistillResult(
        phase1_losses=losses, phase1_epoch_means=epoch_means,
        finetune=ft_result, student_dir=student_dir,
        temperature=dconfig.temperature)


def teacher_student_agreement(teacher: Tagger, student: Tagger,
                              sentences: list[Sentence]) -> float:
    """Fraction of tokens where the student picks the teacher's label."""
    agree = total = 0
    for sent in sentences:
        t_labels = [p.label for p in teacher.predict_tokens(sent.forms())]
        s_labels = [p.label for p in student.predict_tokens(sent.forms())]
        agree += sum(a == b for a, b in zip(t_labels, s_labels))
        total += len(t_labels)
    return agree / total if total else 0.0


def sweep_temperatures(student_config: EncoderConfig, dconfig: DistillConfig,
                       labeled: list[Sentence], eval_sentences: list[Sentence],
                       teacher: Tagger, shards_dir: str,
                       temperatures=(1.0, 2.0, 3.0),
                       finetune_config: TrainConfig | None = None) -> list[dict]:
    """Run one distillation per temperature; report teacher-student agreement."""
    rows = []
    for temp in temperatures:
        cfg = DistillConfig(
            temperature=float(temp), learning_rate=dconfig.learning_rate,
            batch_size=dconfig.batch_size, epochs=dconfig.epochs,
            min_sentence_chars=dconfig.min_sentence_chars, seed=dconfig.seed)
        student, result = distill(student_config, cfg, labeled,
                                  shards_dir=shards_dir,
                                  finetune_config=finetune_config)
        agreement = teacher_student_agreement(teacher, student, eval_sentences)
        rows.append({
            "temperature": float(temp),
            "agreement": agreement,
            "phase1_final_loss": result.phase1_epoch_means[-1],
        })
        log.info("T=%.1f: teacher-student agreement %.4f", temp, agreement)
    return rows

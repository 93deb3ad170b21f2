"""Experiment harnesses: distillation ablation and low-resource transfer.

Both run on frozen synthetic task specs small enough for one CPU core.
Directional claims are made on the median over several seeds; the spec
constants below were calibrated once on a pilot run and then frozen so the
checks stay meaningful.
"""

from __future__ import annotations

import logging
import os
import statistics
import tempfile
from dataclasses import dataclass, field

from .conllu import Sentence, build_inventory, mix_treebanks
from .distill import DistillConfig, distill, generate_teacher_logits
from .evaluate import evaluate
from .head import TaggingHead
from .synth import SyntheticTaskSpec, generate
from .tagger import Tagger
from .train import TrainConfig, finetune
from .transformer import EncoderConfig, TransformerModel
from .wordpiece import WordpieceVocab

log = logging.getLogger(__name__)

# Frozen ablation setup: a small labeled set against a much larger
# unlabeled pool is what gives distillation room to matter.
ABLATION_SPEC = SyntheticTaskSpec(
    n_languages=2, vocab_size=60, shared_fraction=0.25,
    train_size=24, dev_size=10, test_size=40,
    min_len=4, max_len=8, unlabeled_size=400, seed=7,
)
ABLATION_TEACHER = EncoderConfig(layers=3, hidden=48, intermediate=96, heads=4,
                                 vocab=0, max_positions=64)
ABLATION_STUDENT = EncoderConfig(layers=1, hidden=16, intermediate=32, heads=2,
                                 vocab=0, max_positions=64)
ABLATION_TEACHER_EPOCHS = 28
ABLATION_DISTILL_EPOCHS = 8
ABLATION_FINETUNE_EPOCHS = 6
ABLATION_SCRATCH_EPOCHS = 14

# Frozen low-resource setup: one language capped at 24 training sentences,
# half of the vocabulary shared with the big language.
LOWRES_SPEC = SyntheticTaskSpec(
    n_languages=2, vocab_size=60, shared_fraction=0.5,
    train_size=240, dev_size=10, test_size=60,
    min_len=4, max_len=8, unlabeled_size=0, seed=11,
    tiny_train_sizes={"lang1": 24},
)
LOWRES_MODEL = EncoderConfig(layers=2, hidden=32, intermediate=64, heads=4,
                             vocab=0, max_positions=64)
LOWRES_EPOCHS = 8


def _with_vocab(config: EncoderConfig, vocab_size: int) -> EncoderConfig:
    d = config.to_dict()
    d["vocab"] = vocab_size
    return EncoderConfig.from_dict(d)


def _fresh_tagger(config: EncoderConfig, vocab: WordpieceVocab, inventory,
                  task: str, seed: int, max_len: int) -> Tagger:
    encoder = TransformerModel(_with_vocab(config, len(vocab)), seed=seed)
    head = TaggingHead(encoder.config.hidden, inventory, seed=seed)
    return Tagger(encoder, head, task, vocab=vocab, max_len=max_len)


@dataclass
class AblationRow:
    seed: int
    teacher_f1: float
    distilled_f1: float
    scratch_f1: float


@dataclass
class AblationReport:
    rows: list[AblationRow]
    spec: SyntheticTaskSpec
    teacher_config: EncoderConfig
    student_config: EncoderConfig

    def median(self, name: str) -> float:
        return statistics.median(getattr(r, name) for r in self.rows)


def run_ablation_seed(seed: int, spec: SyntheticTaskSpec = ABLATION_SPEC,
                      teacher_config: EncoderConfig = ABLATION_TEACHER,
                      student_config: EncoderConfig = ABLATION_STUDENT,
                      task: str = "pos", work_dir: str | None = None) -> AblationRow:
    """Train teacher, distilled student, and from-scratch student once.

    The scratch baseline sees only the labeled data but gets a larger epoch
    budget than the distilled student's finetune, so any gap is down to the
    distillation phase, not to starving the baseline.
    """
    corpus = generate(spec)
    vocab = WordpieceVocab(corpus.wordpiece_pieces)
    langs = spec.language_ids()
    train = mix_treebanks([corpus.train[lang] for lang in langs], seed=seed)
    test = [(lang, corpus.test[lang]) for lang in langs]
    inventory = build_inventory(train, task)
    max_len = 64

    teacher = _fresh_tagger(teacher_config, vocab, inventory, task, seed, max_len)
    finetune(teacher, train, TrainConfig(
        learning_rate=1e-4, batch_size=8, epochs=ABLATION_TEACHER_EPOCHS,
        seed=seed, task=task))
    teacher_f1 = evaluate(teacher, test).macro_f1

    with tempfile.TemporaryDirectory() as tmp:
        shards_dir = os.path.join(work_dir or tmp, f"shards_{seed}")
        generate_teacher_logits(teacher, corpus.unlabeled, shards_dir)
        student_cfg = _with_vocab(student_config, len(vocab))
        distilled, _ = distill(
            student_cfg,
            DistillConfig(temperature=3.0, learning_rate=1e-4, batch_size=16,
                          epochs=ABLATION_DISTILL_EPOCHS, seed=seed),
            labeled=train,
            shards_dir=shards_dir,
            finetune_config=TrainConfig(learning_rate=3e-5, batch_size=8,
                                        epochs=ABLATION_FINETUNE_EPOCHS,
                                        seed=seed, task=task),
        )
    distilled_f1 = evaluate(distilled, test).macro_f1

    scratch = _fresh_tagger(student_config, vocab, inventory, task, seed, max_len)
    finetune(scratch, train, TrainConfig(
        learning_rate=1e-4, batch_size=8, epochs=ABLATION_SCRATCH_EPOCHS,
        seed=seed, task=task))
    scratch_f1 = evaluate(scratch, test).macro_f1

    row = AblationRow(seed=seed, teacher_f1=teacher_f1,
                      distilled_f1=distilled_f1, scratch_f1=scratch_f1)
    log.info("ablation seed %d: teacher %.4f distilled %.4f scratch %.4f",
             seed, teacher_f1, distilled_f1, scratch_f1)
    return row


def ablation_distill(seeds=(0, 1, 2, 3, 4), spec: SyntheticTaskSpec = ABLATION_SPEC,
                     task: str = "pos") -> AblationReport:
    rows = [run_ablation_seed(s, spec, task=task) for s in seeds]
    return AblationReport(rows=rows, spec=spec, teacher_config=ABLATION_TEACHER,
                          student_config=ABLATION_STUDENT)


@dataclass
class LowResourceRow:
    seed: int
    per_language_f1: float
    multilingual_f1: float
    tiny_train_size: int
    full_train_size: int


@dataclass
class LowResourceReport:
    rows: list[LowResourceRow]
    spec: SyntheticTaskSpec
    tiny_language: str

    def median(self, name: str) -> float:
        return statistics.median(getattr(r, name) for r in self.rows)


def run_lowresource_seed(seed: int, spec: SyntheticTaskSpec = LOWRES_SPEC,
                         model_config: EncoderConfig = LOWRES_MODEL,
                         task: str = "pos") -> LowResourceRow:
    """Tiny-language-only model vs one multilingual model, same recipe."""
    if not spec.tiny_train_sizes:
        raise ValueError("spec must cap one language's training size")
    tiny_lang = sorted(spec.tiny_train_sizes)[0]
    corpus = generate(spec)
    vocab = WordpieceVocab(corpus.wordpiece_pieces)
    langs = spec.language_ids()
    inventory = build_inventory(
        [s for lang in langs for s in corpus.train[lang]], task)
    test = [(tiny_lang, corpus.test[tiny_lang])]
    max_len = 64
    config = TrainConfig(learning_rate=1e-4, batch_size=8, epochs=LOWRES_EPOCHS,
                         seed=seed, task=task)

    per_lang = _fresh_tagger(model_config, vocab, inventory, task, seed, max_len)
    finetune(per_lang, mix_treebanks([corpus.train[tiny_lang]], seed=seed), config)
    per_lang_f1 = evaluate(per_lang, test).macro_f1

    multi = _fresh_tagger(model_config, vocab, inventory, task, seed, max_len)
    finetune(multi, mix_treebanks([corpus.train[lang] for lang in langs],
                                  seed=seed), config)
    multi_f1 = evaluate(multi, test).macro_f1

    row = LowResourceRow(
        seed=seed, per_language_f1=per_lang_f1, multilingual_f1=multi_f1,
        tiny_train_size=len(corpus.train[tiny_lang]),
        full_train_size=sum(len(corpus.train[lang]) for lang in langs))
    log.info("lowres seed %d: per-language %.4f multilingual %.4f",
             seed, per_lang_f1, multi_f1)
    return row


def lowresource_transfer(seeds=(0, 1, 2, 3, 4),
                         spec: SyntheticTaskSpec = LOWRES_SPEC,
                         task: str = "pos") -> LowResourceReport:
    rows = [run_lowresource_seed(s, spec, task=task) for s in seeds]
    tiny_lang = sorted(spec.tiny_train_sizes)[0]
    return LowResourceReport(rows=rows, spec=spec, tiny_language=tiny_lang)

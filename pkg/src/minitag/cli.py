"""Command-line entry point for the whole pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical abort.
Every flag has a config-file equivalent (same name, dashes as
underscores); explicit flags override the config file. Each run writes a
run_manifest.json (resolved config, seed, version, input checksums) next
to its outputs, and report paths emit a PNG figure next to every CSV.
"""

from __future__ import annotations

import os

# Pin BLAS to one thread before numpy loads: keeps wall-clock benchmarks
# comparable and training runs deterministic.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import csv
import json
import logging
import subprocess
import sys

import numpy as np

from . import __version__
from .bench import bench, bench_csv, bench_table
from .checkpoint import sha256_file
from .config import coerce, read_kv_config
from .conllu import (build_inventory, load_embeddings_file, load_treebanks,
                     mix_treebanks, parse_conllu_file, read_treebank_manifest,
                     write_conllu)
from .distill import (DistillConfig, distill, prepare_unlabeled_file,
                      sweep_temperatures)
from .errors import DataError, NumericalAbort
from .evaluate import evaluate, tag_sentence
from .experiments import (ABLATION_SPEC, LOWRES_SPEC, ablation_distill,
                          lowresource_transfer)
from .head import TaggingHead
from .metalstm import CharVocab, MetaLstmConfig, MetaLstmModel
from .synth import SyntheticTaskSpec, gen_synthetic
from .tagger import Tagger
from .train import TrainConfig, finetune, train_metalstm_staged, write_loss_curve
from .transformer import (EncoderConfig, TransformerModel, bert_base_config,
                          count_flops, count_parameters, minibert_config)
from .wordpiece import CLS, PAD, SEP, UNK, WordpieceVocab

log = logging.getLogger("minitag")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# config/flag resolution -------------------------------------------------------


def _resolve(args: argparse.Namespace, defaults: dict, schema: dict[str, type]):
    """defaults < config file < explicit CLI flags."""
    resolved = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        resolved.update(coerce(read_kv_config(config_path), schema, config_path))
    for key in schema:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _write_manifest(out_dir: str, command: str, resolved: dict,
                    inputs: list[str], outputs: list[str]):
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "command": command,
        "config": {k: v for k, v in resolved.items()},
        "seed": resolved.get("seed"),
        "version": _tool_version(),
        "input_checksums": {p: sha256_file(p) for p in inputs if os.path.isfile(p)},
        "outputs": outputs,
    }
    path = os.path.join(out_dir, "run_manifest.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1, sort_keys=True, default=str)
        f.write("\n")


def _tool_version() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)))
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except Exception:
        pass
    return __version__


def _write_csv(path: str, header: list[str], rows: list[list]):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


ENCODER_SCHEMA = {"layers": int, "hidden": int, "intermediate": int,
                  "heads": int, "vocab": int, "max_positions": int,
                  "type_vocab": int}
METALSTM_SCHEMA = {"char_emb_dim": int, "char_hidden": int, "word_emb_dim": int,
                   "word_hidden": int, "joint_hidden": int}


def _load_encoder_config(path: str, vocab_size: int | None = None) -> EncoderConfig:
    values = coerce(read_kv_config(path), ENCODER_SCHEMA, path)
    if vocab_size is not None:
        values["vocab"] = vocab_size
    if "vocab" not in values or values["vocab"] <= 0:
        raise DataError(f"{path}: vocab must be set (or pass a wordpiece vocab)")
    return EncoderConfig(**values)


# subcommand: params -----------------------------------------------------------


def _cmd_params(args) -> int:
    if args.preset:
        config = {"minibert": minibert_config(),
                  "bert-base": bert_base_config()}[args.preset]
    elif args.config:
        config = _load_encoder_config(args.config)
    else:
        raise DataError("params needs --config or --preset")
    counts = count_parameters(config)
    print(f"configuration: layers={config.layers} hidden={config.hidden} "
          f"intermediate={config.intermediate} heads={config.heads} "
          f"vocab={config.vocab} max_positions={config.max_positions}")
    print(f"{'category':<12}{'parameters':>14}")
    for key in ("embedding", "hidden", "total"):
        print(f"{key:<12}{counts[key]:>14,}")
    print(f"note: {counts['note']}")
    for seq_len in args.seq_lens:
        flops = count_flops(config, seq_len)
        print(f"\nFLOPs at {seq_len} positions:")
        for key in ("attention_quadratic", "attention_projections", "ffn", "total"):
            print(f"  {key:<24}{flops[key]:>16,}")
    return 0


# subcommand: gen-synthetic ----------------------------------------------------

GEN_DEFAULTS = {"languages": 2, "vocab_size": 60, "shared_fraction": 0.25,
                "train_size": 80, "dev_size": 20, "test_size": 40,
                "min_len": 4, "max_len": 8, "unlabeled_size": 400, "seed": 0,
                "tiny_language": "", "tiny_train_size": 0,
                "whole_word_pieces": False}
GEN_SCHEMA = {k: type(v) for k, v in GEN_DEFAULTS.items()}


def _cmd_gen_synthetic(args) -> int:
    resolved = _resolve(args, GEN_DEFAULTS, GEN_SCHEMA)
    tiny = {}
    if resolved["tiny_language"]:
        tiny[resolved["tiny_language"]] = resolved["tiny_train_size"]
    spec = SyntheticTaskSpec(
        n_languages=resolved["languages"], vocab_size=resolved["vocab_size"],
        shared_fraction=resolved["shared_fraction"],
        train_size=resolved["train_size"], dev_size=resolved["dev_size"],
        test_size=resolved["test_size"], min_len=resolved["min_len"],
        max_len=resolved["max_len"], seed=resolved["seed"],
        unlabeled_size=resolved["unlabeled_size"], tiny_train_sizes=tiny,
        whole_word_pieces=resolved["whole_word_pieces"])
    paths = gen_synthetic(spec, args.out)
    for name, path in paths.items():
        print(f"{name}: {path}")
    _write_manifest(args.out, "gen-synthetic", resolved, [],
                    sorted(paths.values()))
    return 0


# subcommand: train --------------------------------------------------------------

TRAIN_DEFAULTS = {"arch": "transformer", "task": "pos", "learning_rate": 3e-5,
                  "batch_size": 16, "epochs": 10, "seed": 0, "max_len": 128,
                  "stages": "char,word,joint", "freeze_pretrained": False}
TRAIN_SCHEMA = {"arch": str, "task": str, "learning_rate": float,
                "batch_size": int, "epochs": int, "seed": int, "max_len": int,
                "stages": str, "freeze_pretrained": bool}


def _cmd_train(args) -> int:
    resolved = _resolve(args, TRAIN_DEFAULTS, TRAIN_SCHEMA)
    treebanks = load_treebanks(args.train_manifest)
    train_sentences = mix_treebanks([tb for _, tb in treebanks],
                                    seed=resolved["seed"])
    dev_sentences = None
    if args.dev_manifest:
        dev_sentences = [s for _, tb in load_treebanks(args.dev_manifest)
                         for s in tb]
    inventory = build_inventory(train_sentences, resolved["task"])
    tconfig = TrainConfig(
        learning_rate=resolved["learning_rate"],
        batch_size=resolved["batch_size"], epochs=resolved["epochs"],
        seed=resolved["seed"], task=resolved["task"])

    inputs = [args.train_manifest]
    inputs += [p for _, p in read_treebank_manifest(args.train_manifest)]

    if resolved["arch"] == "transformer":
        if not args.wordpiece_vocab:
            raise DataError("transformer training needs --wordpiece-vocab")
        vocab = WordpieceVocab.from_file(args.wordpiece_vocab)
        if args.encoder_config:
            config = _load_encoder_config(args.encoder_config, len(vocab))
        else:
            config = EncoderConfig(layers=2, hidden=32, intermediate=64, heads=4,
                                   vocab=len(vocab),
                                   max_positions=resolved["max_len"])
        encoder = TransformerModel(config, seed=resolved["seed"])
        head = TaggingHead(config.hidden, inventory, seed=resolved["seed"])
        tagger = Tagger(encoder, head, resolved["task"], vocab=vocab,
                        max_len=min(resolved["max_len"], config.max_positions))
        result = finetune(tagger, train_sentences, tconfig, out_dir=args.out,
                          dev_sentences=dev_sentences, resume_from=args.resume)
        write_loss_curve(result.loss_rows,
                         os.path.join(args.out, "loss_curve.csv"))
        from .plots import save_loss_curve

        save_loss_curve(result.loss_rows,
                        os.path.join(args.out, "loss_curve.png"))
        if result.best_epoch is not None:
            print(f"best dev macro F1 {result.best_dev_f1:.4f} "
                  f"at epoch {result.best_epoch}")
        inputs.append(args.wordpiece_vocab)
    elif resolved["arch"] == "metalstm":
        if not args.embeddings:
            raise DataError("metalstm training needs --embeddings")
        table = load_embeddings_file(args.embeddings)
        char_vocab = CharVocab.from_sentences(train_sentences)
        if args.encoder_config:
            values = coerce(read_kv_config(args.encoder_config), METALSTM_SCHEMA,
                            args.encoder_config)
            values.setdefault("word_emb_dim", table.dim)
            mconfig = MetaLstmConfig(**values)
        else:
            mconfig = MetaLstmConfig(char_emb_dim=16, char_hidden=32,
                                     word_emb_dim=table.dim, word_hidden=64,
                                     joint_hidden=64)
        encoder = MetaLstmModel(mconfig, char_vocab, table,
                                seed=resolved["seed"])
        head = TaggingHead(encoder.output_dim, inventory,
                           seed=resolved["seed"])
        tagger = Tagger(encoder, head, resolved["task"])
        stages = tuple(s for s in resolved["stages"].split(",") if s)
        staged = train_metalstm_staged(
            tagger, train_sentences, tconfig, stages=stages,
            freeze_pretrained=resolved["freeze_pretrained"], out_dir=args.out)
        rows = [[stage, epoch, f"{loss:.10g}"]
                for stage in staged.stages_run
                for epoch, loss in enumerate(staged.stage_losses[stage])]
        _write_csv(os.path.join(args.out, "stage_losses.csv"),
                   ["stage", "epoch", "mean_loss"], rows)
        print(f"stages run: {', '.join(staged.stages_run)}")
        inputs.append(args.embeddings)
    else:
        raise DataError(f"unknown arch {resolved['arch']!r}")

    final_dir = os.path.join(args.out, "final")
    tagger.save(final_dir)
    print(f"final model: {final_dir}")
    _write_manifest(args.out, "train", resolved, inputs, [final_dir])
    return 0


# subcommand: tag ----------------------------------------------------------------


def _cmd_tag(args) -> int:
    tagger = Tagger.load(args.model)
    sentences = parse_conllu_file(args.input)
    tagged = [tag_sentence(tagger, s, codemixed=args.codemixed)
              for s in sentences]
    text = write_conllu(tagged)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
        print(f"wrote {len(tagged)} sentences to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


# subcommand: eval ---------------------------------------------------------------


def _cmd_eval(args) -> int:
    tagger = Tagger.load(args.model)
    if args.gold.endswith(".conllu"):
        tb_id = os.path.splitext(os.path.basename(args.gold))[0]
        treebanks = [(tb_id, parse_conllu_file(args.gold, tb_id))]
    else:
        treebanks = load_treebanks(args.gold)
    report = evaluate(tagger, treebanks, codemixed=args.codemixed)
    print(report.table_text())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        csv_path = os.path.join(args.out, "eval.csv")
        with open(csv_path, "w", encoding="utf-8") as f:
            f.write(report.csv_text())
        from .plots import save_eval_bars

        save_eval_bars(report, os.path.join(args.out, "eval.png"))
        _write_manifest(args.out, "eval",
                        {"model": args.model, "gold": args.gold,
                         "codemixed": args.codemixed, "seed": None},
                        [args.gold], [csv_path])
        print(f"report: {csv_path}")
    return 0


# subcommand: distill ------------------------------------------------------------

DISTILL_DEFAULTS = {"temperature": 3.0, "learning_rate": 1e-4,
                    "batch_size": 256, "epochs": 24, "min_sentence_chars": 10,
                    "seed": 0, "finetune_learning_rate": 3e-5,
                    "finetune_batch_size": 16, "finetune_epochs": 10,
                    "sweep": ""}
DISTILL_SCHEMA = {"temperature": float, "learning_rate": float,
                  "batch_size": int, "epochs": int, "min_sentence_chars": int,
                  "seed": int, "finetune_learning_rate": float,
                  "finetune_batch_size": int, "finetune_epochs": int,
                  "sweep": str}


def _cmd_distill(args) -> int:
    resolved = _resolve(args, DISTILL_DEFAULTS, DISTILL_SCHEMA)
    teacher = Tagger.load(args.teacher)
    labeled_banks = load_treebanks(args.labeled)
    labeled = mix_treebanks([tb for _, tb in labeled_banks],
                            seed=resolved["seed"])
    unlabeled = prepare_unlabeled_file(args.unlabeled,
                                       resolved["min_sentence_chars"])
    student_config = _load_encoder_config(args.student_config,
                                          len(teacher.vocab))
    dconfig = DistillConfig(
        temperature=resolved["temperature"],
        learning_rate=resolved["learning_rate"],
        batch_size=resolved["batch_size"], epochs=resolved["epochs"],
        min_sentence_chars=resolved["min_sentence_chars"],
        seed=resolved["seed"])
    ft_config = TrainConfig(
        learning_rate=resolved["finetune_learning_rate"],
        batch_size=resolved["finetune_batch_size"],
        epochs=resolved["finetune_epochs"], seed=resolved["seed"],
        task=teacher.task)

    inputs = [args.unlabeled, args.labeled, args.student_config]
    outputs = []
    if resolved["sweep"]:
        temps = [float(t) for t in resolved["sweep"].split(",")]
        from .distill import generate_teacher_logits

        shards_dir = os.path.join(args.out, "shards")
        generate_teacher_logits(teacher, unlabeled, shards_dir)
        rows = sweep_temperatures(student_config, dconfig, labeled, labeled,
                                  teacher, shards_dir, temperatures=temps,
                                  finetune_config=ft_config)
        csv_path = os.path.join(args.out, "sweep.csv")
        _write_csv(csv_path, ["temperature", "agreement", "phase1_final_loss"],
                   [[r["temperature"], f"{r['agreement']:.6f}",
                     f"{r['phase1_final_loss']:.6f}"] for r in rows])
        from .plots import save_sweep_curve

        save_sweep_curve(rows, os.path.join(args.out, "sweep.png"))
        for r in rows:
            print(f"T={r['temperature']:.1f}: agreement {r['agreement']:.4f}")
        outputs.append(csv_path)
    else:
        student, result = distill(student_config, dconfig, labeled,
                                  out_dir=args.out, teacher=teacher,
                                  unlabeled=unlabeled,
                                  finetune_config=ft_config)
        rows = [(0, i, v) for i, v in enumerate(result.phase1_losses)]
        csv_path = os.path.join(args.out, "distill_loss.csv")
        write_loss_curve(rows, csv_path)
        from .plots import save_loss_curve

        save_loss_curve(rows, os.path.join(args.out, "distill_loss.png"),
                        title="distillation loss (phase 1)")
        print(f"student checkpoint: {result.student_dir}")
        outputs.append(result.student_dir)
    _write_manifest(args.out, "distill", resolved, inputs, outputs)
    return 0


# subcommand: bench --------------------------------------------------------------


def _dummy_tagger_from_config(config: EncoderConfig, seed: int = 0) -> Tagger:
    pieces = [PAD, UNK, CLS, SEP] + [f"p{i}" for i in range(config.vocab - 4)]
    vocab = WordpieceVocab(pieces)
    from .conllu import UPOS_TAGS, LabelInventory

    inventory = LabelInventory("pos", UPOS_TAGS)
    encoder = TransformerModel(config, seed=seed)
    head = TaggingHead(config.hidden, inventory, seed=seed)
    return Tagger(encoder, head, "pos", vocab=vocab,
                  max_len=config.max_positions)


def _cmd_bench(args) -> int:
    models = []
    for spec in args.model:
        if "=" not in spec:
            raise DataError(f"--model takes ID=PATH, got {spec!r}")
        model_id, path = spec.split("=", 1)
        if os.path.isdir(path):
            models.append((model_id, Tagger.load(path)))
        else:
            config = _load_encoder_config(path)
            models.append((model_id, _dummy_tagger_from_config(config,
                                                               args.seed)))
    seq_lens = tuple(int(n) for n in args.seq_lens.split(","))
    rows = bench(models, reference_id=args.reference, seq_lens=seq_lens,
                 runs=args.runs, warmups=args.warmups, seed=args.seed)
    print(bench_table(rows, args.reference))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        csv_path = os.path.join(args.out, "bench.csv")
        with open(csv_path, "w", encoding="utf-8") as f:
            f.write(bench_csv(rows))
        from .plots import save_bench_bars

        save_bench_bars(rows, os.path.join(args.out, "bench.png"))
        _write_manifest(args.out, "bench",
                        {"models": args.model, "reference": args.reference,
                         "seq_lens": args.seq_lens, "runs": args.runs,
                         "warmups": args.warmups, "seed": args.seed},
                        [], [csv_path])
        print(f"report: {csv_path}")
    return 0


# subcommand: ablate --------------------------------------------------------------


def _cmd_ablate(args) -> int:
    seeds = tuple(int(s) for s in args.seeds.split(","))
    os.makedirs(args.out, exist_ok=True)
    if args.experiment == "distill":
        report = ablation_distill(seeds=seeds, task=args.task)
        csv_path = os.path.join(args.out, "ablation.csv")
        _write_csv(csv_path, ["seed", "teacher_f1", "distilled_f1", "scratch_f1"],
                   [[r.seed, f"{r.teacher_f1:.6f}", f"{r.distilled_f1:.6f}",
                     f"{r.scratch_f1:.6f}"] for r in report.rows])
        from .plots import save_ablation_bars

        save_ablation_bars(report, os.path.join(args.out, "ablation.png"))
        print(f"median teacher F1:   {report.median('teacher_f1'):.4f}")
        print(f"median distilled F1: {report.median('distilled_f1'):.4f}")
        print(f"median scratch F1:   {report.median('scratch_f1'):.4f}")
    else:
        report = lowresource_transfer(seeds=seeds, task=args.task)
        csv_path = os.path.join(args.out, "lowresource.csv")
        _write_csv(csv_path,
                   ["seed", "per_language_f1", "multilingual_f1",
                    "tiny_train_size", "full_train_size"],
                   [[r.seed, f"{r.per_language_f1:.6f}",
                     f"{r.multilingual_f1:.6f}", r.tiny_train_size,
                     r.full_train_size] for r in report.rows])
        from .plots import save_lowresource_bars

        save_lowresource_bars(report, os.path.join(args.out, "lowresource.png"))
        print(f"median per-language F1: {report.median('per_language_f1'):.4f}")
        print(f"median multilingual F1: {report.median('multilingual_f1'):.4f}")
    _write_manifest(args.out, "ablate",
                    {"experiment": args.experiment, "seeds": args.seeds,
                     "task": args.task, "seed": seeds[0]}, [], [csv_path])
    print(f"report: {csv_path}")
    return 0


# parser ---------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="minitag",
                     description="Multilingual tagging, distillation and "
                                 "size/speed accounting toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", parents=[], help="parameter and FLOP tables")
    p.add_argument("--config", help="encoder config file (key = value)")
    p.add_argument("--preset", choices=["minibert", "bert-base"],
                   help="a built-in encoder shape")
    p.add_argument("--seq-lens", dest="seq_lens", type=lambda s: [int(x) for x in s.split(",")],
                   default=[32, 128], help="FLOP table lengths (default 32,128)")
    p.set_defaults(func=_cmd_params)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic multilingual corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="config file mirroring the flags below")
    p.add_argument("--languages", type=int, help="number of languages (default 2)")
    p.add_argument("--vocab-size", dest="vocab_size", type=int,
                   help="words per language (default 60)")
    p.add_argument("--shared-fraction", dest="shared_fraction", type=float,
                   help="fraction of vocabulary shared across languages (default 0.25)")
    p.add_argument("--train-size", dest="train_size", type=int,
                   help="training sentences per language (default 80)")
    p.add_argument("--dev-size", dest="dev_size", type=int,
                   help="dev sentences per language (default 20)")
    p.add_argument("--test-size", dest="test_size", type=int,
                   help="test sentences per language (default 40)")
    p.add_argument("--min-len", dest="min_len", type=int,
                   help="min words per sentence (default 4)")
    p.add_argument("--max-len", dest="max_len", type=int,
                   help="max words per sentence (default 8)")
    p.add_argument("--unlabeled-size", dest="unlabeled_size", type=int,
                   help="raw sentences for distillation (default 400)")
    p.add_argument("--seed", type=int, help="generation seed (default 0)")
    p.add_argument("--tiny-language", dest="tiny_language",
                   help="language id to cap for low-resource runs")
    p.add_argument("--tiny-train-size", dest="tiny_train_size", type=int,
                   help="training cap for the tiny language")
    p.add_argument("--whole-word-pieces", dest="whole_word_pieces",
                   action="store_true", default=None,
                   help="also add whole words to the wordpiece vocab")
    p.set_defaults(func=_cmd_gen_synthetic)

    p = sub.add_parser("train", help="train a tagger on a treebank manifest")
    p.add_argument("--train-manifest", dest="train_manifest", required=True,
                   help="treebank manifest: lines of id<TAB>path")
    p.add_argument("--dev-manifest", dest="dev_manifest",
                   help="dev manifest for model selection")
    p.add_argument("--out", required=True, help="checkpoint/report directory")
    p.add_argument("--config", help="config file mirroring the flags below")
    p.add_argument("--arch", choices=["transformer", "metalstm"],
                   help="encoder family (default transformer)")
    p.add_argument("--task", choices=["pos", "morph"],
                   help="labeling task (default pos)")
    p.add_argument("--encoder-config", dest="encoder_config",
                   help="encoder shape config file")
    p.add_argument("--wordpiece-vocab", dest="wordpiece_vocab",
                   help="wordpiece vocab file (transformer)")
    p.add_argument("--embeddings", help="word embedding text file (metalstm)")
    p.add_argument("--learning-rate", dest="learning_rate", type=float,
                   help="constant learning rate (default 3e-5, the finetuning rate)")
    p.add_argument("--batch-size", dest="batch_size", type=int,
                   help="sentences per step (default 16)")
    p.add_argument("--epochs", type=int,
                   help="training epochs (default 10; use 50 for morphology)")
    p.add_argument("--seed", type=int, help="run seed (default 0)")
    p.add_argument("--max-len", dest="max_len", type=int,
                   help="max wordpiece positions per encoding (default 128)")
    p.add_argument("--stages",
                   help="metalstm stage list (default char,word,joint)")
    p.add_argument("--freeze-pretrained", dest="freeze_pretrained",
                   action="store_true", default=None,
                   help="freeze char/word nets during the joint stage")
    p.add_argument("--resume", help="checkpoint dir to resume from")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("tag", help="tag a CoNLL-U file with a trained model")
    p.add_argument("--model", required=True, help="checkpoint directory")
    p.add_argument("--input", required=True, help="input .conllu")
    p.add_argument("--output", help="output path (stdout if omitted)")
    p.add_argument("--codemixed", action="store_true",
                   help="substitute the second-best label where X wins")
    p.set_defaults(func=_cmd_tag)

    p = sub.add_parser("eval", help="score a model against gold treebanks")
    p.add_argument("--model", required=True, help="checkpoint directory")
    p.add_argument("--gold", required=True,
                   help="gold .conllu file or treebank manifest")
    p.add_argument("--codemixed", action="store_true",
                   help="apply the second-best rule before scoring")
    p.add_argument("--out", help="directory for eval.csv + eval.png")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("distill", help="distill a teacher into a small student")
    p.add_argument("--teacher", required=True, help="teacher checkpoint dir")
    p.add_argument("--unlabeled", required=True,
                   help="raw text, one sentence per line")
    p.add_argument("--student-config", dest="student_config", required=True,
                   help="student encoder config file")
    p.add_argument("--labeled", required=True,
                   help="treebank manifest for phase-2 finetuning")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="config file mirroring the flags below")
    p.add_argument("--temperature", type=float,
                   help="softening temperature (default 3)")
    p.add_argument("--learning-rate", dest="learning_rate", type=float,
                   help="phase-1 learning rate (default 1e-4)")
    p.add_argument("--batch-size", dest="batch_size", type=int,
                   help="phase-1 batch size (default 256)")
    p.add_argument("--epochs", type=int, help="phase-1 epochs (default 24)")
    p.add_argument("--min-sentence-chars", dest="min_sentence_chars", type=int,
                   help="drop unlabeled sentences shorter than this (default 10)")
    p.add_argument("--finetune-learning-rate", dest="finetune_learning_rate",
                   type=float, help="phase-2 learning rate (default 3e-5)")
    p.add_argument("--finetune-batch-size", dest="finetune_batch_size",
                   type=int, help="phase-2 batch size (default 16)")
    p.add_argument("--finetune-epochs", dest="finetune_epochs", type=int,
                   help="phase-2 epochs (default 10)")
    p.add_argument("--seed", type=int, help="run seed (default 0)")
    p.add_argument("--sweep", help="comma list of temperatures to compare, "
                                   "e.g. 1,2,3; reports teacher-student agreement")
    p.set_defaults(func=_cmd_distill)

    p = sub.add_parser("bench", help="single-thread CPU latency and FLOP report")
    p.add_argument("--model", action="append", required=True,
                   help="ID=PATH; PATH is a checkpoint dir or encoder config file",
                   metavar="ID=PATH")
    p.add_argument("--reference", required=True,
                   help="model ID speedups are measured against")
    p.add_argument("--seq-lens", dest="seq_lens", default="32,128",
                   help="comma list of input lengths (default 32,128)")
    p.add_argument("--runs", type=int, default=30,
                   help="timed runs per cell (default 30)")
    p.add_argument("--warmups", type=int, default=5,
                   help="warmup runs per cell (default 5)")
    p.add_argument("--seed", type=int, default=0, help="input sampling seed")
    p.add_argument("--out", help="directory for bench.csv + bench.png")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("ablate", help="run a frozen toy-scale experiment")
    p.add_argument("--experiment", choices=["distill", "lowresource"],
                   default="distill", help="which harness to run")
    p.add_argument("--seeds", default="0,1,2,3,4",
                   help="comma list of seeds (default 0,1,2,3,4)")
    p.add_argument("--task", choices=["pos", "morph"], default="pos")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except NumericalAbort as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        if e.batch_ids:
            print(f"last batch: {e.batch_ids}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface tying corpus, training, decoding, and scoring.

Subcommands: train, parse, eval, linearize, delinearize, gen-corpus,
inspect-checkpoint.  Options resolve in three layers: built-in defaults,
then a JSON config file (--config), then explicit flags.  Every command
that writes files also writes the resolved options next to its output
(<output>.config.json) so a run can be reproduced from its artifacts.
The environment variable SEQ2TREE_OUT_DIR, when set, re-roots all
relative output paths; it is the only environment override.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import checkpoint as ckpt
from .corpusgen import default_grammar, make_corpus, parse_grammar, \
    save_corpus, write_grammar
from .decode import parse_sentence
from .evaluate import bracket_f1
from .model import Hyper, init_params
from .train import TrainConfig, prepare_examples, train_loop
from .treetext import (
    delinearize,
    linearize,
    normalize_pos,
    read_trees_file,
    words,
    write_bracketed,
    write_trees_file,
)
from .vocab import build_vocab, load_vocab, save_vocab

OUT_DIR_ENV = "SEQ2TREE_OUT_DIR"


def _outpath(path):
    """Apply the output-directory override to a relative output path."""
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _write_resolved(anchor, command, resolved):
    """Record the options a run actually used, next to its output."""
    path = anchor + ".config.json" if not os.path.isdir(anchor) \
        else os.path.join(anchor, "config.resolved.json")
    payload = {"command": command}
    payload.update(resolved)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve(args, defaults):
    """defaults < config file < explicit flags (argparse None = unset)."""
    resolved = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ValueError(
                f"{args.config}: unknown config keys {sorted(unknown)}")
        resolved.update(loaded)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


# ---------------------------------------------------------------------------
# linearize / delinearize
# ---------------------------------------------------------------------------


def cmd_linearize(args):
    trees = read_trees_file(args.trees)
    out = _outpath(args.out)
    _ensure_parent(out)
    with open(out, "w", encoding="utf-8") as fh:
        for k, tree in enumerate(trees):
            try:
                symbols = linearize(normalize_pos(tree))
            except ValueError as err:
                raise ValueError(f"tree {k}: {err}") from err
            fh.write(" ".join(symbols) + "\n")
    _write_resolved(out, "linearize", {"trees": args.trees, "out": args.out})
    print(f"linearized {len(trees)} trees -> {out}")
    return 0


def cmd_delinearize(args):
    with open(args.symbols, encoding="utf-8") as fh:
        symbol_lines = fh.read().splitlines()
    with open(args.sentences, encoding="utf-8") as fh:
        sentence_lines = fh.read().splitlines()
    if len(symbol_lines) != len(sentence_lines):
        raise ValueError(
            f"{len(symbol_lines)} symbol lines but "
            f"{len(sentence_lines)} sentence lines")
    trees = []
    for k, (sym_line, sent_line) in enumerate(
            zip(symbol_lines, sentence_lines), start=1):
        try:
            trees.append(delinearize(sym_line.split(), sent_line.split()))
        except ValueError as err:
            raise ValueError(f"line {k}: {err}") from err
    out = _outpath(args.out)
    _ensure_parent(out)
    write_trees_file(out, trees)
    _write_resolved(out, "delinearize", {
        "symbols": args.symbols, "sentences": args.sentences, "out": args.out})
    print(f"rebuilt {len(trees)} trees -> {out}")
    return 0


# ---------------------------------------------------------------------------
# gen-corpus
# ---------------------------------------------------------------------------


GEN_DEFAULTS = {
    "grammar": None, "n_train": 2000, "n_dev": 200, "n_test": 200, "seed": 0,
}


def cmd_gen_corpus(args):
    resolved = _resolve(args, GEN_DEFAULTS)
    if resolved["grammar"]:
        with open(resolved["grammar"], encoding="utf-8") as fh:
            grammar = parse_grammar(fh.read())
    else:
        grammar = default_grammar()
    train, dev, test = make_corpus(
        grammar, n_train=resolved["n_train"], n_dev=resolved["n_dev"],
        n_test=resolved["n_test"], seed=resolved["seed"])
    prefix = _outpath(args.out_prefix)
    _ensure_parent(prefix)
    save_corpus(prefix, train, dev, test)
    with open(prefix + ".grammar", "w", encoding="utf-8") as fh:
        fh.write(write_grammar(grammar))
    _write_resolved(prefix + ".corpus", "gen-corpus", resolved)
    lengths = [len(words(t)) for t in train]
    print(f"wrote {len(train)}/{len(dev)}/{len(test)} trees to {prefix}.*"
          f" (mean train sentence length {np.mean(lengths):.1f})")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


TRAIN_DEFAULTS = {
    "layers": 2, "hidden": 64, "embed": 64, "init_scale": 0.3,
    "dropout": 0.0, "lr": 0.5, "lr_decay": 0.9, "decay_start_epoch": 5,
    "batch_size": 16, "max_epochs": 20, "grad_clip": 5.0, "seed": 0,
    "eval_every": 100, "patience": 5, "max_steps": 0, "dev_beam": 1,
    "vocab_cap_input": 0, "vocab_cap_output": 0, "normalize_tags": True,
}


def cmd_train(args):
    resolved = _resolve(args, TRAIN_DEFAULTS)
    train_trees = read_trees_file(args.train)
    dev_trees = read_trees_file(args.dev)
    if resolved["normalize_tags"]:
        train_trees = [normalize_pos(t) for t in train_trees]
        dev_trees = [normalize_pos(t) for t in dev_trees]
    out_dir = _outpath(args.out_dir)
    os.makedirs(out_dir, exist_ok=True)

    cap_in = resolved["vocab_cap_input"] or None
    cap_out = resolved["vocab_cap_output"] or None
    in_voc = build_vocab([words(t) for t in train_trees], "input", cap=cap_in)
    out_voc = build_vocab([linearize(t) for t in train_trees], "output",
                          cap=cap_out)
    save_vocab(os.path.join(out_dir, "in.vocab"), in_voc)
    save_vocab(os.path.join(out_dir, "out.vocab"), out_voc)

    hyper = Hyper(
        layers=resolved["layers"], hidden=resolved["hidden"],
        embed=resolved["embed"], input_vocab=len(in_voc),
        output_vocab=len(out_voc), dropout=resolved["dropout"],
        init_scale=resolved["init_scale"])
    params = init_params(hyper, seed=resolved["seed"])
    cfg = TrainConfig(
        learning_rate=resolved["lr"], lr_decay=resolved["lr_decay"],
        decay_start_epoch=resolved["decay_start_epoch"],
        batch_size=resolved["batch_size"], max_epochs=resolved["max_epochs"],
        dropout_rate=resolved["dropout"], grad_clip_norm=resolved["grad_clip"],
        seed=resolved["seed"], eval_every=resolved["eval_every"],
        patience=resolved["patience"], max_steps=resolved["max_steps"],
        dev_beam_size=resolved["dev_beam"])

    train_ex = prepare_examples(train_trees, in_voc, out_voc)
    dev_ex = prepare_examples(dev_trees, in_voc, out_voc)

    log_path = os.path.join(out_dir, "log.jsonl")
    with open(log_path, "w", encoding="utf-8") as log_fh:
        def progress(row):
            log_fh.write(json.dumps(row, sort_keys=True) + "\n")
            if row["kind"] == "eval":
                print(f"step {row['step']}: dev F1 {row['dev_f1']:.2f}"
                      f"{' *' if row['best'] else ''}")

        result = train_loop(train_ex, dev_ex, cfg, params, out_voc,
                            checkpoint_dir=out_dir, progress=progress)

    best_path = os.path.join(out_dir, "best.ckpt")
    ckpt.save_checkpoint(best_path, result.params, seed=cfg.seed,
                         extra={"step": result.best_step,
                                "dev_f1": result.best_f1})
    _write_resolved(out_dir, "train", resolved)
    if result.log:
        print(f"best dev F1 {result.best_f1:.2f} at step {result.best_step}; "
              f"checkpoint {best_path}")
    else:
        print(f"no training steps run; initial checkpoint {best_path}")
    return 0


# ---------------------------------------------------------------------------
# parse
# ---------------------------------------------------------------------------


PARSE_DEFAULTS = {
    "beam": 10, "max_len": 0, "vocab_in": "", "vocab_out": "",
    "attention": "",
}


def cmd_parse(args):
    resolved = _resolve(args, PARSE_DEFAULTS)
    models = []
    for path in args.model:
        params, _ = ckpt.load_checkpoint(path)
        models.append(params)
    model_dir = os.path.dirname(os.path.abspath(args.model[0]))
    in_voc = load_vocab(resolved["vocab_in"]
                        or os.path.join(model_dir, "in.vocab"))
    out_voc = load_vocab(resolved["vocab_out"]
                         or os.path.join(model_dir, "out.vocab"))
    for m in models:
        if (m.hyper.input_vocab, m.hyper.output_vocab) != \
                (len(in_voc), len(out_voc)):
            raise ValueError("checkpoint and vocabulary sizes disagree")
    target = models if len(models) > 1 else models[0]

    with open(args.input, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    att_dir = _outpath(resolved["attention"]) if resolved["attention"] else ""
    if att_dir:
        os.makedirs(att_dir, exist_ok=True)
    max_len = resolved["max_len"] or None

    out = _outpath(args.out)
    _ensure_parent(out)
    n_parsed = 0
    n_repaired = 0
    t0 = time.monotonic()
    with open(out, "w", encoding="utf-8") as fh:
        for k, line in enumerate(lines, start=1):
            sentence = line.split()
            if not sentence:
                print(f"warning: line {k} is empty, skipped", file=sys.stderr)
                continue
            tree, was_repaired, trace = parse_sentence(
                sentence, target, in_voc, out_voc,
                beam_size=resolved["beam"], max_len=max_len)
            fh.write(write_bracketed(tree) + "\n")
            n_parsed += 1
            n_repaired += was_repaired
            if att_dir:
                tsv = trace.to_tsv(list(reversed(sentence)))
                with open(os.path.join(att_dir, f"sent-{k:06d}.tsv"),
                          "w", encoding="utf-8") as afh:
                    afh.write(tsv)
    elapsed = time.monotonic() - t0
    rate = n_parsed / elapsed if elapsed > 0 else float("inf")
    pct = 100.0 * n_repaired / n_parsed if n_parsed else 0.0
    _write_resolved(out, "parse", resolved)
    print(f"parsed {n_parsed} sentences in {elapsed:.2f}s"
          f" ({rate:.1f} sentences/s); repaired {n_repaired} ({pct:.1f}%)")
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


EVAL_DEFAULTS = {"delete_punct": False, "buckets": False}


def cmd_eval(args):
    resolved = _resolve(args, EVAL_DEFAULTS)
    gold = read_trees_file(args.gold)
    pred = read_trees_file(args.pred)
    report = bracket_f1(gold, pred, delete_punct=resolved["delete_punct"])
    out = _outpath(args.out)
    _ensure_parent(out)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    if resolved["buckets"]:
        with open(out + ".buckets.tsv", "w", encoding="utf-8") as fh:
            fh.write(report.buckets_tsv())
    _write_resolved(out, "eval", resolved)
    print(report.summary())
    return 0


# ---------------------------------------------------------------------------
# inspect-checkpoint
# ---------------------------------------------------------------------------


def cmd_inspect(args):
    params, header = ckpt.load_checkpoint(args.checkpoint)
    total = sum(arr.size for _, arr in params.param_items())
    print(f"format version: {header['format_version']}")
    print(f"seed: {header.get('seed')}")
    for key, value in sorted(header["hyper"].items()):
        print(f"hyper.{key}: {value}")
    for key, value in sorted(header["flags"].items()):
        print(f"flags.{key}: {value}")
    print(f"parameters: {total}")
    for entry in header["arrays"]:
        shape = "x".join(str(d) for d in entry["shape"])
        print(f"  {entry['name']}  {shape}")
    if header.get("extra"):
        for key, value in sorted(header["extra"].items()):
            print(f"extra.{key}: {value}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def _add_config_flag(sub):
    sub.add_argument("--config", help="JSON file with option defaults")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="seq2tree",
        description="Sequence-to-sequence constituency parsing toolkit.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("linearize", help="trees -> symbol sequences")
    p.add_argument("--trees", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_linearize)

    p = subs.add_parser("delinearize", help="symbol sequences -> trees")
    p.add_argument("--symbols", required=True)
    p.add_argument("--sentences", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_delinearize)

    p = subs.add_parser("gen-corpus", help="sample a toy treebank")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--grammar")
    p.add_argument("--n-train", type=int, dest="n_train")
    p.add_argument("--n-dev", type=int, dest="n_dev")
    p.add_argument("--n-test", type=int, dest="n_test")
    p.add_argument("--seed", type=int)
    _add_config_flag(p)
    p.set_defaults(func=cmd_gen_corpus)

    p = subs.add_parser("train", help="train a parser")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--layers", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--embed", type=int)
    p.add_argument("--init-scale", type=float, dest="init_scale")
    p.add_argument("--dropout", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-decay", type=float, dest="lr_decay")
    p.add_argument("--decay-start-epoch", type=int, dest="decay_start_epoch")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--grad-clip", type=float, dest="grad_clip")
    p.add_argument("--seed", type=int)
    p.add_argument("--eval-every", type=int, dest="eval_every")
    p.add_argument("--patience", type=int)
    p.add_argument("--max-steps", type=int, dest="max_steps")
    p.add_argument("--dev-beam", type=int, dest="dev_beam")
    p.add_argument("--vocab-cap-input", type=int, dest="vocab_cap_input")
    p.add_argument("--vocab-cap-output", type=int, dest="vocab_cap_output")
    p.add_argument("--normalize-tags", action="store_true", default=None,
                   dest="normalize_tags",
                   help="collapse POS tags to XX (default)")
    p.add_argument("--keep-tags", action="store_false", default=None,
                   dest="normalize_tags")
    _add_config_flag(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("parse", help="decode sentences into trees")
    p.add_argument("--model", required=True, nargs="+",
                   help="checkpoint path(s); several form an ensemble")
    p.add_argument("--input", required=True,
                   help="pre-tokenized sentences, one per line")
    p.add_argument("--out", required=True)
    p.add_argument("--beam", type=int)
    p.add_argument("--max-len", type=int, dest="max_len")
    p.add_argument("--vocab-in", dest="vocab_in")
    p.add_argument("--vocab-out", dest="vocab_out")
    p.add_argument("--attention",
                   help="directory for per-sentence attention TSV files")
    _add_config_flag(p)
    p.set_defaults(func=cmd_parse)

    p = subs.add_parser("eval", help="bracket F1 of predicted vs gold trees")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--delete-punct", action="store_true", default=None,
                   dest="delete_punct")
    p.add_argument("--buckets", action="store_true", default=None,
                   help="also write cumulative length-bucket F1 TSV")
    _add_config_flag(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("inspect-checkpoint", help="print checkpoint header")
    p.add_argument("checkpoint")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, FloatingPointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entry():
    return main()

"""SGD training with teacher forcing, dev-F1 early stopping, checkpoints.

The loop shuffles examples each epoch, averages exact per-sequence
gradients over a batch, clips by global norm, and applies plain SGD with
an optional per-epoch learning-rate decay.  Every ``eval_every`` steps the
dev set is decoded (narrow beam) and scored with bracket F1; the
best-scoring parameters are kept and returned.  All randomness flows from
``TrainConfig.seed``, so a fixed config and corpus reproduce the same
trajectory bit for bit; log rows carry a wall-clock field that is excluded
from that guarantee.
"""

import os
import time
from dataclasses import dataclass, field

import numpy as np

from .decode import beam_search, default_max_len
from .evaluate import bracket_f1
from .checkpoint import save_checkpoint
from .model import sequence_log_prob
from .numerics import global_norm, spawn_generators
from .treetext import (
    ArityMismatch,
    MalformedSequence,
    delinearize,
    force_tree,
    linearize,
    words,
)
from .vocab import encode_input, encode_output


@dataclass
class TrainConfig:
    learning_rate: float = 0.5
    lr_decay: float = 0.9
    decay_start_epoch: int = 5
    batch_size: int = 16
    max_epochs: int = 20
    dropout_rate: float = 0.0
    grad_clip_norm: float = 5.0
    seed: int = 0
    eval_every: int = 100
    patience: int = 5
    max_steps: int = 0
    dev_beam_size: int = 1

    def __post_init__(self):
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be non-negative")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.decay_start_epoch < 1:
            raise ValueError("decay_start_epoch must be at least 1")
        for name in ("batch_size", "eval_every", "patience", "dev_beam_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_epochs < 0 or self.max_steps < 0:
            raise ValueError("epoch/step limits cannot be negative")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.grad_clip_norm <= 0.0:
            raise ValueError("grad_clip_norm must be positive")


@dataclass(frozen=True)
class Example:
    """One pre-encoded training pair plus what dev scoring needs."""

    words: tuple
    input_ids: tuple
    target_ids: tuple
    tree: object = None


def prepare_examples(trees, in_vocab, out_vocab):
    """Encode gold trees into (reversed input ids, symbol ids) pairs."""
    out = []
    for tree in trees:
        ws = words(tree)
        out.append(Example(
            words=tuple(ws),
            input_ids=tuple(encode_input(ws, in_vocab)),
            target_ids=tuple(encode_output(linearize(tree), out_vocab)),
            tree=tree,
        ))
    return out


def _pair(example):
    if isinstance(example, Example):
        return list(example.input_ids), list(example.target_ids)
    input_ids, target_ids = example
    return list(input_ids), list(target_ids)


def batch_loss(params, batch, rng=None):
    """Mean negative log probability and the matching mean gradients.

    Always runs the model in train mode (gradients require it); dropout
    draws from ``rng`` only when the model's dropout rate is positive.
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    total = 0.0
    sums = None
    for k, example in enumerate(batch):
        input_ids, target_ids = _pair(example)
        try:
            logp, grads = sequence_log_prob(
                input_ids, target_ids, params, train_mode=True, rng=rng)
        except FloatingPointError as err:
            raise FloatingPointError(
                f"example {k} of the batch: {err}") from err
        total += logp
        if sums is None:
            sums = grads
        else:
            for name in sums:
                sums[name] += grads[name]
    n = len(batch)
    loss = -total / n
    for name in sums:
        sums[name] *= -1.0 / n
    return loss, sums


def sgd_step(params, grads, cfg, lr=None):
    """Clip by global norm, then descend every parameter in place."""
    if lr is None:
        lr = cfg.learning_rate
    names = [name for name, _ in params.param_items()]
    if set(grads) != set(names):
        raise ValueError("gradient names do not match the parameter set")
    for name, arr in params.param_items():
        if grads[name].shape != arr.shape:
            raise ValueError(
                f"gradient shape {grads[name].shape} does not match "
                f"{name} {arr.shape}")
    norm = global_norm(grads.values())
    scale = cfg.grad_clip_norm / norm if norm > cfg.grad_clip_norm else 1.0
    for name, arr in params.param_items():
        arr -= (lr * scale) * grads[name]
    return params


@dataclass
class TrainResult:
    params: object
    log: list = field(default_factory=list)
    best_f1: float = float("nan")
    best_step: int = 0


def dev_f1(params, dev_examples, out_vocab, beam_size=1):
    """Decode the dev set and score bracket F1 (repairs counted)."""
    golds, preds, malformed = [], [], 0
    for ex in dev_examples:
        input_ids = list(ex.input_ids)
        hyp, _ = beam_search(params, input_ids, beam_size=beam_size,
                             max_len=default_max_len(len(input_ids)))
        symbols = [out_vocab.token_of(i) for i in hyp.symbols]
        sentence = list(ex.words)
        try:
            tree = delinearize(symbols, sentence)
            if not hyp.finished:
                malformed += 1
        except (MalformedSequence, ArityMismatch):
            tree = force_tree(symbols, sentence)
            malformed += 1
        golds.append(ex.tree)
        preds.append(tree)
    report = bracket_f1(golds, preds, malformed_count=malformed)
    return report.f1, report.malformed_rate


def _learning_rate(cfg, epoch):
    past = max(0, epoch - cfg.decay_start_epoch + 1)
    return cfg.learning_rate * cfg.lr_decay ** past


def train_loop(train_examples, dev_examples, cfg, params, out_vocab,
               checkpoint_dir=None, progress=None):
    """Run SGD over the corpus; returns the best-dev-F1 parameters.

    The log is a list of dicts: ``{"kind": "step", step, epoch, loss, lr,
    wall}`` per batch and ``{"kind": "eval", step, dev_f1, malformed_rate,
    best}`` per evaluation.  ``progress``, if given, is called with each
    row as it is produced.
    """
    if not train_examples:
        raise ValueError("training corpus is empty")
    if not dev_examples:
        raise ValueError("dev corpus is empty")
    params.hyper.dropout = cfg.dropout_rate
    shuffle_rng, drop_rng = spawn_generators(cfg.seed, 2)
    log = []
    t0 = time.monotonic()

    def emit(row):
        log.append(row)
        if progress is not None:
            progress(row)

    best = params.copy()
    best_f1 = float("-inf")
    best_step = 0
    stale = 0
    step = 0
    stop = False

    def evaluate():
        nonlocal best, best_f1, best_step, stale
        f1, mal = dev_f1(params, dev_examples, out_vocab, cfg.dev_beam_size)
        improved = f1 > best_f1
        if improved:
            best, best_f1, best_step, stale = params.copy(), f1, step, 0
            if checkpoint_dir is not None:
                path = os.path.join(
                    checkpoint_dir, f"step{step:06d}-f1_{f1:.2f}.ckpt")
                save_checkpoint(path, params, seed=cfg.seed,
                                extra={"step": step, "dev_f1": f1})
        else:
            stale += 1
        emit({"kind": "eval", "step": step, "dev_f1": f1,
              "malformed_rate": mal, "best": improved})
        return improved

    for epoch in range(1, cfg.max_epochs + 1):
        lr = _learning_rate(cfg, epoch)
        order = shuffle_rng.permutation(len(train_examples))
        for lo in range(0, len(order), cfg.batch_size):
            batch = [train_examples[i] for i in order[lo:lo + cfg.batch_size]]
            step += 1
            try:
                loss, grads = batch_loss(params, batch, rng=drop_rng)
            except FloatingPointError as err:
                raise FloatingPointError(
                    f"training diverged at step {step}: {err}") from err
            sgd_step(params, grads, cfg, lr=lr)
            emit({"kind": "step", "step": step, "epoch": epoch,
                  "loss": loss, "lr": lr,
                  "wall": time.monotonic() - t0})
            if step % cfg.eval_every == 0:
                evaluate()
                if stale >= cfg.patience:
                    stop = True
            if stop or (cfg.max_steps and step >= cfg.max_steps):
                stop = True
                break
        if stop:
            break

    if step > 0 and (not log or log[-1]["kind"] != "eval"):
        evaluate()
    if best_f1 == float("-inf"):
        best_f1 = float("nan")
    return TrainResult(params=best, log=log, best_f1=best_f1,
                       best_step=best_step)

"""Beam-search decoding, ensembles, attention traces, and sentence -> tree.

Hypotheses carry raw total log probability; finished hypotheses (END
emitted) stay in the beam and compete unchanged.  Since every extension
adds a log probability <= 0, the search can stop as soon as the
best-scoring hypothesis is finished: no descendant of a lower-scoring
hypothesis can overtake it.  Ties are broken deterministically (finished
first, then lower symbol id, then older hypothesis), which makes beam
size 1 coincide exactly with stepwise argmax decoding.
"""

from dataclasses import dataclass, field

import numpy as np

from .model import (
    END_ID,
    encode,
    encoder_projection,
    init_decoder_state,
    decode_step,
)
from .treetext import ArityMismatch, MalformedSequence, delinearize, force_tree
from .vocab import encode_input


@dataclass
class Hypothesis:
    """One partial or finished output sequence (END is not stored)."""

    symbols: list
    log_prob: float
    state: object
    finished: bool
    att_rows: list = field(default_factory=list)


class AttentionTrace:
    """Attention weights of one decoded sequence: a row per output step."""

    def __init__(self, rows):
        self.matrix = np.array(rows) if rows else np.zeros((0, 0))
        for k, row in enumerate(self.matrix):
            if abs(float(np.sum(row)) - 1.0) > 1e-6:
                raise ValueError(f"attention row {k} does not sum to 1")

    @property
    def n_steps(self):
        return self.matrix.shape[0]

    def to_tsv(self, input_tokens):
        """Header of (reversed) input tokens, then one weight row per step."""
        if self.matrix.size and len(input_tokens) != self.matrix.shape[1]:
            raise ValueError(
                f"{len(input_tokens)} header tokens for "
                f"{self.matrix.shape[1]} attention columns")
        lines = ["\t".join(input_tokens)]
        for row in self.matrix:
            lines.append("\t".join(f"{w:.6f}" for w in row))
        return "\n".join(lines) + "\n"


class _ModelStepper:
    """Stateless per-sentence wrapper: encode once, then step cheaply."""

    def __init__(self, params, input_ids):
        self.params = params
        self.enc, finals = encode(input_ids, params)
        self.enc_proj = encoder_projection(self.enc, params)
        self._start = init_decoder_state(finals)

    def start_state(self):
        return self._start

    def step(self, prev_id, state):
        dist, new_state, att = decode_step(
            prev_id, state, self.enc, self.params, enc_proj=self.enc_proj)
        return dist, new_state, att


class _EnsembleStepper:
    """Averages member distributions; state is the tuple of member states."""

    def __init__(self, models, input_ids):
        vocabs = {(m.hyper.input_vocab, m.hyper.output_vocab) for m in models}
        if len(vocabs) != 1:
            raise ValueError(
                f"ensemble members disagree on vocabulary sizes: {vocabs}")
        self.members = [_ModelStepper(m, input_ids) for m in models]

    def start_state(self):
        return tuple(m.start_state() for m in self.members)

    def step(self, prev_id, state):
        dists, states, atts = [], [], []
        for member, mstate in zip(self.members, state):
            dist, new_state, att = member.step(prev_id, mstate)
            dists.append(dist)
            states.append(new_state)
            atts.append(att)
        mean = np.mean(dists, axis=0)
        mean = mean / np.sum(mean)
        return mean, tuple(states), np.mean(atts, axis=0)


def default_max_len(n_words):
    """A valid linearization of n words has at most ~3n symbols."""
    return 2 * n_words + 10


def _beam(stepper, beam_size, max_len):
    if beam_size < 1:
        raise ValueError("beam size must be at least 1")
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    beam = [Hypothesis([], 0.0, stepper.start_state(), False)]
    for _ in range(max_len):
        if beam[0].finished:
            break
        candidates = []
        for idx, hyp in enumerate(beam):
            if hyp.finished:
                # key: finished first on ties (symbol -1), then older
                candidates.append((-hyp.log_prob, -1, idx, hyp, None, None))
                continue
            prev = hyp.symbols[-1] if hyp.symbols else END_ID
            dist, new_state, att = stepper.step(prev, hyp.state)
            logs = np.log(np.maximum(dist, 1e-300))
            for sym in range(len(dist)):
                candidates.append(
                    (-(hyp.log_prob + logs[sym]), sym, idx, hyp, new_state, att))
        candidates.sort(key=lambda c: c[:3])
        beam = []
        for neg_score, sym, _, hyp, new_state, att in candidates[:beam_size]:
            if sym == -1 or new_state is None:
                beam.append(hyp)
            else:
                beam.append(Hypothesis(
                    symbols=hyp.symbols if sym == END_ID else hyp.symbols + [sym],
                    log_prob=-neg_score,
                    state=new_state,
                    finished=sym == END_ID,
                    att_rows=hyp.att_rows + [att],
                ))
    best = beam[0]
    return best, AttentionTrace(best.att_rows)


def beam_search(params, input_ids, beam_size=10, max_len=None):
    """Decode one input; returns (best hypothesis, its attention trace)."""
    if max_len is None:
        max_len = default_max_len(len(input_ids))
    return _beam(_ModelStepper(params, input_ids), beam_size, max_len)


def ensemble_decode(models, input_ids, beam_size=10, max_len=None):
    """Beam search over the mean of the member models' distributions."""
    if max_len is None:
        max_len = default_max_len(len(input_ids))
    return _beam(_EnsembleStepper(models, input_ids), beam_size, max_len)


def parse_sentence(sentence, params, in_vocab, out_vocab, beam_size=10,
                   max_len=None):
    """Full pipeline: words -> ids -> beam search -> symbols -> tree.

    Always returns (tree, was_repaired, trace) with the tree covering
    exactly the input words; was_repaired is set when the raw symbol
    sequence was not a complete well-formed linearization (including
    truncation at max_len).
    """
    if not sentence:
        raise ValueError("cannot parse an empty sentence")
    input_ids = encode_input(sentence, in_vocab)
    if isinstance(params, (list, tuple)):
        hyp, trace = ensemble_decode(params, input_ids, beam_size, max_len)
    else:
        hyp, trace = beam_search(params, input_ids, beam_size, max_len)
    symbols = [out_vocab.token_of(i) for i in hyp.symbols]
    try:
        tree = delinearize(symbols, sentence)
        was_repaired = not hyp.finished
    except (MalformedSequence, ArityMismatch):
        tree = force_tree(symbols, sentence)
        was_repaired = True
    return tree, was_repaired, trace

"""Labeled bracket precision/recall/F1 with EVALB-compatible conventions.

A bracket is one (label, start, end) span per internal node; preterminals
never count (POS tags are not part of the score) while the root span does.
Matching is by multiset intersection per sentence, totals are summed over
the corpus before the ratios are taken (micro-average).

The one optional convention is punctuation deletion: when enabled,
preterminals whose tag consists of punctuation characters are removed
before spans are computed (so word indices shift), mirroring the EVALB
parameter files that delete punctuation.  It is off by default and each
report records the switch.
"""

import json
from collections import Counter
from dataclasses import dataclass

from .treetext import Internal, Preterminal

DEFAULT_BUCKETS = (10, 20, 30, 40, 50, 60, 70)


@dataclass(frozen=True)
class BracketSpan:
    """Labeled span over word positions, end exclusive."""

    label: str
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span {self.label} [{self.start}, {self.end})")


@dataclass
class F1Report:
    matched: int
    gold_total: int
    pred_total: int
    precision: float
    recall: float
    f1: float
    n_sentences: int
    per_bucket: list  # (max length, F1) pairs, cumulative buckets
    malformed_rate: float
    delete_punct: bool

    def to_json(self):
        return json.dumps({
            "matched": self.matched,
            "gold_total": self.gold_total,
            "pred_total": self.pred_total,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "n_sentences": self.n_sentences,
            "per_bucket": [[b, f] for b, f in self.per_bucket],
            "malformed_rate": self.malformed_rate,
            "delete_punct": self.delete_punct,
        }, indent=2, sort_keys=True)

    def summary(self):
        lines = [
            f"sentences:  {self.n_sentences}",
            f"precision:  {self.precision:.2f}"
            f"  ({self.matched}/{self.pred_total})",
            f"recall:     {self.recall:.2f}"
            f"  ({self.matched}/{self.gold_total})",
            f"f1:         {self.f1:.2f}",
            f"malformed:  {self.malformed_rate * 100.0:.2f}%",
            f"punct del:  {'on' if self.delete_punct else 'off'}",
        ]
        for bound, f1 in self.per_bucket:
            lines.append(f"len <= {bound:3d}: F1 {f1:.2f}")
        return "\n".join(lines)

    def buckets_tsv(self):
        """Length plot export: one 'bound<TAB>F1' line per bucket."""
        return "".join(f"{b}\t{f:.4f}\n" for b, f in self.per_bucket)


def _is_punct_tag(tag):
    return all(not ch.isalnum() for ch in tag)


def _delete_punct(tree):
    """Drop punctuation preterminals; may return None if nothing is left."""
    if isinstance(tree, Preterminal):
        return None if _is_punct_tag(tree.tag) else tree
    kept = [c for c in (_delete_punct(ch) for ch in tree.children) if c]
    if not kept:
        return None
    return Internal(tree.label, kept)


def sentence_length(tree):
    if isinstance(tree, Preterminal):
        return 1
    return sum(sentence_length(c) for c in tree.children)


def extract_brackets(tree):
    """Multiset of labeled spans, one per internal node; preterminals skipped."""
    spans = Counter()

    def visit(node, start):
        if isinstance(node, Preterminal):
            return start + 1
        pos = start
        for child in node.children:
            pos = visit(child, pos)
        spans[BracketSpan(node.label, start, pos)] += 1
        return pos

    visit(tree, 0)
    return spans


def _prf(matched, gold_total, pred_total):
    precision = 100.0 * matched / pred_total if pred_total else 0.0
    recall = 100.0 * matched / gold_total if gold_total else 0.0
    f1 = (2.0 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return precision, recall, f1


def _pair_counts(gold, pred, delete_punct):
    if delete_punct:
        gold = _delete_punct(gold) or gold
        pred = _delete_punct(pred) or pred
    g = extract_brackets(gold)
    p = extract_brackets(pred)
    matched = sum((g & p).values())
    return matched, sum(g.values()), sum(p.values())


def _check_aligned(gold_trees, pred_trees):
    if len(gold_trees) != len(pred_trees):
        raise ValueError(
            f"corpus size mismatch: {len(gold_trees)} gold vs "
            f"{len(pred_trees)} predicted trees")
    for k, (g, p) in enumerate(zip(gold_trees, pred_trees)):
        if sentence_length(g) != sentence_length(p):
            raise ValueError(
                f"sentence {k}: gold has {sentence_length(g)} words but "
                f"prediction has {sentence_length(p)}")


def bracket_f1(gold_trees, pred_trees, buckets=DEFAULT_BUCKETS,
               delete_punct=False, malformed_count=0):
    """Corpus-level micro-averaged F1 report.

    ``malformed_count`` is carried into the report's malformed_rate; the
    trees passed here are expected to be already repaired, so the count
    comes from the decoding stage.
    """
    _check_aligned(gold_trees, pred_trees)
    matched = gold_total = pred_total = 0
    per_sentence = []
    for g, p in zip(gold_trees, pred_trees):
        m, gt, pt = _pair_counts(g, p, delete_punct)
        matched += m
        gold_total += gt
        pred_total += pt
        per_sentence.append((sentence_length(g), m, gt, pt))
    precision, recall, f1 = _prf(matched, gold_total, pred_total)

    per_bucket = []
    for bound in buckets:
        rows = [(m, gt, pt) for ln, m, gt, pt in per_sentence if ln <= bound]
        if not rows:
            continue  # empty bucket is absent, not zero
        bm = sum(r[0] for r in rows)
        bg = sum(r[1] for r in rows)
        bp = sum(r[2] for r in rows)
        per_bucket.append((bound, _prf(bm, bg, bp)[2]))

    n = len(gold_trees)
    return F1Report(
        matched=matched, gold_total=gold_total, pred_total=pred_total,
        precision=precision, recall=recall, f1=f1, n_sentences=n,
        per_bucket=per_bucket,
        malformed_rate=malformed_count / n if n else 0.0,
        delete_punct=delete_punct,
    )


def length_report(gold_trees, pred_trees, buckets=DEFAULT_BUCKETS,
                  delete_punct=False):
    """Cumulative per-length-bucket F1 as (bound, F1) pairs."""
    return bracket_f1(gold_trees, pred_trees, buckets=buckets,
                      delete_punct=delete_punct).per_bucket

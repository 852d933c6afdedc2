"""Token/id vocabularies, input encoding with reversal, pretrained vectors.

Two vocabulary kinds exist.  The input kind covers sentence words and
reserves ``UNK`` at id 0; unseen words map to it.  The output kind covers
tree symbols (opens, closes, tags) and reserves ``END`` at id 0; the output
alphabet is closed, so unknown symbols are an error rather than an UNK.

Encoded input sequences are reversed: the encoder consumes the sentence
back to front, which shortens the path between a word and the early
decoder steps that depend on it.
"""

import warnings
from collections import Counter

import numpy as np

from .treetext import END_SYMBOL

UNK_TOKEN = "UNK"

_RESERVED = {"input": UNK_TOKEN, "output": END_SYMBOL}

_FILE_MAGIC = "seq2tree-vocab"


class Vocab:
    """Immutable bijective token <-> id map with one reserved token at id 0."""

    def __init__(self, kind, tokens):
        if kind not in _RESERVED:
            raise ValueError(f"unknown vocab kind {kind!r}")
        tokens = list(tokens)
        if not tokens or tokens[0] != _RESERVED[kind]:
            raise ValueError(
                f"{kind} vocab must place {_RESERVED[kind]!r} at id 0")
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocab tokens must be unique")
        self.kind = kind
        self.id_to_token = tuple(tokens)
        self.token_to_id = {tok: i for i, tok in enumerate(tokens)}

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    def __eq__(self, other):
        return (
            isinstance(other, Vocab)
            and self.kind == other.kind
            and self.id_to_token == other.id_to_token
        )

    @property
    def reserved_id(self):
        return 0

    @property
    def reserved_token(self):
        return self.id_to_token[0]

    def id_of(self, token):
        """Id of a token.  Input kind falls back to UNK; output kind raises."""
        if self.kind == "input":
            return self.token_to_id.get(token, 0)
        try:
            return self.token_to_id[token]
        except KeyError:
            raise KeyError(f"symbol {token!r} not in output vocabulary") from None

    def token_of(self, idx):
        return self.id_to_token[idx]


def build_vocab(corpus, kind, cap=None):
    """Build a vocabulary from an iterable of token sequences.

    Ids go to the most frequent tokens first, ties broken lexicographically,
    up to ``cap`` total entries (reserved token included).  The result is a
    pure function of the corpus token multiset.
    """
    if cap is not None and cap < 1:
        raise ValueError(f"cap {cap} cannot fit the reserved token")
    counts = Counter()
    n_seqs = 0
    for seq in corpus:
        n_seqs += 1
        counts.update(seq)
    if n_seqs == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    reserved = _RESERVED[kind]
    counts.pop(reserved, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if cap is not None:
        ranked = ranked[: cap - 1]
    return Vocab(kind, [reserved] + [tok for tok, _ in ranked])


def encode_input(sentence, voc):
    """Word ids of a sentence, REVERSED, with out-of-vocab words as UNK."""
    if voc.kind != "input":
        raise ValueError("encode_input needs an input-kind vocab")
    if not sentence:
        raise ValueError("cannot encode an empty sentence")
    return [voc.id_of(w) for w in reversed(sentence)]


def encode_output(symbols, voc):
    """Symbol ids of a linearized tree sequence (not reversed)."""
    if voc.kind != "output":
        raise ValueError("encode_output needs an output-kind vocab")
    return [voc.id_of(s) for s in symbols]


def decode_ids(ids, voc):
    """Tokens for a sequence of ids (no re-reversal)."""
    return [voc.token_of(i) for i in ids]


def save_vocab(path, voc):
    """One token per line in id order, after a header naming the kind."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{_FILE_MAGIC} kind={voc.kind} reserved={voc.reserved_token}:0\n")
        for tok in voc.id_to_token:
            fh.write(tok + "\n")


def load_vocab(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        fields = header.split()
        if len(fields) != 3 or fields[0] != _FILE_MAGIC:
            raise ValueError(f"not a vocab file: bad header {header!r}")
        kind = fields[1].removeprefix("kind=")
        tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
    return Vocab(kind, tokens)


def load_pretrained(path, voc, embed_size, rng):
    """Embedding matrix (len(voc) x embed_size) seeded from a vector file.

    File lines are ``word v1 v2 ... v_embed``.  Rows for vocab words found
    in the file are copied; all other rows are uniform random in
    [-0.08, 0.08].  The returned matrix is an ordinary trainable array.
    """
    table = rng.uniform(-0.08, 0.08, size=(len(voc), embed_size))
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != embed_size:
                raise ValueError(
                    f"{path}:{lineno}: expected {embed_size} values for "
                    f"{word!r}, found {len(values)}")
            if word not in voc:
                continue
            if word in seen:
                warnings.warn(
                    f"{path}:{lineno}: duplicate vector for {word!r}, "
                    f"last occurrence wins")
            seen.add(word)
            table[voc.token_to_id[word]] = np.array(values, dtype=np.float64)
    return table

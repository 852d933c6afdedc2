"""Toy weighted-CFG treebank generation.

A small probabilistic grammar stands in for licensed treebanks so training
and evaluation run self-contained.  Sampling is top-down with a height
budget: a production is only eligible while the shortest derivation it can
lead to still fits under the grammar's max depth, so sampling always
terminates and never dead-ends.  Grammars whose nonterminals cannot derive
any finite tree are rejected at construction time.

Grammar text format (whitespace separated, '#' starts a comment):

    start S
    max_depth 10
    S -> NP VP . : 1
    NP -> DT NN : 4
    lex DT the a
    lex NN dog cat

Every left-hand side of '->' is a nonterminal; every 'lex' symbol is a
preterminal tag with its word list; rule weights follow ':' (default 1).
"""

import random

from .treetext import Internal, Preterminal, write_bracketed, write_trees_file


class GrammarError(ValueError):
    """Grammar text or structure is invalid."""


class ToyGrammar:
    """Weighted CFG with per-tag lexicons and a sampling depth cap."""

    def __init__(self, start, max_depth, productions, lexicon):
        """productions: {nt: [(rhs tuple, weight), ...]}; lexicon: {tag: [words]}."""
        self.start = start
        self.max_depth = max_depth
        self.productions = {nt: list(rules) for nt, rules in productions.items()}
        self.lexicon = {tag: list(words) for tag, words in lexicon.items()}
        self._validate()

    @property
    def nonterminals(self):
        return set(self.productions)

    @property
    def tags(self):
        return set(self.lexicon)

    def _validate(self):
        overlap = self.nonterminals & self.tags
        if overlap:
            raise GrammarError(f"symbols are both nonterminal and tag: {overlap}")
        if self.start not in self.productions:
            raise GrammarError(f"start symbol {self.start!r} has no productions")
        for tag, words in self.lexicon.items():
            if not words:
                raise GrammarError(f"tag {tag!r} has an empty lexicon")
        for nt, rules in self.productions.items():
            if not rules:
                raise GrammarError(f"nonterminal {nt!r} has no productions")
            for rhs, weight in rules:
                if not rhs:
                    raise GrammarError(f"{nt!r} has an empty right-hand side")
                if weight <= 0:
                    raise GrammarError(f"{nt!r} -> {' '.join(rhs)}: weight "
                                       f"{weight} must be positive")
                for sym in rhs:
                    if sym not in self.productions and sym not in self.lexicon:
                        raise GrammarError(
                            f"{nt!r} -> {' '.join(rhs)}: unknown symbol {sym!r}")
        self.min_height = self._min_heights()
        start_h = self.min_height[self.start]
        if start_h > self.max_depth:
            raise GrammarError(
                f"max_depth {self.max_depth} cannot fit the shortest "
                f"derivation of {self.start!r} (height {start_h})")

    def _min_heights(self):
        """Shortest derivation height per symbol; infinite heights rejected."""
        inf = float("inf")
        height = {tag: 1 for tag in self.lexicon}
        height.update({nt: inf for nt in self.productions})
        changed = True
        while changed:
            changed = False
            for nt, rules in self.productions.items():
                best = min(1 + max(height[s] for s in rhs) for rhs, _ in rules)
                if best < height[nt]:
                    height[nt] = best
                    changed = True
        stuck = [nt for nt in self.productions if height[nt] == inf]
        if stuck:
            raise GrammarError(
                f"nonterminals cannot reach the lexicon within any depth: "
                f"{sorted(stuck)}")
        return height


def parse_grammar(text):
    """Parse the declarative grammar format into a ToyGrammar."""
    start = None
    max_depth = None
    productions = {}
    lexicon = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "start":
            if len(fields) != 2:
                raise GrammarError(f"line {lineno}: start needs one symbol")
            start = fields[1]
        elif fields[0] == "max_depth":
            try:
                max_depth = int(fields[1])
            except (IndexError, ValueError):
                raise GrammarError(f"line {lineno}: max_depth needs an integer")
        elif fields[0] == "lex":
            if len(fields) < 3:
                raise GrammarError(f"line {lineno}: lex needs a tag and words")
            lexicon.setdefault(fields[1], []).extend(fields[2:])
        elif "->" in fields:
            arrow = fields.index("->")
            if arrow != 1:
                raise GrammarError(f"line {lineno}: rule needs one lhs symbol")
            lhs = fields[0]
            rest = fields[2:]
            weight = 1.0
            if ":" in rest:
                colon = rest.index(":")
                try:
                    weight = float(rest[colon + 1])
                except (IndexError, ValueError):
                    raise GrammarError(f"line {lineno}: bad weight")
                rest = rest[:colon]
            if not rest:
                raise GrammarError(f"line {lineno}: empty right-hand side")
            productions.setdefault(lhs, []).append((tuple(rest), weight))
        else:
            raise GrammarError(f"line {lineno}: cannot parse {line!r}")
    if start is None:
        raise GrammarError("grammar has no start line")
    if max_depth is None:
        raise GrammarError("grammar has no max_depth line")
    return ToyGrammar(start, max_depth, productions, lexicon)


def write_grammar(g):
    """Inverse of parse_grammar (canonical ordering)."""
    lines = [f"start {g.start}", f"max_depth {g.max_depth}"]
    for nt in sorted(g.productions):
        for rhs, weight in g.productions[nt]:
            lines.append(f"{nt} -> {' '.join(rhs)} : {weight:g}")
    for tag in sorted(g.lexicon):
        lines.append(f"lex {tag} {' '.join(g.lexicon[tag])}")
    return "\n".join(lines) + "\n"


DEFAULT_GRAMMAR_TEXT = """\
# Small English-like grammar: recursion through NP/PP and clausal SBAR.
start S
max_depth 10

S -> NP VP . : 1

NP -> DT NN : 4
NP -> DT JJ NN : 2
NP -> NNP : 3
NP -> NP PP : 1.2

VP -> VBZ NP : 4
VP -> VBZ : 1
VP -> VBZ NP PP : 1
VP -> VBZ SBAR : 1

SBAR -> IN S : 1

PP -> IN NP : 3
PP -> IN NNP : 1

lex DT the a every some
lex NN dog cat house car idea garden bird book
lex JJ big old red quiet
lex NNP John Mary Boston Rex Alice
lex VBZ sees likes has finds chases knows
lex IN in by near with of
lex . .
"""


def default_grammar():
    return parse_grammar(DEFAULT_GRAMMAR_TEXT)


def _sample(g, rng, symbol, budget):
    if symbol in g.lexicon:
        return Preterminal(symbol, rng.choice(g.lexicon[symbol]))
    rules = [
        (rhs, w) for rhs, w in g.productions[symbol]
        if 1 + max(g.min_height[s] for s in rhs) <= budget
    ]
    if not rules:
        raise GrammarError(
            f"no production of {symbol!r} fits in depth budget {budget}")
    weights = [w for _, w in rules]
    rhs = rules[rng.choices(range(len(rules)), weights=weights)[0]][0]
    return Internal(symbol, [_sample(g, rng, s, budget - 1) for s in rhs])


def sample_tree(g, seed):
    """One tree from the grammar, deterministic per seed."""
    return _sample(g, random.Random(seed), g.start, g.max_depth)


def make_corpus(g, n_train, n_dev, n_test, seed):
    """Three pairwise-disjoint tree lists, deterministic per seed.

    Train keeps its natural duplicate distribution; dev and test are
    internally unique and no sentence string appears in more than one
    split, so held-out scores measure generalization.
    """
    if min(n_train, n_dev, n_test) < 0:
        raise ValueError("split sizes cannot be negative")
    rng = random.Random(seed)
    train = [_sample(g, rng, g.start, g.max_depth) for _ in range(n_train)]
    taken = {write_bracketed(t) for t in train}

    def draw_unique(n, what):
        out = []
        misses = 0
        while len(out) < n:
            t = _sample(g, rng, g.start, g.max_depth)
            key = write_bracketed(t)
            if key in taken:
                misses += 1
                if misses > 200 * (n + 10):
                    raise GrammarError(
                        f"grammar too small to draw {n} unseen {what} trees")
                continue
            taken.add(key)
            out.append(t)
        return out

    dev = draw_unique(n_dev, "dev")
    test = draw_unique(n_test, "test")
    return train, dev, test


def save_corpus(prefix, train, dev, test):
    """Write <prefix>.{train,dev,test} as bracketed treebank files."""
    paths = {}
    for name, trees in (("train", train), ("dev", dev), ("test", test)):
        path = f"{prefix}.{name}"
        write_trees_file(path, trees)
        paths[name] = path
    return paths

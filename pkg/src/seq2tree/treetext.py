"""Parse trees, bracketed text I/O, tree linearization, and bracket repair.

A tree is either an ``Internal`` node (phrase label over one or more child
trees) or a ``Preterminal`` (POS tag over a single word).  Linearization
flattens a tree into a symbol sequence by depth-first traversal: an internal
node emits ``(LABEL`` ... ``)LABEL`` around its children, a preterminal emits
its tag only (words are never part of the symbol sequence), and the sequence
ends with ``END``.  ``delinearize`` inverts this, re-attaching words left to
right.

Symbols are plain strings: ``"(S"``, ``")S"``, ``"XX"``, ``"END"``.
"""

END_SYMBOL = "END"

NORMALIZED_TAG = "XX"


class TreeSyntaxError(ValueError):
    """Raised when bracketed text cannot be parsed; carries a char offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class MalformedSequence(ValueError):
    """Symbol sequence does not describe a single well-bracketed tree."""


class ArityMismatch(ValueError):
    """Preterminal count in a symbol sequence differs from the word count."""


class Preterminal:
    """POS tag over one terminal word."""

    __slots__ = ("tag", "word")

    def __init__(self, tag, word):
        if not tag:
            raise ValueError("preterminal tag must be nonempty")
        if not word:
            raise ValueError("terminal word must be nonempty")
        self.tag = tag
        self.word = word

    def __eq__(self, other):
        return (
            isinstance(other, Preterminal)
            and self.tag == other.tag
            and self.word == other.word
        )

    def __hash__(self):
        return hash((self.tag, self.word))

    def __repr__(self):
        return f"Preterminal({self.tag!r}, {self.word!r})"


class Internal:
    """Labeled phrase node with one or more children."""

    __slots__ = ("label", "children")

    def __init__(self, label, children):
        if not label:
            raise ValueError("node label must be nonempty")
        children = list(children)
        if not children:
            raise ValueError(f"internal node {label!r} has no children")
        self.label = label
        self.children = children

    def __eq__(self, other):
        return (
            isinstance(other, Internal)
            and self.label == other.label
            and self.children == other.children
        )

    def __hash__(self):
        return hash((self.label, tuple(self.children)))

    def __repr__(self):
        return f"Internal({self.label!r}, {self.children!r})"


def words(tree):
    """Terminal words of a tree, left to right."""
    if isinstance(tree, Preterminal):
        return [tree.word]
    out = []
    for child in tree.children:
        out.extend(words(child))
    return out


def open_symbol(label):
    return "(" + label


def close_symbol(label):
    return ")" + label


def is_open(symbol):
    return symbol.startswith("(") and len(symbol) > 1


def is_close(symbol):
    return symbol.startswith(")") and len(symbol) > 1


def is_preterm(symbol):
    return not (
        symbol.startswith("(") or symbol.startswith(")") or symbol == END_SYMBOL
    )


def symbol_label(symbol):
    """Label of an open/close symbol, or the tag of a preterminal symbol."""
    if is_open(symbol) or is_close(symbol):
        return symbol[1:]
    return symbol


# ---------------------------------------------------------------------------
# Bracketed text
# ---------------------------------------------------------------------------


def _tokenize(text):
    """Split bracketed text into ('(', ')', word) tokens with char offsets."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, i))
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], i))
            i = j
    return tokens


def read_bracketed(text):
    """Parse bracketed tree text into a list of trees.

    One tree per balanced top-level group.  A label-less outer wrapper around
    a single tree, as in ``( (S ...) )``, is tolerated and unwrapped.
    """
    tokens = _tokenize(text)
    pos = 0

    def parse_node():
        nonlocal pos
        tok, off = tokens[pos]
        if tok != "(":
            raise TreeSyntaxError(f"expected '(' but found {tok!r}", off)
        pos += 1
        label = None
        nodes = []
        leaf_words = []
        while True:
            if pos >= len(tokens):
                raise TreeSyntaxError("unbalanced parentheses: unexpected end of input",
                                      len(text))
            tok, off = tokens[pos]
            if tok == ")":
                pos += 1
                break
            if tok == "(":
                nodes.append(parse_node())
            elif label is None:
                label = tok
                pos += 1
            else:
                leaf_words.append((tok, off))
                pos += 1
        if label is None:
            # label-less wrapper: allowed only around exactly one tree
            if len(nodes) == 1 and not leaf_words:
                return nodes[0]
            raise TreeSyntaxError("empty constituent: group without a label", off)
        if leaf_words and nodes:
            raise TreeSyntaxError(
                f"node {label!r} mixes words and subtrees", leaf_words[0][1])
        if leaf_words:
            if len(leaf_words) > 1:
                raise TreeSyntaxError(
                    f"preterminal {label!r} dominates more than one word",
                    leaf_words[1][1])
            return Preterminal(label, leaf_words[0][0])
        if not nodes:
            raise TreeSyntaxError(f"empty constituent {label!r}", off)
        return Internal(label, nodes)

    trees = []
    while pos < len(tokens):
        tok, off = tokens[pos]
        if tok == ")":
            raise TreeSyntaxError("unbalanced parentheses: unexpected ')'", off)
        if tok != "(":
            raise TreeSyntaxError(f"expected '(' but found {tok!r}", off)
        trees.append(parse_node())
    return trees


def write_bracketed(tree):
    """Canonical single-space bracketed form; inverse of read_bracketed."""
    if isinstance(tree, Preterminal):
        return f"({tree.tag} {tree.word})"
    inner = " ".join(write_bracketed(c) for c in tree.children)
    return f"({tree.label} {inner})"


def read_trees_file(path):
    with open(path, encoding="utf-8") as fh:
        return read_bracketed(fh.read())


def write_trees_file(path, trees):
    with open(path, "w", encoding="utf-8") as fh:
        for tree in trees:
            fh.write(write_bracketed(tree) + "\n")


# ---------------------------------------------------------------------------
# Linearization
# ---------------------------------------------------------------------------


def linearize(tree):
    """Depth-first symbol sequence of a tree, END appended. Words are dropped."""
    out = []

    def visit(node):
        if isinstance(node, Preterminal):
            out.append(node.tag)
            return
        out.append(open_symbol(node.label))
        for child in node.children:
            visit(child)
        out.append(close_symbol(node.label))

    visit(tree)
    out.append(END_SYMBOL)
    return out


def delinearize(symbols, sentence_words):
    """Rebuild the tree described by ``symbols``, attaching words in order.

    ``symbols`` must be a balanced single-tree sequence without END (one
    trailing END is tolerated).  Raises ArityMismatch when the preterminal
    count differs from ``len(sentence_words)``, MalformedSequence for any
    structural defect.
    """
    symbols = list(symbols)
    if symbols and symbols[-1] == END_SYMBOL:
        symbols = symbols[:-1]
    n_preterms = sum(1 for s in symbols if is_preterm(s))
    if n_preterms != len(sentence_words):
        raise ArityMismatch(
            f"sequence has {n_preterms} preterminals for {len(sentence_words)} words")

    # stack of (label, children) for currently open constituents
    stack = []
    roots = []
    next_word = 0
    for k, sym in enumerate(symbols):
        if sym == END_SYMBOL:
            raise MalformedSequence(f"END inside sequence at position {k}")
        if is_open(sym):
            stack.append((symbol_label(sym), []))
        elif is_close(sym):
            if not stack:
                raise MalformedSequence(
                    f"close symbol {sym!r} at position {k} with nothing open")
            label, children = stack.pop()
            if label != symbol_label(sym):
                raise MalformedSequence(
                    f"close symbol {sym!r} at position {k} does not match open "
                    f"constituent {label!r}")
            if not children:
                raise MalformedSequence(
                    f"empty constituent {label!r} closed at position {k}")
            node = Internal(label, children)
            (stack[-1][1] if stack else roots).append(node)
        else:
            node = Preterminal(sym, sentence_words[next_word])
            next_word += 1
            (stack[-1][1] if stack else roots).append(node)
    if stack:
        open_labels = ", ".join(label for label, _ in stack)
        raise MalformedSequence(f"unclosed constituents: {open_labels}")
    if len(roots) != 1:
        raise MalformedSequence(f"sequence describes {len(roots)} trees, not 1")
    return roots[0]


def repair(symbols):
    """Balance a symbol sequence by dropping orphan closes and appending
    closes for still-open labels (innermost first).  END symbols are stripped
    first.  Already-balanced input comes back unchanged; the result is always
    balanced, and the operation is idempotent.
    """
    out = []
    open_stack = []
    for sym in symbols:
        if sym == END_SYMBOL:
            continue
        if is_open(sym):
            open_stack.append(symbol_label(sym))
            out.append(sym)
        elif is_close(sym):
            if open_stack and open_stack[-1] == symbol_label(sym):
                open_stack.pop()
                out.append(sym)
            # otherwise: an orphan close no open can satisfy -- drop it
        else:
            out.append(sym)
    for label in reversed(open_stack):
        out.append(close_symbol(label))
    return out


def _drop_empty_pairs(symbols):
    """Remove adjacent (X ... )X pairs with nothing between them, repeatedly."""
    changed = True
    while changed:
        changed = False
        out = []
        for sym in symbols:
            if (
                out
                and is_close(sym)
                and is_open(out[-1])
                and symbol_label(out[-1]) == symbol_label(sym)
            ):
                out.pop()
                changed = True
            else:
                out.append(sym)
        symbols = out
    return symbols


def force_tree(symbols, sentence_words, root_label="S"):
    """Total repair: turn ANY symbol sequence into a valid tree over exactly
    ``sentence_words``.

    Beyond bracket balancing this fixes the cases the balance rule cannot:
    empty constituents are pruned, a forest (or an empty sequence) is wrapped
    under a synthetic ``root_label`` node, surplus preterminals are dropped
    from the right, and missing ones are appended as normalized-tag
    preterminals before the root's close.
    """
    if not sentence_words:
        raise ValueError("cannot build a tree over an empty sentence")
    n = len(sentence_words)

    symbols = _drop_empty_pairs(repair(symbols))

    # ensure a single root spanning everything
    def top_level_groups(syms):
        depth = 0
        groups = 0
        for sym in syms:
            if is_open(sym):
                if depth == 0:
                    groups += 1
                depth += 1
            elif is_close(sym):
                depth -= 1
            elif depth == 0:
                groups += 1
        return groups

    groups = top_level_groups(symbols)
    lone_preterm = len(symbols) == 1 and is_preterm(symbols[0])
    if groups != 1 or (lone_preterm and n != 1):
        symbols = [open_symbol(root_label)] + symbols + [close_symbol(root_label)]

    n_preterms = sum(1 for s in symbols if is_preterm(s))
    if n_preterms > n:
        surplus = n_preterms - n
        kept = []
        for sym in reversed(symbols):
            if surplus and is_preterm(sym):
                surplus -= 1
            else:
                kept.append(sym)
        symbols = _drop_empty_pairs(kept[::-1])
        if top_level_groups(symbols) != 1:
            symbols = [open_symbol(root_label)] + symbols + [close_symbol(root_label)]
    elif n_preterms < n:
        pad = [NORMALIZED_TAG] * (n - n_preterms)
        symbols = symbols[:-1] + pad + symbols[-1:]

    return delinearize(symbols, sentence_words)


def normalize_pos(tree):
    """Replace every preterminal tag with the normalized tag (idempotent)."""
    if isinstance(tree, Preterminal):
        return Preterminal(NORMALIZED_TAG, tree.word)
    return Internal(tree.label, [normalize_pos(c) for c in tree.children])

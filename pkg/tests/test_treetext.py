"""Tree text round-trips, linearization, repair, and total tree forcing."""

import pytest
from hypothesis import given, settings, strategies as st

from seq2tree import treetext as tt
from seq2tree.treetext import (
    ArityMismatch,
    Internal,
    MalformedSequence,
    Preterminal,
    TreeSyntaxError,
    delinearize,
    force_tree,
    linearize,
    normalize_pos,
    read_bracketed,
    repair,
    words,
    write_bracketed,
)

CANONICAL_TEXT = "(S (NP (NNP John)) (VP (VBZ has) (NP (DT a) (NN dog))) (. .))"
CANONICAL_SYMBOLS = [
    "(S", "(NP", "NNP", ")NP", "(VP", "VBZ", "(NP", "DT", "NN", ")NP", ")VP",
    ".", ")S", "END",
]


def canonical_tree():
    return Internal("S", [
        Internal("NP", [Preterminal("NNP", "John")]),
        Internal("VP", [
            Preterminal("VBZ", "has"),
            Internal("NP", [Preterminal("DT", "a"), Preterminal("NN", "dog")]),
        ]),
        Preterminal(".", "."),
    ])


class TestBracketedIO:
    def test_read_canonical(self):
        (tree,) = read_bracketed(CANONICAL_TEXT)
        assert tree == canonical_tree()

    def test_write_canonical(self):
        assert write_bracketed(canonical_tree()) == CANONICAL_TEXT

    def test_read_tolerates_whitespace(self):
        messy = "(S\n  (NP (NNP John))\n  (VP (VBZ has)\n      (NP (DT a) (NN dog)))\n  (. .))"
        (tree,) = read_bracketed(messy)
        assert tree == canonical_tree()

    def test_read_unwraps_labelless_root(self):
        (tree,) = read_bracketed("( " + CANONICAL_TEXT + " )")
        assert tree == canonical_tree()

    def test_read_multiple_trees(self):
        trees = read_bracketed("(S (X a)) (S (Y b))")
        assert len(trees) == 2
        assert words(trees[0]) == ["a"]
        assert words(trees[1]) == ["b"]

    @pytest.mark.parametrize("bad", [
        "(S (X a)",          # unclosed
        "(S (X a)))",        # extra close
        "(S)",               # empty constituent
        "()",                # no label
        "(X a b)",           # preterminal with two words
        "(S (X a) b)",       # words and subtrees mixed
        "S (X a))",          # word outside brackets
    ])
    def test_read_rejects_malformed(self, bad):
        with pytest.raises(TreeSyntaxError):
            read_bracketed(bad)

    def test_syntax_error_carries_offset(self):
        err = None
        try:
            read_bracketed("(S (X a)))")
        except TreeSyntaxError as exc:
            err = exc
        assert err is not None
        assert err.offset == 9


class TestLinearize:
    def test_canonical_sequence(self):
        assert linearize(canonical_tree()) == CANONICAL_SYMBOLS

    def test_words_dropped(self):
        assert all(w not in linearize(canonical_tree())
                   for w in ("John", "has", "a", "dog"))

    def test_normalized_example(self):
        (tree,) = read_bracketed("(S (VP (VB Go)) (. .))")
        norm = normalize_pos(tree)
        assert linearize(norm) == ["(S", "(VP", "XX", ")VP", "XX", ")S", "END"]

    def test_delinearize_inverts(self):
        tree = canonical_tree()
        rebuilt = delinearize(linearize(tree), words(tree))
        assert rebuilt == tree

    def test_delinearize_without_end(self):
        tree = canonical_tree()
        assert delinearize(linearize(tree)[:-1], words(tree)) == tree

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatch):
            delinearize(CANONICAL_SYMBOLS, ["only", "four", "words", "here"])

    @pytest.mark.parametrize("syms,n_words", [
        (["(S", "XX"], 1),                    # unclosed
        (["(S", "XX", ")NP"], 1),             # wrong close
        ([")S", "XX"], 1),                    # close with nothing open
        (["(S", ")S"], 0),                    # empty constituent
        (["(S", "XX", ")S", "XX"], 2),        # two top-level trees
        (["(S", "END", "XX", ")S"], 1),       # END mid-sequence
    ])
    def test_delinearize_rejects(self, syms, n_words):
        with pytest.raises(MalformedSequence):
            delinearize(syms, ["w"] * n_words)


class TestSymbols:
    def test_classifiers(self):
        assert tt.is_open("(S") and not tt.is_open(")S")
        assert tt.is_close(")NP") and not tt.is_close("(NP")
        assert tt.is_preterm("XX") and tt.is_preterm("NNP")
        assert not tt.is_preterm("(S")
        assert not tt.is_preterm(")S")
        assert not tt.is_preterm("END")

    def test_labels(self):
        assert tt.symbol_label("(NP") == "NP"
        assert tt.symbol_label(")NP") == "NP"
        assert tt.symbol_label("XX") == "XX"
        assert tt.open_symbol("VP") == "(VP"
        assert tt.close_symbol("VP") == ")VP"


class TestRepair:
    def test_appends_missing_closes(self):
        assert repair(["(S", "(VP", "XX"]) == ["(S", "(VP", "XX", ")VP", ")S"]

    def test_drops_orphan_close(self):
        assert repair([")NP", "(S", "XX", ")S"]) == ["(S", "XX", ")S"]

    def test_mismatched_close_dropped_and_rebalanced(self):
        assert repair(["(S", "(NP", "XX", ")VP", ")S"]) == \
            ["(S", "(NP", "XX", ")NP", ")S"]

    def test_balanced_input_unchanged(self):
        seq = CANONICAL_SYMBOLS[:-1]
        assert repair(seq) == seq

    def test_strips_end(self):
        assert repair(CANONICAL_SYMBOLS) == CANONICAL_SYMBOLS[:-1]

    def test_empty(self):
        assert repair([]) == []


# strategies -----------------------------------------------------------------

LABELS = ["S", "NP", "VP", "PP", "SBAR"]
TAGS = ["XX", "NNP", "DT", "NN", "VBZ", "IN", "."]
WORDS = ["a", "dog", "runs", "John", "by", "the", "house", "."]


def tree_strategy(depth=3):
    leaves = st.builds(Preterminal, st.sampled_from(TAGS), st.sampled_from(WORDS))
    return st.recursive(
        leaves,
        lambda kids: st.builds(
            Internal, st.sampled_from(LABELS), st.lists(kids, min_size=1, max_size=4)),
        max_leaves=12,
    ).filter(lambda t: isinstance(t, Internal))


symbol_soup = st.lists(
    st.sampled_from(
        [tt.open_symbol(l) for l in LABELS]
        + [tt.close_symbol(l) for l in LABELS]
        + TAGS + [tt.END_SYMBOL]
    ),
    max_size=30,
)


class TestProperties:
    @given(tree_strategy())
    @settings(max_examples=150)
    def test_bracketed_round_trip(self, tree):
        (back,) = read_bracketed(write_bracketed(tree))
        assert back == tree

    @given(tree_strategy())
    @settings(max_examples=150)
    def test_linearize_round_trip(self, tree):
        assert delinearize(linearize(tree), words(tree)) == tree

    @given(tree_strategy())
    @settings(max_examples=100)
    def test_linearized_is_balanced_fixed_point(self, tree):
        seq = linearize(tree)[:-1]
        assert repair(seq) == seq

    @given(symbol_soup)
    @settings(max_examples=200)
    def test_repair_balances_and_is_idempotent(self, syms):
        fixed = repair(syms)
        depth = 0
        for sym in fixed:
            assert sym != tt.END_SYMBOL
            if tt.is_open(sym):
                depth += 1
            elif tt.is_close(sym):
                depth -= 1
            assert depth >= 0
        assert depth == 0
        assert repair(fixed) == fixed

    @given(symbol_soup, st.integers(min_value=1, max_value=6))
    @settings(max_examples=200)
    def test_force_tree_is_total(self, syms, n_words):
        sent = [f"w{i}" for i in range(n_words)]
        tree = force_tree(syms, sent)
        assert words(tree) == sent

    @given(tree_strategy())
    @settings(max_examples=100)
    def test_force_tree_preserves_valid_sequences(self, tree):
        assert force_tree(linearize(tree), words(tree)) == tree


class TestNormalize:
    def test_all_tags_become_xx(self):
        norm = normalize_pos(canonical_tree())

        def tags(t):
            if isinstance(t, Preterminal):
                return [t.tag]
            return [x for c in t.children for x in tags(c)]

        assert set(tags(norm)) == {"XX"}
        assert words(norm) == words(canonical_tree())

    def test_idempotent(self):
        once = normalize_pos(canonical_tree())
        assert normalize_pos(once) == once

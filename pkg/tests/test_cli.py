"""End-to-end command-line behaviour on a toy corpus."""

import json
import os
import subprocess

import numpy as np
import pytest

from seq2tree.checkpoint import load_checkpoint
from seq2tree.cli import main
from seq2tree.treetext import read_trees_file, words

CANONICAL_TEXT = "(S (NP (NNP John)) (VP (VBZ has) (NP (DT a) (NN dog))) (. .))"
CANONICAL_NORMALIZED_LINE = "(S (NP XX )NP (VP XX (NP XX XX )NP )VP XX )S END"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestLinearize:
    def test_known_tree(self, tmp_path, capsys):
        src = tmp_path / "trees.txt"
        src.write_text(CANONICAL_TEXT + "\n")
        out = tmp_path / "seqs.txt"
        code, _, _ = run(capsys, "linearize", "--trees", str(src),
                         "--out", str(out))
        assert code == 0
        assert out.read_text() == CANONICAL_NORMALIZED_LINE + "\n"
        assert json.loads((tmp_path / "seqs.txt.config.json").read_text())[
            "command"] == "linearize"

    def test_empty_file(self, tmp_path, capsys):
        src = tmp_path / "trees.txt"
        src.write_text("")
        out = tmp_path / "seqs.txt"
        code, _, _ = run(capsys, "linearize", "--trees", str(src),
                         "--out", str(out))
        assert code == 0
        assert out.read_text() == ""

    def test_round_trip_through_delinearize(self, tmp_path, capsys):
        src = tmp_path / "trees.txt"
        src.write_text(CANONICAL_TEXT + "\n" + CANONICAL_TEXT + "\n")
        seqs = tmp_path / "seqs.txt"
        run(capsys, "linearize", "--trees", str(src), "--out", str(seqs))
        sents = tmp_path / "sents.txt"
        sents.write_text("John has a dog .\nJohn has a dog .\n")
        back = tmp_path / "back.txt"
        code, _, _ = run(capsys, "delinearize", "--symbols", str(seqs),
                         "--sentences", str(sents), "--out", str(back))
        assert code == 0
        trees = read_trees_file(str(back))
        assert len(trees) == 2
        assert words(trees[0]) == ["John", "has", "a", "dog", "."]
        # normalized tags survive the round trip
        assert "(XX John)" in back.read_text()


class TestDelinearizeErrors:
    def test_line_number_in_error(self, tmp_path, capsys):
        seqs = tmp_path / "seqs.txt"
        seqs.write_text("(S XX )S END\n(S XX END\n")
        sents = tmp_path / "sents.txt"
        sents.write_text("a\nb\n")
        out = tmp_path / "back.txt"
        code, _, err = run(capsys, "delinearize", "--symbols", str(seqs),
                           "--sentences", str(sents), "--out", str(out))
        assert code == 1
        assert "line 2" in err

    def test_length_mismatch(self, tmp_path, capsys):
        seqs = tmp_path / "seqs.txt"
        seqs.write_text("(S XX )S END\n")
        sents = tmp_path / "sents.txt"
        sents.write_text("a\nb\n")
        code, _, err = run(capsys, "delinearize", "--symbols", str(seqs),
                           "--sentences", str(sents),
                           "--out", str(tmp_path / "x"))
        assert code == 1
        assert "sentence lines" in err


class TestGenCorpus:
    def test_writes_splits_and_grammar(self, tmp_path, capsys):
        prefix = tmp_path / "toy"
        code, out, _ = run(capsys, "gen-corpus", "--out-prefix", str(prefix),
                           "--n-train", "30", "--n-dev", "5", "--n-test", "4",
                           "--seed", "1")
        assert code == 0
        assert "30/5/4" in out
        assert len(read_trees_file(str(prefix) + ".train")) == 30
        assert len(read_trees_file(str(prefix) + ".dev")) == 5
        assert (prefix.parent / "toy.grammar").exists()
        assert (prefix.parent / "toy.corpus.config.json").exists()

    def test_deterministic(self, tmp_path, capsys):
        outs = []
        for name in ("a", "b"):
            prefix = tmp_path / name
            run(capsys, "gen-corpus", "--out-prefix", str(prefix),
                "--n-train", "12", "--n-dev", "3", "--n-test", "3",
                "--seed", "7")
            outs.append((prefix.parent / (name + ".train")).read_bytes())
        assert outs[0] == outs[1]


@pytest.fixture(scope="module")
def toy_run(tmp_path_factory):
    """gen-corpus + a short training run shared by parse/eval tests."""
    root = tmp_path_factory.mktemp("toyrun")
    prefix = root / "toy"
    assert main(["gen-corpus", "--out-prefix", str(prefix),
                 "--n-train", "24", "--n-dev", "6", "--n-test", "4",
                 "--seed", "3"]) == 0
    run_dir = root / "run"
    assert main(["train", "--train", str(prefix) + ".train",
                 "--dev", str(prefix) + ".dev",
                 "--out-dir", str(run_dir),
                 "--hidden", "8", "--embed", "8", "--layers", "1",
                 "--max-epochs", "2", "--batch-size", "8",
                 "--eval-every", "3", "--seed", "5"]) == 0
    return root, prefix, run_dir


class TestTrainCommand:
    def test_artifacts(self, toy_run):
        _, _, run_dir = toy_run
        assert (run_dir / "best.ckpt").exists()
        assert (run_dir / "in.vocab").exists()
        assert (run_dir / "out.vocab").exists()
        assert (run_dir / "config.resolved.json").exists()
        rows = [json.loads(line)
                for line in (run_dir / "log.jsonl").read_text().splitlines()]
        kinds = {r["kind"] for r in rows}
        assert kinds == {"step", "eval"}
        params, header = load_checkpoint(str(run_dir / "best.ckpt"))
        assert header["extra"]["dev_f1"] == pytest.approx(
            max(r["dev_f1"] for r in rows if r["kind"] == "eval"))

    def test_zero_epochs_emits_initial_checkpoint(self, tmp_path, capsys,
                                                  toy_run):
        _, prefix, _ = toy_run
        out_dir = tmp_path / "zero"
        code, out, _ = run(capsys, "train",
                           "--train", str(prefix) + ".train",
                           "--dev", str(prefix) + ".dev",
                           "--out-dir", str(out_dir),
                           "--hidden", "4", "--embed", "4", "--layers", "1",
                           "--max-epochs", "0")
        assert code == 0
        assert "initial checkpoint" in out
        load_checkpoint(str(out_dir / "best.ckpt"))

    def test_same_seed_identical_checkpoint_bytes(self, tmp_path, capsys,
                                                  toy_run):
        _, prefix, _ = toy_run
        blobs = []
        for name in ("r1", "r2"):
            out_dir = tmp_path / name
            code, _, _ = run(capsys, "train",
                             "--train", str(prefix) + ".train",
                             "--dev", str(prefix) + ".dev",
                             "--out-dir", str(out_dir),
                             "--hidden", "6", "--embed", "6", "--layers", "1",
                             "--max-epochs", "1", "--batch-size", "8",
                             "--eval-every", "2", "--seed", "11")
            assert code == 0
            blobs.append((out_dir / "best.ckpt").read_bytes())
        assert blobs[0] == blobs[1]

    def test_config_file_with_flag_override(self, tmp_path, capsys, toy_run):
        _, prefix, _ = toy_run
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"hidden": 4, "embed": 4, "layers": 1,
                                   "max_epochs": 0}))
        out_dir = tmp_path / "cfgd"
        code, _, _ = run(capsys, "train",
                         "--train", str(prefix) + ".train",
                         "--dev", str(prefix) + ".dev",
                         "--out-dir", str(out_dir), "--config", str(cfg),
                         "--hidden", "6")
        assert code == 0
        resolved = json.loads((out_dir / "config.resolved.json").read_text())
        assert resolved["hidden"] == 6      # flag beats config file
        assert resolved["embed"] == 4       # config file beats default
        params, _ = load_checkpoint(str(out_dir / "best.ckpt"))
        assert params.hyper.hidden == 6

    def test_unknown_config_key_rejected(self, tmp_path, capsys, toy_run):
        _, prefix, _ = toy_run
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"hiden": 4}))
        code, _, err = run(capsys, "train",
                           "--train", str(prefix) + ".train",
                           "--dev", str(prefix) + ".dev",
                           "--out-dir", str(tmp_path / "x"),
                           "--config", str(cfg))
        assert code == 1
        assert "unknown config keys" in err


class TestParseCommand:
    def test_parse_outputs_valid_trees(self, toy_run, tmp_path, capsys):
        root, prefix, run_dir = toy_run
        dev_trees = read_trees_file(str(prefix) + ".dev")
        sents = tmp_path / "sents.txt"
        sents.write_text("".join(" ".join(words(t)) + "\n" for t in dev_trees))
        out = tmp_path / "pred.txt"
        code, msg, _ = run(capsys, "parse",
                           "--model", str(run_dir / "best.ckpt"),
                           "--input", str(sents), "--out", str(out),
                           "--beam", "2")
        assert code == 0
        assert "sentences/s" in msg and "repaired" in msg
        preds = read_trees_file(str(out))
        assert len(preds) == len(dev_trees)
        for tree, gold in zip(preds, dev_trees):
            assert words(tree) == words(gold)

    def test_empty_line_skipped_with_warning(self, toy_run, tmp_path, capsys):
        _, _, run_dir = toy_run
        sents = tmp_path / "sents.txt"
        sents.write_text("the dog runs\n\nthe cat sits\n")
        out = tmp_path / "pred.txt"
        code, msg, err = run(capsys, "parse",
                             "--model", str(run_dir / "best.ckpt"),
                             "--input", str(sents), "--out", str(out),
                             "--beam", "1")
        assert code == 0
        assert "line 2" in err and "skipped" in err
        assert len(read_trees_file(str(out))) == 2
        assert "parsed 2 sentences" in msg

    def test_attention_tsvs(self, toy_run, tmp_path, capsys):
        _, _, run_dir = toy_run
        sents = tmp_path / "sents.txt"
        sents.write_text("the dog runs .\n")
        out = tmp_path / "pred.txt"
        att = tmp_path / "att"
        code, _, _ = run(capsys, "parse",
                         "--model", str(run_dir / "best.ckpt"),
                         "--input", str(sents), "--out", str(out),
                         "--beam", "1", "--attention", str(att))
        assert code == 0
        tsv = (att / "sent-000001.tsv").read_text().splitlines()
        assert tsv[0].split("\t") == [".", "runs", "dog", "the"]
        for line in tsv[1:]:
            row = [float(x) for x in line.split("\t")]
            assert sum(row) == pytest.approx(1.0, abs=5e-6)

    def test_ensemble_of_duplicates(self, toy_run, tmp_path, capsys):
        _, _, run_dir = toy_run
        sents = tmp_path / "sents.txt"
        sents.write_text("the dog runs .\n")
        single = tmp_path / "one.txt"
        double = tmp_path / "two.txt"
        for out, model_args in ((single, [str(run_dir / "best.ckpt")]),
                                (double, [str(run_dir / "best.ckpt")] * 2)):
            code, _, _ = run(capsys, "parse", "--model", *model_args,
                             "--input", str(sents), "--out", str(out),
                             "--beam", "2")
            assert code == 0
        assert single.read_text() == double.read_text()

    def test_missing_model_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "parse", "--model",
                           str(tmp_path / "nope.ckpt"),
                           "--input", str(tmp_path / "nope.txt"),
                           "--out", str(tmp_path / "o.txt"))
        assert code == 1
        assert "error:" in err


class TestEvalCommand:
    def test_gold_vs_itself(self, toy_run, tmp_path, capsys):
        _, prefix, _ = toy_run
        out = tmp_path / "report.json"
        code, msg, _ = run(capsys, "eval", "--gold", str(prefix) + ".dev",
                           "--pred", str(prefix) + ".dev", "--out", str(out))
        assert code == 0
        report = json.loads(out.read_text())
        assert report["f1"] == pytest.approx(100.0)
        assert "100.00" in msg

    def test_buckets_tsv(self, toy_run, tmp_path, capsys):
        _, prefix, _ = toy_run
        out = tmp_path / "report.json"
        code, _, _ = run(capsys, "eval", "--gold", str(prefix) + ".dev",
                         "--pred", str(prefix) + ".dev", "--out", str(out),
                         "--buckets")
        assert code == 0
        lines = (tmp_path / "report.json.buckets.tsv").read_text().splitlines()
        assert lines
        for line in lines:
            bound, f1 = line.split("\t")
            assert int(bound) in range(10, 71, 10)
            assert float(f1) == pytest.approx(100.0)

    def test_mismatched_counts(self, toy_run, tmp_path, capsys):
        _, prefix, _ = toy_run
        short = tmp_path / "short.txt"
        trees = read_trees_file(str(prefix) + ".dev")
        from seq2tree.treetext import write_trees_file
        write_trees_file(str(short), trees[:-1])
        code, _, err = run(capsys, "eval", "--gold", str(prefix) + ".dev",
                           "--pred", str(short),
                           "--out", str(tmp_path / "r.json"))
        assert code == 1


class TestInspectCommand:
    def test_prints_header(self, toy_run, capsys):
        _, _, run_dir = toy_run
        code, out, _ = run(capsys, "inspect-checkpoint",
                           str(run_dir / "best.ckpt"))
        assert code == 0
        assert "hyper.hidden: 8" in out
        assert "flags.attention_feedback:" in out
        assert "parameters:" in out
        assert "extra.dev_f1:" in out


class TestOutDirOverride:
    def test_relative_paths_rerouted(self, toy_run, tmp_path, capsys,
                                     monkeypatch):
        _, prefix, _ = toy_run
        monkeypatch.setenv("SEQ2TREE_OUT_DIR", str(tmp_path))
        monkeypatch.chdir(tmp_path)
        src = tmp_path / "trees.txt"
        src.write_text(CANONICAL_TEXT + "\n")
        code, _, _ = run(capsys, "linearize", "--trees", str(src),
                         "--out", "rel/seqs.txt")
        assert code == 0
        assert (tmp_path / "rel" / "seqs.txt").exists()

    def test_absolute_paths_untouched(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SEQ2TREE_OUT_DIR", str(tmp_path / "elsewhere"))
        src = tmp_path / "trees.txt"
        src.write_text(CANONICAL_TEXT + "\n")
        out = tmp_path / "seqs.txt"
        code, _, _ = run(capsys, "linearize", "--trees", str(src),
                         "--out", str(out))
        assert code == 0
        assert out.exists()


class TestConsoleScript:
    def test_installed_entry_point(self):
        proc = subprocess.run(["seq2tree", "--help"], capture_output=True,
                              text=True)
        assert proc.returncode == 0
        assert "inspect-checkpoint" in proc.stdout

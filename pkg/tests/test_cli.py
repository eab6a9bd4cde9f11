from __future__ import annotations

import pytest

from monadlearn import cli
from monadlearn.automata import bisim_up_to, parse_automaton, serialize
from monadlearn.cli import main, parse_sizes
from monadlearn.effects import EnumerationCapExceeded
from util import dfa_ml, nfa_n


@pytest.fixture
def dfa_file(tmp_path):
    path = tmp_path / "dfa_ml.aut"
    path.write_text(serialize(dfa_ml()))
    return str(path)


def test_learn_dfa(dfa_file, tmp_path, capsys):
    out = tmp_path / "learned.aut"
    assert main(["learn", "--target", dfa_file, "--effect", "identity", "--ce", "angluin", "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert stdout.startswith("mq=") and "eq=" in stdout and "states=3" in stdout
    learned = parse_automaton(out.read_text())
    assert bisim_up_to(None, learned, dfa_ml()) is None


def test_learn_nfa_from_dfa_file(dfa_file, tmp_path, capsys):
    out = tmp_path / "learned.aut"
    args = ["learn", "--target", dfa_file, "--effect", "powerset", "--ce", "rs", "--consistency", "none", "--out", str(out)]
    assert main(args) == 0
    learned = parse_automaton(out.read_text())
    assert learned.effect.spec == "powerset"
    assert len(learned.states) == 2
    assert bisim_up_to(None, learned, nfa_n()) is None


def test_learn_writes_to_stdout_and_traces(dfa_file, capsys):
    assert main(["learn", "--target", dfa_file, "--trace"]) == 0
    stdout = capsys.readouterr().out
    assert "# init\n  | ε\n--+--\nε | 1\n--+--\na | 0\n" in stdout
    assert "effect identity" in stdout


def test_learn_with_sampling_teachers(dfa_file, capsys):
    assert main(["learn", "--target", dfa_file, "--teacher", "random:200", "--seed", "3"]) == 0
    assert main(["learn", "--target", dfa_file, "--teacher", "pac:0.1:0.05", "--seed", "3"]) == 0


def test_exit_codes(dfa_file, tmp_path, capsys):
    assert main(["learn", "--target", dfa_file, "--consistency", "none", "--ce", "angluin"]) == 3
    assert main(["learn", "--target", str(tmp_path / "missing.aut")]) == 2
    bad = tmp_path / "bad.aut"
    bad.write_text("effect powerset\nalphabet a\n")
    assert main(["learn", "--target", str(bad)]) == 2
    assert main(["learn", "--target", dfa_file, "--teacher", "oracle"]) == 2
    assert main(["learn", "--target", dfa_file, "--effect", "writer:" + str(tmp_path / "none.txt")]) == 2
    assert main(["generate", "--kind", "tv-nfa", "--n", "2", "--density", "5"]) == 3
    err = capsys.readouterr().err
    assert err.count("error:") == 6


def test_enumeration_cap_exit(dfa_file, monkeypatch, capsys):
    # the shipped effects have polynomial checks, so provoke the limit directly
    def explode(*args, **kwargs):
        raise EnumerationCapExceeded("more than 12 generators")

    monkeypatch.setattr(cli, "lstar_t", explode)
    assert main(["learn", "--target", dfa_file]) == 4
    assert "more than 12 generators" in capsys.readouterr().err


def test_writer_monoid_file(tmp_path, capsys):
    table = tmp_path / "z2.txt"
    table.write_text("0 1\n1 0\n")
    target = tmp_path / "w.aut"
    target.write_text(
        "\n".join(
            [
                f"effect writer:{table}",
                "alphabet a",
                "states q0",
                "init (0,q0)",
                "trans q0 a (1,q0)",
                "out q0 0",
                "",
            ]
        )
    )
    assert main(["learn", "--target", str(target)]) == 0
    assert "states=1" in capsys.readouterr().out


def test_generate(tmp_path, capsys):
    out = tmp_path / "nfa.aut"
    assert main(["generate", "--kind", "tv-nfa", "--n", "8", "--k", "3", "--density", "1.25", "--seed", "1", "--out", str(out)]) == 0
    aut = parse_automaton(out.read_text())
    for a in aut.alphabet:
        assert sum(len(aut.delta[(q, a)]) for q in aut.states) == 10
    assert main(["generate", "--kind", "moore", "--n", "1"]) == 0
    assert capsys.readouterr().out.count("\nout ") == 1
    assert main(["generate", "--kind", "wfa", "--n", "3", "--field", "5"]) == 0
    text = capsys.readouterr().out
    assert text.count("trans ") == 9 and text.startswith("effect semimodule:5")
    # deterministic under a fixed seed
    main(["generate", "--kind", "wfa", "--n", "3", "--seed", "2"])
    first = capsys.readouterr().out
    main(["generate", "--kind", "wfa", "--n", "3", "--seed", "2"])
    assert capsys.readouterr().out == first


def test_bench(tmp_path, capsys):
    out = tmp_path / "bench"
    args = ["bench", "--suite", "nfa-table2", "--sizes", "2,3", "--iters", "2", "--seed", "7", "--out", str(out), "--series", "--no-timing"]
    assert main(args) == 0
    first = (out / "nfa-table2.csv").read_bytes()
    assert (out / "nfa-table2-aggregate.csv").exists()
    assert (out / "nfa-table2-Lstar_mq.dat").exists()
    assert "MQs" in capsys.readouterr().out
    assert main(args) == 0
    assert (out / "nfa-table2.csv").read_bytes() == first
    assert main(["bench", "--suite", "nfa-table2", "--sizes", "x", "--out", str(out)]) == 2


def test_parse_sizes():
    assert parse_sizes("1..4") == [1, 2, 3, 4]
    assert parse_sizes("20,40") == [20, 40]

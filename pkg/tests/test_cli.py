import re
import time

import pytest

from ardca.cli import build_parser, main, parse_seeds, parse_solvers
from ardca.trace import format_csv, read_csv


@pytest.fixture()
def bundle(tmp_path):
    d = tmp_path / "inst"
    assert main(["gen", "--kind", "lad", "--t", "50", "--n", "20", "--lam", "1",
                 "--seed", "7", "--out", str(d)]) == 0
    return d


def test_round_trip_is_fast(tmp_path):
    start = time.perf_counter()
    d = tmp_path / "inst"
    assert main(["gen", "--kind", "lad", "--t", "50", "--n", "20", "--mu", "0.1",
                 "--tau", "1e-4", "--seed", "7", "--out", str(d)]) == 0
    assert main(["reference", "--instance", str(d), "--passes", "20", "--budget-mult", "10"]) == 0
    assert main(["solve", "--instance", str(d), "--solver", "ardca-restart", "--inner-k", "200",
                 "--passes", "20", "--seed", "7", "--trace", str(tmp_path / "s.csv")]) == 0
    assert main(["race", "--instance", str(d), "--solvers", "ardca,ardca-restart,rdca,adfga",
                 "--passes", "20", "--seeds", "1..5", "--out", str(tmp_path / "r.csv")]) == 0
    assert time.perf_counter() - start < 10
    recs = read_csv(tmp_path / "r.csv")
    assert {r.solver for r in recs} == {"ardca", "ardca-restart", "rdca", "adfga"}
    assert {r.seed for r in recs} == {1, 2, 3, 4, 5}
    assert (tmp_path / "r.csv").read_text() == format_csv(recs)


def test_replay_is_byte_identical(bundle, tmp_path):
    out = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert main(["race", "--instance", str(bundle), "--solvers", "ardca,ardca-na,rdca",
                     "--passes", "10", "--seeds", "1,2", "--no-timing", "--jobs", "2",
                     "--out", str(path)]) == 0
        out.append(path.read_bytes())
    assert out[0] == out[1]


def test_solve_variants(bundle, tmp_path):
    for extra in (["--solver", "ardca", "--step-variant", "standard", "--k0", "3"],
                  ["--solver", "ardca-erm", "--kprime", "auto"],
                  ["--solver", "ardca-erm", "--kprime", "30"],
                  ["--solver", "dga", "--nu", "2.0"]):
        assert main(["solve", "--instance", str(bundle), "--passes", "6", *extra]) == 0


def test_missing_instance(tmp_path):
    assert main(["solve", "--instance", str(tmp_path / "nope")]) == 1


@pytest.mark.parametrize("argv", [
    ["solve", "--instance", "x", "--bogus"],
    ["gen", "--kind", "ridge", "--out", "x"],
    ["gen", "--kind", "lad", "--t", "0", "--out", "x"],
    ["race", "--instance", "x", "--solvers", "ardca,newton", "--out", "y"],
    ["race", "--instance", "x", "--seeds", "5..1", "--out", "y"],
    ["solve", "--instance", "x", "--kprime", "-3"],
    ["solve", "--instance", "x", "--step-variant", "fast"],
    [],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1


def test_semantic_validation(bundle, tmp_path):
    assert main(["gen", "--kind", "linf_constrained", "--tau", "0", "--out",
                 str(tmp_path / "z")]) == 1
    # explicit K0 beyond the admissible bound for the budget
    assert main(["solve", "--instance", str(bundle), "--passes", "2", "--k0", "1000"]) == 1
    c = tmp_path / "c"
    assert main(["gen", "--kind", "linf_constrained", "--t", "10", "--n", "5",
                 "--out", str(c)]) == 0
    assert main(["solve", "--instance", str(c), "--solver", "ardca-erm"]) == 1


def test_help_lists_defaults(capsys):
    for cmd in ("gen", "solve", "race", "reference", "repro-fig1"):
        with pytest.raises(SystemExit):
            build_parser().parse_args([cmd, "--help"])
        text = capsys.readouterr().out
        flags = set(re.findall(r"(--[a-z][a-z0-9-]*)", text)) - {"--help"}
        assert flags
        for flag in flags:
            # every option line carries its default
            line = next(l for l in text.splitlines() if l.strip().startswith(flag)
                        or f", {flag}" in l)
            idx = text.index(line)
            block = text[idx:idx + 400].split("\n  -")[0]
            assert "default:" in block, flag


def test_help_exit_code():
    assert main(["--help"]) == 0


def test_parsers():
    assert parse_seeds("1..5") == [1, 2, 3, 4, 5]
    assert parse_seeds("1,3..4,9") == [1, 3, 4, 9]
    assert parse_solvers("ardca, rdca") == ["ardca", "rdca"]

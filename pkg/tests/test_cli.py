import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

import support as S
import rvk
from rvk.cli import main

SYSTEMS = Path(rvk.__file__).parent / "systems"


def sysfile(name):
    return str(SYSTEMS / f"{name}.rv")


# name -> (arguments, expected exit code); every case is run with --json and
# its output compared byte for byte with tests/golden/<name>.json
CASES = {
    "diag_s1_d2": (["diagnosable", "--system", sysfile("s1"), "--agent", "a", "--error", "e",
                    "--delay", "2"], 0),
    "diag_s1_d1": (["diagnosable", "--system", sysfile("s1"), "--agent", "a", "--error", "e",
                    "--delay", "1"], 1),
    "diag_s1_d1_direct": (["diagnosable", "--system", sysfile("s1"), "--agent", "a",
                           "--error", "e", "--delay", "1", "--direct"], 1),
    "diag_s1_d2_negative": (["diagnosable", "--system", sysfile("s1"), "--agent", "a",
                             "--error", "e", "--delay", "2", "--negative"], 0),
    "diag_s2_unbounded": (["diagnosable", "--system", sysfile("s2"), "--agent", "a",
                           "--error", "e", "--unbounded"], 1),
    "diag_s3_d0": (["diagnosable", "--system", sysfile("s3"), "--agent", "a", "--error", "e",
                    "--delay", "0"], 0),
    "diag_s4_d3": (["diagnosable", "--system", sysfile("s4"), "--agent", "a", "--error", "e",
                    "--delay", "3"], 1),
    "diag_s4_unbounded": (["diagnosable", "--system", sysfile("s4"), "--agent", "a",
                           "--error", "e", "--unbounded"], 0),
    "codiag1_p1": (["codiagnosable", "--system", sysfile("codiag1"), "--error", "e",
                    "--delay", "1"], 0),
    "codiag1_n1": (["codiagnosable", "--system", sysfile("codiag1"), "--error", "e",
                    "--delay", "1", "--negative"], 1),
    "codiag2_n0": (["codiagnosable", "--system", sysfile("codiag2"), "--error", "e",
                    "--delay", "0", "--negative"], 0),
    "codiag2_p2": (["codiagnosable", "--system", sysfile("codiag2"), "--error", "e",
                    "--delay", "2"], 1),
    "codiag3_p2": (["codiagnosable", "--system", sysfile("codiag3"), "--error", "e",
                    "--delay", "2"], 1),
    "opaque": (["opaque", "--system", sysfile("opaque"), "--agent", "a", "--secret", "s"], 0),
    "opaque_two_sided": (["opaque", "--system", sysfile("opaque"), "--agent", "a",
                          "--secret", "s", "--two-sided"], 0),
    "s1_leaks_e": (["opaque", "--system", sysfile("s1"), "--agent", "a", "--secret", "e"], 1),
    "monitorable_fe": (["monitorable", "--system", sysfile("monitorable"), "--agent", "a",
                        "--formula", "F e"], 0),
    "blackbox_gfp": (["monitorable", "--system", sysfile("blackbox_p"), "--agent", "a",
                      "--formula", "G F p"], 1),
    "blackbox_fp_or_gr": (["monitorable", "--system", sysfile("blackbox_pr"), "--agent", "a",
                           "--formula", "F p | G r"], 0),
    "nested": (["check", "--system", sysfile("nested"), "--formula",
                "X X (K[a] W[b] h & !W[a] h)"], 0),
    "check_s1_pdiag": (["check", "--system", sysfile("s1"), "--formula",
                        "G (e -> X^2 K[a] P e)"], 0),
    "check_s2_counterexample": (["check", "--system", sysfile("s2"), "--formula",
                                 "G (e -> F K[a] P e)"], 1),
    "classify_good": (["classify", "--system", sysfile("monitorable"), "--agent", "a",
                       "--formula", "F e", "--prefix", "{}{}{r}"], 0),
    "classify_bad": (["classify", "--system", sysfile("monitorable"), "--agent", "a",
                      "--formula", "F e", "--prefix", "{s}"], 1),
    "classify_inconclusive": (["classify", "--system", sysfile("monitorable"), "--agent", "a",
                               "--formula", "F e", "--prefix", "{}"], 4),
    "classify_ugly": (["classify", "--system", sysfile("blackbox_p"), "--agent", "a",
                       "--formula", "G F p", "--prefix", "{p}"], 4),
    "classify_infeasible": (["classify", "--system", sysfile("monitorable"), "--agent", "a",
                             "--formula", "F e", "--prefix", "{r}{s}"], 3),
}


def run_main(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("case", sorted(CASES))
def test_golden(case, capsys):
    argv, expected = CASES[case]
    code, out, _ = run_main(argv + ["--json"], capsys)
    assert code == expected
    payload = json.loads(out)
    assert payload["result"] == (code == 0)
    golden = S.GOLDEN / f"{case}.json"
    assert out == golden.read_text(encoding="utf-8")


def test_witness_is_a_counterexample(capsys):
    code, out, _ = run_main(CASES["check_s2_counterexample"][0] + ["--json"], capsys)
    w = json.loads(out)["witness"]
    a = S.system("s2")
    lasso = S.lasso(a.vocab, "".join(w["stem"]), "".join(w["loop"]))
    from rvk.automata import accepts_lasso

    assert accepts_lasso(a, lasso) and "{p,e}" in w["stem"] + w["loop"]


def test_text_output(capsys):
    code, out, _ = run_main(CASES["diag_s1_d1"][0], capsys)
    assert code == 1 and out.startswith("1-P-diagnosable: fails") and "witness:" in out


# -- synth and run -------------------------------------------------------------------------

@pytest.fixture
def figure_monitor(tmp_path, capsys):
    path = tmp_path / "m.rv"
    code, out, _ = run_main(["synth", "--system", sysfile("monitorable"), "--agent", "a",
                             "--formula", "F e", "--out", str(path)], capsys)
    assert code == 0 and path.exists()
    return path


def test_run_trace_file(figure_monitor, tmp_path, capsys):
    trace = tmp_path / "obs.txt"
    trace.write_text("{}\n{}\n{r}\n")
    code, out, _ = run_main(["run", "--monitor", str(figure_monitor), "--trace", str(trace)], capsys)
    assert code == 0 and out.split() == ["UNKNOWN", "UNKNOWN", "TRUE"]


def test_run_json_and_exit_codes(figure_monitor, tmp_path, capsys):
    cases = {"{}\n{}\n": (4, ["UNKNOWN", "UNKNOWN"]), "{s}\n{s}\n": (1, ["FALSE", "FALSE"]),
             "{r}\n{s}\n": (3, ["TRUE", "INFEASIBLE"]), "": (4, [])}
    for text, (expected, verdicts) in cases.items():
        trace = tmp_path / "t.txt"
        trace.write_text(text)
        code, out, _ = run_main(["run", "--monitor", str(figure_monitor), "--trace", str(trace),
                                 "--json"], capsys)
        assert code == expected
        assert json.loads(out) == {"result": expected == 0, "verdicts": verdicts}


def test_run_stdin(figure_monitor, capsys, monkeypatch):
    code, out, _ = run_main(["run", "--monitor", str(figure_monitor)], capsys,
                            stdin="{}\n# comment\n{r}\n{r}\n", monkeypatch=monkeypatch)
    assert code == 0 and out.split() == ["UNKNOWN", "TRUE", "TRUE"]


def test_run_projects_full_events(figure_monitor, capsys, monkeypatch):
    # the hidden e is dropped before the monitor sees the event
    code, out, _ = run_main(["run", "--monitor", str(figure_monitor)], capsys,
                            stdin="{e}\n{r}\n", monkeypatch=monkeypatch)
    assert out.split() == ["UNKNOWN", "TRUE"]


def test_run_bad_event(figure_monitor, capsys, monkeypatch):
    code, _, err = run_main(["run", "--monitor", str(figure_monitor)], capsys,
                            stdin="{}\n{zz}\n", monkeypatch=monkeypatch)
    assert code == 2 and "line 2" in err


def test_synth_diagnoser(tmp_path, capsys, monkeypatch):
    path = tmp_path / "d.rv"
    code, _, _ = run_main(["synth", "--system", sysfile("s1"), "--agent", "a", "--diagnoser",
                           "--error", "e", "--out", str(path)], capsys)
    assert code == 0
    code, out, _ = run_main(["run", "--monitor", str(path)], capsys,
                            stdin="{p}\n{p}\n{r}\n", monkeypatch=monkeypatch)
    assert code == 0 and out.split() == ["UNKNOWN", "UNKNOWN", "TRUE"]


def test_synth_to_stdout(capsys):
    code, out, _ = run_main(["synth", "--system", sysfile("monitorable"), "--agent", "a",
                             "--formula", "F e"], capsys)
    assert code == 0 and out.startswith("props ") and "alphabet obs a" in out


def test_gen_opacity_hard(tmp_path, capsys):
    nfa = tmp_path / "n.txt"
    nfa.write_text("alphabet g\nstate n0 init acc\ntrans n0 g n1\nstate n1\ntrans n1 g n0\n")
    out_path = tmp_path / "sys.rv"
    assert run_main(["gen-opacity-hard", "--nfa", str(nfa), "--out", str(out_path)], capsys)[0] == 0
    code, _, _ = run_main(["opaque", "--system", str(out_path), "--agent", "a", "--secret", "s"],
                          capsys)
    assert code == 1
    nfa.write_text("alphabet g\nstate n0 init acc\ntrans n0 g n0\n")
    code, text, _ = run_main(["gen-opacity-hard", "--nfa", str(nfa)], capsys)
    out_path.write_text(text)
    assert run_main(["opaque", "--system", str(out_path), "--agent", "a", "--secret", "s"],
                    capsys)[0] == 0


def test_system_from_stdin(capsys, monkeypatch):
    code, _, _ = run_main(["diagnosable", "--system", "-", "--agent", "a", "--error", "e",
                           "--delay", "2"], capsys, stdin=S.catalog.source("s1"),
                          monkeypatch=monkeypatch)
    assert code == 0


# -- errors ------------------------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["check", "--system", sysfile("s1"), "--formula", "G (e ->"],
    ["check", "--system", sysfile("s1"), "--formula", "G zz"],
    ["check", "--system", "/nonexistent.rv", "--formula", "p"],
    ["diagnosable", "--system", sysfile("s1"), "--agent", "a", "--error", "p", "--delay", "1"],
    ["diagnosable", "--system", sysfile("s1"), "--agent", "a", "--error", "e", "--unbounded",
     "--negative"],
    ["synth", "--system", sysfile("s1"), "--agent", "a"],
    ["classify", "--system", sysfile("monitorable"), "--agent", "a", "--formula", "F e"],
])
def test_usage_errors(argv, capsys):
    code, _, err = run_main(argv, capsys)
    assert code == 2 and err.startswith("rvk: ")


@pytest.mark.parametrize("argv", [
    ["diagnosable"],
    ["diagnosable", "--system", sysfile("s1"), "--agent", "a", "--error", "e"],
    ["frobnicate"],
])
def test_argparse_errors_exit_two(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_parse_error_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.rv"
    bad.write_text("props p\nstate q0 init\ntrans q0 {x} q0\n")
    code, _, err = run_main(["check", "--system", str(bad), "--formula", "p"], capsys)
    assert code == 2 and "line 3" in err


def test_budget_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("RVK_STATE_BUDGET", "3")
    code, _, err = run_main(["check", "--system", sysfile("nested"), "--formula",
                             "X X (K[a] W[b] h & !W[a] h)"], capsys)
    assert code == 3 and err.startswith("rvk: ")


def test_hidden_oracle_flag(capsys):
    code, out, _ = run_main(["check", "--system", sysfile("s1"), "--formula",
                             "G (e -> X^2 K[a] P e)", "--oracle", "--json"], capsys)
    assert code == 0 and json.loads(out) == {"result": True}


def test_console_script_streams_lines(figure_monitor):
    # line-buffered: each verdict is readable before the next event is sent
    proc = subprocess.Popen([sys.executable, "-m", "rvk", "run", "--monitor", str(figure_monitor)],
                            stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
                            env={**os.environ, "PYTHONUNBUFFERED": "0"})
    try:
        got = []
        for event in ("{}", "{r}"):
            proc.stdin.write(event + "\n")
            proc.stdin.flush()
            got.append(proc.stdout.readline().strip())
        proc.stdin.close()
        assert proc.wait(timeout=60) == 0
    finally:
        proc.kill()
    assert got == ["UNKNOWN", "TRUE"]

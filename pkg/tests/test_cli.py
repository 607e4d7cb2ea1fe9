import csv
import io
import math
import subprocess
import sys
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import pytest

from sturmcomp.cli import build_parser, main

PROBLEMS = Path(__file__).resolve().parents[1] / "demos" / "problems"
COMMANDS = ["solve", "zeros", "compare", "separation", "picone", "jacobi", "distro", "leighton", "scan"]


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        try:
            code = main([str(a) for a in argv])
        except SystemExit as exc:  # argparse usage errors
            code = exc.code
    return code, out.getvalue(), err.getvalue()


def prob(name):
    return PROBLEMS / name


def csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("command", COMMANDS)
def test_help_names_topic(command, capsys):
    with pytest.raises(SystemExit) as exc:
        main([command, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert f"usage: sturmcomp {command}" in text
    assert "--tol" in text and "--csv" in text


def test_top_level_help_lists_commands():
    text = build_parser().format_help()
    for command in COMMANDS:
        assert command in text
    assert "Exit status" in text


def test_leighton_closed_form(tmp_path):
    code, out, _ = run("leighton", "--k", "2", "--c", "0", "--sweep", "0", "--csv", tmp_path / "r.csv")
    assert code == 0 and "Positive" in out
    header, row = csv_rows(tmp_path / "r.csv")
    rec = dict(zip(header, row))
    assert float(rec["value"]) == pytest.approx(math.pi * (4 - math.pi) / 4, abs=1e-9)
    assert rec["verdict"] == "Positive" and rec["sweep_n"] == ""


def test_leighton_thresholds():
    code, out, _ = run("leighton", "--k", "1.672", "--c", "0.6", "--sweep", "0", "--thresholds")
    assert code == 0 and "1.67209" in out and "1.67569" in out


def test_compare_identical_files(tmp_path):
    h = prob("harmonic.prob")
    code, out, _ = run("compare", h, h, "--sweep", "8", "--csv", tmp_path / "c.csv")
    assert code == 0
    rec = dict(zip(*csv_rows(tmp_path / "c.csv")))
    assert abs(float(rec["value"])) <= 1e-9
    assert rec["verdict"] == "WeakNonpositive" and rec["exceptional"] == "true"


def test_compare_uses_gauge_of_target():
    code, out, _ = run("compare", prob("harmonic.prob"), prob("leighton.prob"), "--sweep", "16")
    assert code == 0 and "StrictlyNegative" in out and "16/16" in out


def test_picone_violation_exit_1():
    code, _, err = run("picone", prob("harmonic.prob"), prob("weak_well.prob"), "--sweep", "0")
    assert code == 1 and "q <= qt" in err and "x = 2" in err


def test_picone_strict():
    code, out, _ = run("picone", prob("harmonic.prob"), prob("stronger.prob"), "--sweep", "8")
    assert code == 0 and "StrictlyNegative" in out


def test_jacobi_bad_alpha_exit_2():
    code, _, err = run("jacobi", prob("jacobi_bad.prob"))
    assert code == 2 and "alpha[1]" in err and "jacobi_bad.prob" in err


def test_jacobi_pair(tmp_path):
    code, out, _ = run("jacobi", prob("jacobi_period4.prob"), prob("jacobi_lower.prob"), "--csv", tmp_path / "j.csv")
    assert code == 0
    rec = dict(zip(*csv_rows(tmp_path / "j.csv")))
    assert rec["value"] == "-1.0" and rec["verdict"] == "StrictlyNegative"


def test_jacobi_single_csv(tmp_path):
    code, _, _ = run("jacobi", prob("jacobi_period4.prob"), "--csv", tmp_path / "u.csv")
    assert code == 0
    assert csv_rows(tmp_path / "u.csv") == [["n", "u"], ["0", "0.0"], ["1", "1.0"], ["2", "0.0"], ["3", "-1.0"]]


def test_distro_tent(tmp_path):
    code, out, _ = run("distro", prob("tent.prob"), prob("tent_extra.prob"), "--sweep", "8", "--csv", tmp_path / "d.csv")
    assert code == 0
    rec = dict(zip(*csv_rows(tmp_path / "d.csv")))
    assert rec["value"] == "-0.0625"


def test_distro_single_reports_jump():
    code, out, _ = run("distro", prob("tent.prob"))
    assert code == 0 and "jump condition at 0.5" in out


def test_solve_csv_schema_and_stability(tmp_path):
    args = ("solve", prob("harmonic.prob"), "--at", "0,pi/2,pi")
    run(*args, "--csv", tmp_path / "a.csv")
    run(*args, "--csv", tmp_path / "b.csv")
    first = (tmp_path / "a.csv").read_bytes()
    assert first == (tmp_path / "b.csv").read_bytes()
    rows = csv_rows(tmp_path / "a.csv")
    assert rows[0] == ["x", "u", "v"] and len(rows) == 4
    assert float(rows[2][1]) == pytest.approx(1.0, abs=1e-9)


def test_zeros_csv(tmp_path):
    code, _, _ = run("zeros", prob("stronger.prob"), "--csv", tmp_path / "z.csv")
    rows = csv_rows(tmp_path / "z.csv")
    assert code == 0 and rows[0] == ["index", "x", "lo", "hi", "min_abs_v"]
    assert float(rows[1][1]) == pytest.approx(math.pi / 2, abs=1e-9)


def test_separation():
    code, out, _ = run("separation", prob("harmonic.prob"), "--theta", "0")
    assert code == 0 and "1.570796327" in out


def test_scan_csv(tmp_path):
    code, out, _ = run("scan", "--k", "1.672", "--c", "0,1.2", "--steps", "7", "--csv", tmp_path / "s.csv")
    rows = csv_rows(tmp_path / "s.csv")
    assert code == 0 and rows[0] == ["c", "value", "err"] and len(rows) >= 8
    assert "best c" in out


def test_csv_to_stdout():
    code, out, _ = run("leighton", "--sweep", "0", "--csv", "-")
    assert code == 0 and "kind,value,err,verdict" in out


def test_missing_file_exit_2(tmp_path):
    code, _, err = run("zeros", tmp_path / "nope.prob")
    assert code == 2 and "nope.prob" in err


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[interval]\na = 0\nb = 1\n", "exactly one"),
        ("[interval]\na = 0\nb = 1\n[coefficients]\nq = -1\n[bogus]\n", "unknown section"),
        ("[interval]\na = 0\nb = 1\n[coefficients]\nw = 1\n", "unknown key"),
        ("[interval]\na = 0\na = 1\n[coefficients]\n", "duplicate key"),
        ("[interval]\na = 1\nb = 0\n[coefficients]\n", "a < b"),
        ("[interval]\na = 0\nb = 1\n[coefficients]\nq = k*x\n", "k"),
        ("[interval]\na = 0\nb = 1\n[coefficients]\nq = (x\n", "coefficients"),
        ("[interval]\na = 0\nb = 1\n[coefficients]\np = -1\n", "positive"),
        ("a = 0\n", "before the first section"),
    ],
)
def test_problem_file_errors_exit_2(tmp_path, text, fragment):
    path = tmp_path / "p.prob"
    path.write_text(text)
    code, _, err = run("zeros", path)
    assert code == 2
    assert fragment in err and "p.prob" in err


def test_not_utf8(tmp_path):
    path = tmp_path / "p.prob"
    path.write_bytes(b"[interval]\na = 0 \xff\n")
    code, _, err = run("zeros", path)
    assert code == 2 and "UTF-8" in err


def test_bad_flag_exit_2():
    code, _, _ = run("leighton", "--tol", "-1")
    assert code == 2


def test_shooting_failure_exit_1(tmp_path):
    path = tmp_path / "short.prob"
    path.write_text("[interval]\na = 0\nb = 3\n[coefficients]\nq = -1\n")
    code, _, err = run("compare", path, path, "--sweep", "0")
    assert code == 1 and "does not vanish" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sturmcomp", "leighton", "--sweep", "0"], capture_output=True, text=True)
    assert proc.returncode == 0 and "Positive" in proc.stdout


@pytest.mark.parametrize(
    "text",
    [
        "[interval]\na = 0\nb = 1\n[potential]\nV = 0\n[gauge]\nF_deriv = 1\n",
        "[jacobi]\nN0 = 0\nN1 = 3\nalpha = 1 1 1\nv = -2 -2\n[interval]\na = 0\nb = 1\n",
    ],
)
def test_meaningless_section_rejected(tmp_path, text):
    path = tmp_path / "p.prob"
    path.write_text(text)
    code, _, err = run("distro" if "potential" in text else "jacobi", path)
    assert code == 2 and "has no meaning" in err


def test_comments_and_params_chain(tmp_path):
    path = tmp_path / "p.prob"
    path.write_text("# header\n[params]\nk = 2  # inline\nm = k^2\n[interval]\na = 0\nb = pi / sqrt(m)\n[coefficients]\nq = -m\n")
    code, out, _ = run("zeros", path)
    assert code == 0 and out.startswith("0 zero(s)")

"""Command line: exit codes, reports, determinism and REPL transcripts."""

from __future__ import annotations

import io
import json
import subprocess
import sys
from pathlib import Path

import pytest
import sympy

from equivframe.cli import Script, SpecError, load, main, parse_spec, repl, run
from equivframe.problems import script_path, spec_path

FROZEN = json.loads((Path(__file__).parent / "golden" / "oracles.json").read_text())


def write(tmp_path: Path, name: str, text: str) -> str:
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- exit codes -------------------------------------------------------------------

def test_run_succeeds(capsys):
    assert main(["run", str(spec_path("diffop")), str(script_path("diffop"))]) == 0
    out = capsys.readouterr().out
    assert "FRAME diffop" in out
    assert "normalize F = 1" in out


def test_failed_command_exits_2(tmp_path, capsys):
    script = write(tmp_path, "bad.script", "recur F\nnormalize K_X = 0\n")
    assert main(["run", str(spec_path("diffop")), script]) == 2
    err = capsys.readouterr().err
    assert "normalize K_X = 0" in err
    assert "FRAME diffop" in err


def test_malformed_spec_exits_3(tmp_path, capsys):
    spec = write(tmp_path, "bad.spec", "[base]\nx u\n[fiber]\nf\n[extended]\nf = f*X_x^2/\n")
    script = write(tmp_path, "empty.script", "")
    assert main(["run", spec, script]) == 3
    assert "parse error" in capsys.readouterr().err


def test_unknown_command_exits_3(tmp_path, capsys):
    script = write(tmp_path, "bad.script", "frobnicate F\n")
    assert main(["run", str(spec_path("diffop")), script]) == 3


def test_missing_script_exits_3(tmp_path):
    assert main(["run", str(spec_path("diffop")), str(tmp_path / "nowhere.script")]) == 3


def test_spec_parser_rejects_unknown_section():
    with pytest.raises(SpecError):
        parse_spec("[base]\nx\n[fiber]\nv\n[extended]\nv = v/X_x\n[extra]\n1\n")


# -- outputs ----------------------------------------------------------------------

def test_empty_script_gives_the_initial_report(tmp_path, capsys):
    script = write(tmp_path, "empty.script", "")
    assert main(["run", str(spec_path("medolaghi")), script]) == 0
    _, fr = load(spec_path("medolaghi"))
    assert capsys.readouterr().out.strip().endswith(fr.report().strip())


def test_out_directory_and_latex(tmp_path, capsys):
    out = tmp_path / "reports"
    assert main(["run", str(spec_path("diffop")), str(script_path("diffop")),
                 "--out", str(out), "--format", "latex"]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["diffop.human.md", "diffop.latex.tex", "diffop.log", "diffop.machine.txt"]
    tex = (out / "diffop.latex.tex").read_text()
    assert "d\\omega^{x} &= " in tex
    assert "\\text{involutive} &= \\text{yes}" in tex and "free_next" not in tex
    assert (out / "diffop.machine.txt").read_text().startswith("FRAME diffop")


def test_run_is_deterministic(tmp_path):
    cmd = [sys.executable, "-m", "equivframe.cli", "run", str(spec_path("diffop")), str(script_path("diffop"))]
    a = subprocess.run(cmd, capture_output=True, text=True, check=True)
    b = subprocess.run(cmd, capture_output=True, text=True, check=True)
    assert a.stdout == b.stdout and a.stdout


# -- REPL ---------------------------------------------------------------------------

MEDOLAGHI_SESSION = """\
help
recur U
normalize U = 0
normalize nonsense = 0
recur U_Y
normalize U_Y = 0
recur U_X
normalize U_X = 0
invariant U_YY
branch u_yy nonzero
normalize U_YY = 1
invariant U_YYY
structeq
quit
"""


def test_repl_transcript_replays(tmp_path):
    _, fr = load(spec_path("medolaghi"))
    out = io.StringIO()
    path = tmp_path / "session.script"
    sess = repl(fr, stdin=io.StringIO(MEDOLAGHI_SESSION), stdout=out, transcript=path)
    text = out.getvalue()
    assert text.startswith("commands:")
    assert "error:" in text and "transcript saved" in text
    recorded = path.read_text().splitlines()
    assert "normalize nonsense = 0" not in recorded and "help" not in recorded
    _, fr2 = load(spec_path("medolaghi"))
    again = run(fr2, Script.parse(path.read_text()))
    assert again.frame.report() == sess.frame.report()


def test_repl_suggest_on_the_divergence_problem():
    _, fr = load(spec_path("divergence"))
    cmds = "suggest 0\nshow normalizations\n"
    out = io.StringIO()
    repl(fr, stdin=io.StringIO(cmds), stdout=out)
    lines = out.getvalue().splitlines()
    assert lines[:2] == ["W ; mu^u_u", "Z ; mu^p_x"]


def test_suggested_parameters_are_invertible():
    # the linearized W and Z act on the suggested forms with nonzero coefficients,
    # once zeta^p_p = zeta^u_u - zeta^x_x is imposed
    _, fr = load(spec_path("divergence"))
    for name, c in fr.suggest(0):
        lin = {k: sympy.sympify(v) for k, v in FROZEN["divergence_linearization"][name.lower()].items()}
        pp = lin.pop("P_p", 0)
        lin["U_u"] = lin.get("U_u", 0) + pp
        lin["X_x"] = lin.get("X_x", 0) - pp
        key = fr.reg.name(fr.reg.group_jet(c.comp, c.index))
        assert sympy.simplify(lin.get(key, 0)) != 0


def test_show_characters_at_involution(point):
    sess = point.session
    fr = sess.state_after("involution")
    out = io.StringIO()
    repl(fr, stdin=io.StringIO("show characters\n"), stdout=out)
    assert out.getvalue().strip() == "(3,1,0)"

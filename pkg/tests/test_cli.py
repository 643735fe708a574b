import io
import json

import pytest

from racp.cli import RunConfig, cmd_step, load_context, main


def run(capsys, *argv):
    code = main(list(argv))
    o = capsys.readouterr()
    return code, o.out, o.err


def test_parse(capsys):
    code, out, _ = run(capsys, "parse", "a . (b + c)")
    assert code == 0 and out.strip() == "a . (b + c)"


def test_parse_error_exit_2(capsys):
    code, _, err = run(capsys, "parse", "a . (")
    assert code == 2 and err


@pytest.mark.parametrize("text, nf", [
    ("(a+b).c", "(a + b) . c"),
    ("a || b", "a | b + delta"),
])
def test_normalize(capsys, text, nf):
    code, out, _ = run(capsys, "normalize", text, "--phase", "rpap")
    assert code == 0
    if nf:
        assert out.splitlines()[0] == nf


def test_normalize_flags_weight_rise(capsys):
    code, out, err = run(capsys, "normalize", "(a.b).c", "--phase", "brpa")
    assert code == 0
    assert out.splitlines()[0] == "a . (b . c)"
    assert "NOT decreased" in out and err


def test_phase_mismatch_exit_4(capsys):
    code, _, _ = run(capsys, "normalize", "a || b", "--phase", "brpa")
    assert code == 4


def test_lts_dot(capsys):
    code, out, _ = run(capsys, "lts", "a.b", "--dot")
    assert code == 0 and out.startswith("digraph")
    assert out.count("shape=") == 4        # three states plus the root marker


def test_lts_json(capsys):
    code, out, _ = run(capsys, "lts", "a + b", "--format", "json")
    assert code == 0 and len(json.loads(out)["states"]) == 3


def test_budget_exit_3(capsys):
    code, _, _ = run(capsys, "lts", "a || b || c || d", "--budget", "5")
    assert code == 3


@pytest.mark.parametrize("kind, a, b, code", [
    ("fr", "a + b", "b + a", 0),
    ("fr", "(a+b).c", "a.c + b.c", 1),
    ("branching", "a . tau", "a", 0),
    ("rooted", "tau . a", "a", 1),
])
def test_bisim_exit_codes(capsys, kind, a, b, code):
    c, out, _ = run(capsys, "bisim", kind, a, b)
    assert c == code
    if code == 1:
        assert out.strip()


def test_run_stuck_exit_5(capsys):
    # a . delta equals delta, so no step is possible and it never terminates
    code, out, _ = run(capsys, "run", "forward", "a . delta")
    assert code == 5 and "a . delta" in out
    assert run(capsys, "run", "reverse", "a . b")[0] == 0


def test_run_roundtrip_case_study(capsys):
    code, out, _ = run(capsys, "run", "roundtrip", "--case-study")
    assert code == 0 and "original restored" in out and "histories: 8" in out


def test_step_repl():
    out = io.StringIO()
    cfg = RunConfig("step", ["a . b"])
    code = cmd_step(cfg, load_context(cfg), out, io.StringIO("0\n0\nx\nq\n"))
    assert code == 0
    text = out.getvalue()
    assert "state: a[1] . b" in text and "state: a[1] . b[2]" in text
    assert "invalid choice" in text


def test_casestudy_json(capsys):
    code, out, _ = run(capsys, "casestudy", "--format", "json")
    data = json.loads(out)
    assert data["forward_states"] == 30
    assert code in (0, 1)


def test_guarded(capsys, tmp_path):
    f = tmp_path / "s.racp"
    f.write_text("X = a . X;\n")
    code, out, _ = run(capsys, "guarded", "--spec", str(f))
    assert code == 0 and out.strip()
    f.write_text("X = X + a;\n")
    code, _, _ = run(capsys, "guarded", "--spec", str(f))
    assert code == 1


def test_recursive_full_mode_needs_depth(capsys, tmp_path):
    f = tmp_path / "s.racp"
    f.write_text("X = a . X;\n")
    assert run(capsys, "lts", "<X>", "--spec", str(f))[0] == 2
    assert run(capsys, "lts", "<X>", "--spec", str(f), "--depth", "3")[0] == 0
    assert run(capsys, "lts", "<X>", "--spec", str(f), "--mode", "abstract")[0] == 0


def test_output_is_deterministic(capsys):
    a = run(capsys, "lts", "a || b", "--format", "json")[1]
    b = run(capsys, "lts", "a || b", "--format", "json")[1]
    assert a == b


def test_axioms_list(capsys):
    code, out, _ = run(capsys, "axioms", "list")
    assert code == 0 and "RA5" in out

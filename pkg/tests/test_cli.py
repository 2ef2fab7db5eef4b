import argparse
import io

import pytest

from src.main import RunConfig, Workbench, build_parser, default_workers, main, parse_gamma
from tests.conftest import corpus_path

SMALL = ["--horizon", "4", "--duration-cap", "2"]


def run(argv, capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(argv)
    captured = capsys.readouterr()
    return exit_info.value.code, captured.out, captured.err


def story(name: str) -> str:
    return str(corpus_path(name))


def test_parse_gamma():
    assert parse_gamma("t1=0, #d1=2") == (("d1", 2), ("t1", 0))
    assert parse_gamma("time2dest.left=3") == (("time2dest.left", 3),)
    for bad in ("t1", "t1=x", "t1=-1", "=2"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_gamma(bad)


def test_default_workers(monkeypatch):
    monkeypatch.setenv("W_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("W_WORKERS", "many")
    assert default_workers() == 1


def test_config_from_arguments():
    args = build_parser().parse_args(["causes", "a.w", "b.w", "broken", "--gamma", "t1=0", "--horizon", "6"])
    config = RunConfig.from_args(args)
    assert [p.name for p in config.paths] == ["a.w", "b.w"]
    assert config.pattern == "broken"
    assert config.bounds.horizon == 6
    assert config.bounds.pinned == (("t1", 0),)


def test_check(capsys):
    code, out, _ = run(["check", story("suzy_first")], capsys)
    assert code == 0
    assert out == ""


def test_check_prints_the_theory(capsys):
    code, out, _ = run(["check", story("engineer"), "--print"], capsys)
    assert code == 0
    assert "mechanism m4 : arrived(dest) <- arrivTime(fork) = I, switch(I) != neutral, neg ab(m4, I)." in out
    assert "#time2fork >= 1." in out


def test_check_determinism(capsys):
    code, out, _ = run(["check", story("suzy_first"), "--deterministic", *SMALL], capsys)
    assert code == 0
    assert out.startswith("deterministic: ")


def test_check_reports_diagnostics(tmp_path, capsys):
    bad = tmp_path / "bad.w"
    bad.write_text("fluents inertial broken.\nactions a1.\nmechanism m0 : broken(I) <- a1(I).\n")
    code, out, _ = run(["check", str(bad)], capsys)
    assert code == 1
    assert f"{bad}:3:" in out
    assert "does not precede the head" in out


def test_syntax_errors_go_to_stderr(tmp_path, capsys):
    bad = tmp_path / "bad.w"
    bad.write_text("fluents inertial broken\n")
    code, out, err = run(["models", str(bad)], capsys)
    assert code == 1
    assert out == ""
    assert str(bad) in err


def test_missing_file(tmp_path, capsys):
    code, _, err = run(["models", str(tmp_path / "missing.w")], capsys)
    assert code == 2
    assert "Cannot read input" in err


def test_models(capsys):
    code, out, _ = run(["models", story("suzy_first"), *SMALL, "--gamma", "d1=1,d2=2,t1=0,t2=0"], capsys)
    assert code == 0
    assert out.startswith("% interpretation d1=1,d2=2,t1=0,t2=0\nAnswer set 1:\n")
    assert "\nbroken(1)\n" in out


def test_models_with_the_ground_program(capsys):
    argv = ["models", story("suzy_first"), *SMALL, "--gamma", "d1=1,d2=2,t1=0,t2=0", "--dump-ground"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    assert out.count("do(a1,0).  % fact\n") == 1
    assert out.index("% m0(a1)@1\n") < out.index("Answer set 1:\n")


def test_ground(capsys):
    code, out, _ = run(["ground", story("suzy_first"), *SMALL, "--gamma", "d1=1,d2=2,t1=0,t2=0"], capsys)
    assert code == 0
    assert "do(a1,0).  % fact\n" in out
    assert "% m0(a1)@1\n" in out
    assert "% axiom inertia\n" in out


def test_pinned_causes_show_chains(capsys):
    argv = ["causes", story("suzy_first"), "broken", *SMALL, "--gamma", "d1=1,d2=2,t1=0,t2=0"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    assert "  {do(a1,t1)}\n" in out
    assert "under d1=1,d2=2,t1=0,t2=0: change broken(1)\n" in out
    assert "  cause {do(a1,0)} from 0: do(a1,0), m0(a1)@1, broken(1)\n" in out


def test_causes_count_the_intersected_interpretations(capsys):
    code, out, _ = run(["causes", story("suzy_first"), "broken", *SMALL], capsys)
    assert code == 0
    assert out == (
        "causes of broken within horizon=4 duration_cap=2 (41 interpretations: 39 analysed, 2 skipped)\n"
        "change #1 (shared by the 39 interpretations with the change):\n"
        "  {do(a1,t1)}\n"
    )


def test_unknown_pinned_constant(capsys):
    code, _, err = run(["causes", story("suzy_first"), "broken", *SMALL, "--gamma", "t9=1"], capsys)
    assert code == 1
    assert "t9" in err


def test_pattern_without_changes(capsys):
    code, out, err = run(["causes", story("suzy_first"), "arrived", *SMALL], capsys)
    assert code == 3
    assert "(41 interpretations: 0 analysed, 41 skipped)" in out
    assert "matches no change" in err


def test_explain_an_early_break(capsys):
    code, out, _ = run(["explain", story("suzy_obs"), "obs(broken,true,2)", *SMALL], capsys)
    assert code == 0
    assert out == (
        "explanations of obs(broken, true, 2) within horizon=4 duration_cap=2\n"
        "under {}: do(a1,0)\n"
        "  support {a1(0) :+.}\n"
        "  change broken(2), causes {do(a1,0)}\n"
    )


def test_predicted_observation(capsys):
    code, out, _ = run(["explain", story("suzy_obs"), "obs(broken, false, 3)", *SMALL], capsys)
    assert code == 0
    assert out.startswith("nothing to explain: ")


def test_resource_cap(monkeypatch, capsys):
    monkeypatch.setenv("W_RESOURCE_CAP", "10")
    code, _, err = run(["models", story("suzy_obs"), *SMALL], capsys)
    assert code == 4
    assert "above the cap of 10" in err


def test_workbench_writes_to_its_stream():
    args = build_parser().parse_args(["check", story("suzy_first"), "--print"])
    out = io.StringIO()
    assert Workbench(RunConfig.from_args(args), out=out).run() == 0
    assert out.getvalue().startswith("sorts group = {throw, aim, order}.\nsorts person = {suzy, billy}.\n")

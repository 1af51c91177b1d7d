import json
import math

import pytest

from livsiclab.cli import build_parser, parse_override, run, UsageError


def summary(out, name):
    return json.loads((out / f"{name}_summary.json").read_text())


def test_help_lists_everything(capsys):
    assert run(["--help"]) == 0
    text = capsys.readouterr().out
    for sub in ("experiment", "obstruction", "reconstruct", "tower", "hofbauer", "lyapunov"):
        assert sub in text
    assert run(["obstruction", "--help"]) == 0
    text = capsys.readouterr().out
    for flag in ("--map", "--a", "--max-period", "--expect", "--out", "--seed"):
        assert flag in text


def test_lyapunov_doubling(tmp_path):
    assert run(["lyapunov", "--map", "doubling", "--iters", "100000", "--out", str(tmp_path)]) == 0
    s = summary(tmp_path, "lyapunov")
    assert s["values"]["value"] == pytest.approx(0.6931, abs=1e-3)
    assert set(s) >= {"verdicts", "timings"}
    assert (tmp_path / "lyapunov.csv").read_text().startswith("map,iters,seed,lyapunov\n")


def test_lyapunov_expect_failure_exit_code(tmp_path):
    rc = run(["lyapunov", "--map", "doubling", "--iters", "20000", "--expect", "1.0", "--out", str(tmp_path)])
    assert rc == 1


def test_obstruction_chebyshev(tmp_path):
    assert run(["obstruction", "--map", "quadratic", "--a", "2", "--max-period", "8", "--out", str(tmp_path)]) == 0
    assert summary(tmp_path, "obstruction")["values"]["maxResidual"] < 1e-6
    rc = run(["obstruction", "--map", "quadratic", "--a", "1.9", "--max-period", "4",
              "--expect", "coboundary-consistent", "--out", str(tmp_path)])
    assert rc == 1


def test_experiment_mp_scaling(tmp_path):
    assert run(["experiment", "mp_scaling", "--config", "mp_p1.json", "--out", str(tmp_path)]) == 0
    assert summary(tmp_path, "mp_scaling")["values"]["exponent"] == pytest.approx(-2.0, rel=0.1)
    assert (tmp_path / "mp_scaling.csv").exists()


def test_overrides_last_wins(tmp_path):
    rc = run(["experiment", "mp_scaling", "--config", "mp_p1.json", "--set", "p=2.0", "--set", "p=0.5",
              "--set", "alphas=[0.5, 0.2]", "--out", str(tmp_path)])
    assert rc == 0
    assert summary(tmp_path, "mp_scaling")["values"]["exponent"] == pytest.approx(-3.0, rel=0.1)


def test_config_errors_all_reported(tmp_path, capsys):
    rc = run(["experiment", "mp_scaling", "--config", "mp_p1.json", "--set", "depth=5", "--set", "bogus=1",
              "--out", str(tmp_path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "bogus" in err and "depth" in err


@pytest.mark.parametrize("argv", [["frobnicate"], ["experiment", "mp_scaling", "--set", "nokey"],
                                  ["experiment", "mp_scaling", "--config", "missing.json"],
                                  ["tower", "--base", "1,0"], ["lyapunov", "--iters", "10"]])
def test_usage_errors_exit_2(argv, tmp_path):
    assert run(argv + ["--out", str(tmp_path)]) == 2


def test_parse_override():
    assert parse_override("a=1.5") == ("a", 1.5)
    assert parse_override("name=abc") == ("name", "abc")
    with pytest.raises(UsageError):
        parse_override("=3")


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("LIVSIC_OUT", str(tmp_path / "env"))
    assert run(["lyapunov", "--iters", "10000"]) == 0
    assert (tmp_path / "env" / "lyapunov_summary.json").exists()
    # an explicit --out wins over the environment
    assert run(["lyapunov", "--iters", "10000", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "lyapunov.csv").exists()


def test_tower_hofbauer_reconstruct(tmp_path):
    assert run(["tower", "--map", "doubling", "--base", "0.5,1", "--max-return", "40", "--out", str(tmp_path)]) == 0
    assert summary(tmp_path, "tower")["values"]["kac_sum"] == pytest.approx(2.0)
    assert run(["hofbauer", "--map", "quadratic", "--a", "1.7", "--depth", "16", "--steps", "0",
                "--expect-levels", "17", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "hofbauer_edges.txt").exists()
    assert run(["reconstruct", "--map", "doubling", "--cocycle", "sin", "--grid", "32", "--out", str(tmp_path)]) == 0
    assert summary(tmp_path, "reconstruct")["values"]["sup_error"] < 1e-6


def test_identical_runs_give_identical_csv(tmp_path):
    for d in ("a", "b"):
        assert run(["obstruction", "--map", "quadratic", "--a", "1.8", "--max-period", "5",
                    "--iters", "100000", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "obstruction.csv").read_bytes() == (tmp_path / "b" / "obstruction.csv").read_bytes()

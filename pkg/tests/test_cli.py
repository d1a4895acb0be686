import os

import pytest

from fa_lab import cli
from fa_lab.experiments import read_metrics


def run_cli(*argv, env_out=None, monkeypatch=None):
    return cli.main(list(argv))


def test_list_exits_zero(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("fig2a", "fig3b", "thm44", "thm31bound"):
        assert name in out


def test_reproduce_unknown_scenario_exits_two(tmp_path, capsys):
    assert cli.main(["reproduce", "fig99", "--out", str(tmp_path)]) == 2


def test_reproduce_pass_prints_lines_and_writes(tmp_path, capsys):
    code = cli.main(["reproduce", "thm42", "--out", str(tmp_path), "--jobs", "2"])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS thm42/FA " in out and "PASS thm42/FA_STAR " in out
    assert (tmp_path / "thm42" / "metrics.csv").exists()
    assert (tmp_path / "thm42" / "summary.json").exists()
    assert (tmp_path / "thm42" / "manifest.json").exists()


def test_reproduce_deterministic_metrics(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["reproduce", "thm42", "--out", str(a)]) == 0
    assert cli.main(["reproduce", "thm42", "--out", str(b)]) == 0
    assert (a / "thm42" / "metrics.csv").read_bytes() == \
        (b / "thm42" / "metrics.csv").read_bytes()


def test_out_defaults_to_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("FA_LAB_OUT", str(tmp_path / "envout"))
    assert cli.main(["reproduce", "thm42"]) == 0
    assert (tmp_path / "envout" / "thm42" / "metrics.csv").exists()


def test_verify_suite_exits_zero(capsys, tmp_path):
    assert cli.main(["verify", "facts", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 2 and "FAIL" not in out


def test_verify_rejects_unknown_suite(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "nonsense", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_run_missing_config_exits_two(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]) == 2


def test_run_adhoc_config(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "# tiny deterministic run\n"
        "n = 12\nm = 12\nr = 3\nspectrum = flat(3)\n"
        "rule = gd\neta = 0.5\nsteps = 300\nseed = 7\n")
    code = cli.main(["run", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    rows = read_metrics(tmp_path / "adhoc" / "metrics.csv")
    assert rows[0]["seed"] == 7
    assert rows[-1]["error"] < rows[0]["error"]


def test_run_set_overrides_config(tmp_path, capsys):
    cfg = tmp_path / "base.cfg"
    cfg.write_text("n = 12\nm = 12\nr = 3\nspectrum = flat(3)\n"
                   "rule = gd\neta = 0.5\nsteps = 300\n")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path),
                     "--set", "seed=9"]) == 0
    rows = read_metrics(tmp_path / "adhoc" / "metrics.csv")
    assert rows[0]["seed"] == 9


def test_run_bad_config_key_exits_two(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("frobnicate = 3\n")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path)]) == 2


def test_run_divergent_eta_exits_one_with_partial_metrics(tmp_path, capsys):
    cfg = tmp_path / "boom.cfg"
    cfg.write_text("n = 12\nm = 12\nr = 3\nspectrum = flat(3)\n"
                   "rule = gd\neta = 50.0\nsteps = 5000\nstd = 1.0\n")
    code = cli.main(["run", str(cfg), "--out", str(tmp_path)])
    assert code == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    rows = read_metrics(tmp_path / "adhoc" / "metrics.csv")
    assert len(rows) >= 1  # the trajectory up to the overflow is retained


def test_sweep_exit_reflects_grid(tmp_path, capsys):
    code = cli.main(["sweep", "thm42", "--out", str(tmp_path),
                     "--set", "steps=50,4000"])
    out = capsys.readouterr().out
    assert code == 1  # 50 steps cannot reach 1e-4, 4000 can
    assert "PASS" in out and "FAIL" in out


def test_sweep_bad_set_syntax_exits_two(tmp_path, capsys):
    assert cli.main(["sweep", "thm42", "--out", str(tmp_path),
                     "--set", "oops"]) == 2

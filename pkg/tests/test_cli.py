import subprocess
import sys

import pytest

from rpdecay import cli
from rpdecay.errors import ConfigError

CONFIG = """
[run]
checks = convergence

[background]
kind = minkowski

[grid]
u1 = 10
v0 = 15
v1 = 45
h = 0.1

[data]
family = gaussian
center = 25
width = 2

[params]
ell = 2

[thresholds]
order_lo = 1.8
"""


def test_hardy_c1_const(out_env, capsys):
    assert cli.main(["hardy", "--kind", "C1", "--fn", "const", "--a", "1", "--b", "5"]) == 0
    out = capsys.readouterr().out
    assert "ratio 0.25 " in out and "C_doc=4" in out
    assert (out_env / "hardy_C1.csv").exists()


def test_hardy_family_sample(out_env, capsys):
    assert cli.main(["hardy", "--kind", "C4", "--fn", "all", "--sample", "4", "--seed", "1"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) <= 4


def test_convergence_minkowski(out_env, capsys):
    assert cli.main(["convergence", "--preset", "minkowski", "--ell", "2"]) == 0
    line = capsys.readouterr().out
    order = float(line.split("order ")[1].split()[0])
    assert order == pytest.approx(2.0, abs=0.2)


def test_preset_minkowski_free(out_env, capsys):
    assert cli.main(["run", "--preset", "minkowski-free"]) == 0
    summary = (out_env / "summary.txt").read_text(encoding="utf-8")
    assert summary.strip().splitlines()[-1] == "overall PASS"


def test_config_run(tmp_path, out_env):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(CONFIG, encoding="utf-8")
    assert cli.main(["run", "--config", str(cfg)]) == 0
    assert "overall PASS" in (out_env / "summary.txt").read_text(encoding="utf-8")


def test_parse_config():
    cfg = cli.parse_config(CONFIG)
    assert cfg.background["kind"] == "minkowski"
    assert cfg.thresholds == {"order_lo": 1.8}
    assert cfg.checks == ("convergence",)
    run = cli.build_run(cfg)
    assert run.ell == 2 and run.grid.v0 == 15.0


@pytest.mark.parametrize("text", ["", "\n# nothing\n", "[bogus]\nx = 1\n", "[thresholds]\nnot_a_key = 1\n"])
def test_bad_config(text):
    with pytest.raises(ConfigError):
        cli.parse_config(text)


def test_exit_code_config_error(tmp_path, out_env, capsys):
    empty = tmp_path / "empty.ini"
    empty.write_text("", encoding="utf-8")
    assert cli.main(["run", "--config", str(empty)]) == 2
    assert "usage" in capsys.readouterr().err


def test_exit_code_no_command(capsys):
    assert cli.main([]) == 2


def test_exit_code_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_exit_code_param_error(out_env):
    assert cli.main(["hardy", "--kind", "C1", "--fn", "const", "--a", "5", "--b", "1"]) == 2


def test_exit_code_numerical_failure(out_env):
    # three slices cannot feed an eight-point fit
    assert cli.main(["decay", "--preset", "minkowski", "--tau", "20", "25", "30"]) == 3


def test_out_dir_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("RPDECAY_OUT", str(tmp_path / "env"))
    assert cli.out_dir(str(tmp_path / "flag")) == tmp_path / "env"
    monkeypatch.delenv("RPDECAY_OUT")
    assert cli.out_dir(str(tmp_path / "flag"), "cfg") == tmp_path / "flag"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rpdecay", "--help"], capture_output=True, text=True, timeout=120)
    assert res.returncode == 0
    for name in cli.SUBCOMMANDS:
        assert name in res.stdout

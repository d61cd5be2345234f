import json
import os

import pytest

import main

SMOKE = os.path.join(os.path.dirname(__file__), "..", "..", "configs", "smoke.toml")

ROUGH_PLUGIN = '''
from oscdom.builtin.hilbert import HilbertKernel
from oscdom.params import FloatParam


class RoughKernel(HilbertKernel):
    """1/(x - y) declared with a modulus ten times too small"""
    label = "rough"
    params = [FloatParam("lam", "Lipschitz constant", value=0.2, min=0.0)]
'''


def test_run_writes_a_run_directory(tmp_path, capsys):
    out = tmp_path / "run"
    assert main.main(["-q", "run", "stats-oracles", "--config", SMOKE, "--out", str(out)]) == main.EXIT_OK
    assert (out / "stats-oracles" / "summary.json").exists()
    assert (out / "stats-oracles" / "oracles.csv").exists()
    assert not list(out.glob("**/*.part"))
    assert "stats-oracles" in capsys.readouterr().out

    assert main.main(["report", str(out)]) == main.EXIT_OK
    assert "PASS" in capsys.readouterr().out


def test_runs_are_reproducible(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d, workers in zip(dirs, ("1", "3")):
        argv = ["-q", "run", "prop-cr", "--config", SMOKE, "--out", str(d), "--workers", workers]
        assert main.main(argv) == main.EXIT_OK
    names = sorted(p.name for p in (dirs[0] / "prop-cr").iterdir())
    assert names == sorted(p.name for p in (dirs[1] / "prop-cr").iterdir())
    for name in names:
        assert (dirs[0] / "prop-cr" / name).read_bytes() == (dirs[1] / "prop-cr" / name).read_bytes()


@pytest.mark.parametrize("flags", [["--n", "3"], ["--grid", "1000"], ["--lambda", "2.0"], ["--workers", "0"]])
def test_bad_flags_exit_with_a_config_error(tmp_path, flags):
    argv = ["-q", "run", "stats-oracles", "--config", SMOKE, "--out", str(tmp_path)] + flags
    assert main.main(argv) == main.EXIT_CONFIG
    assert not (tmp_path / "stats-oracles").exists()


def test_missing_config_file(tmp_path):
    assert main.main(["-q", "run", "prop-cr", "--config", str(tmp_path / "absent.toml")]) == main.EXIT_CONFIG


def test_unknown_suite_is_rejected_by_the_parser():
    with pytest.raises(SystemExit) as exc:
        main.main(["run", "nope"])
    assert exc.value.code == 2


def test_failed_check_exits_with_one(tmp_path, capsys):
    plugins = tmp_path / "plugins"
    plugins.mkdir()
    (plugins / "rough.py").write_text(ROUGH_PLUGIN)
    out = tmp_path / "run"
    config = tmp_path / "audit.toml"
    config.write_text(
        f'audit_samples = 2000\nseed = 7\nout = "{out.as_posix()}"\nplugin_dir = "{plugins.as_posix()}"\n'
    )
    assert main.main(["-q", "run", "kernel-audit", "--config", str(config)]) == main.EXIT_FAILED
    summary = json.loads((out / "kernel-audit" / "summary.json").read_text())
    failed = [c["name"] for c in summary["checks"] if not c["passed"]]
    assert failed == ["plugin:rough_RoughKernel: smoothness holds for the declared modulus"]
    assert "FAIL" in capsys.readouterr().out

    assert main.main(["report", str(out)]) == main.EXIT_FAILED


def test_report_of_an_empty_directory(tmp_path, capsys):
    assert main.main(["report", str(tmp_path)]) == main.EXIT_CONFIG
    assert "no suite summaries found" in capsys.readouterr().out


def test_list(capsys):
    assert main.main(["list"]) == main.EXIT_OK
    text = capsys.readouterr().out
    assert "hilbert" in text
    assert "plugin:demo_TemperedHilbertKernel (plugin)" in text

    assert main.main(["list", "--json"]) == main.EXIT_OK
    info = json.loads(capsys.readouterr().out)
    assert {"kernels", "generators", "diagonals"} <= set(info)


def test_sobolev_rejects_the_line(tmp_path, caplog):
    out = tmp_path / "run"
    argv = ["-q", "run", "sobolev", "--config", SMOKE, "--out", str(out), "--n", "1"]
    assert main.main(argv) == main.EXIT_CONFIG
    assert "n >= 2" in caplog.text
    assert not (out / "sobolev").exists()

    assert main.main(["-q", "run", "all", "--config", SMOKE, "--out", str(out), "--n", "1"]) == main.EXIT_CONFIG
    assert not out.exists() or not any(out.iterdir())

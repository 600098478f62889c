import json

import pytest
from click.testing import CliRunner

from dworktheta import __version__
from dworktheta.cache import CACHE_NAME
from dworktheta.cli import main
from dworktheta.config import CONFIG_NAME


@pytest.fixture
def runner():
    return CliRunner()


def _report(path):
    return json.loads(path.read_text())


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


@pytest.mark.parametrize(
    "args",
    [
        ["verify", "theta", "--g", "2", "--p", "13", "--no-cache"],
        ["verify", "nosuch"],
        ["verify", "prop43", "--mode", "generic-u", "--no-cache"],
        ["verify", "theta", "--spec", "I=0,1,2", "--no-cache"],
        ["verify", "lemma42", "--k", "many"],
        ["dump", "basis:Z", "--no-cache"],
    ],
)
def test_usage_errors_exit_64(runner, args):
    assert runner.invoke(main, args).exit_code == 64


def test_verify_lemma42_genus_three(runner, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["verify", "lemma42", "--g", "3", "--p", "13", "--k", "2",
                                  "--no-cache", "--out", str(out)])
    assert result.exit_code == 0
    report = _report(out)
    assert report["config"]["g"] == 3
    assert report["suites"]["lemma42"][0]["evidence"]["e0"] == 6
    assert report["summary"] == {"pass": 3, "fail": 0, "unknown": 0, "exit_code": 0}


def test_config_file_sits_under_flags(runner, isolated_dirs):
    config_dir = isolated_dirs / "config"
    config_dir.mkdir()
    (config_dir / CONFIG_NAME).write_text(json.dumps({"g": 3, "p": 13, "k": 2}))
    out = isolated_dirs / "report.json"

    assert runner.invoke(main, ["verify", "lemma42", "--no-cache", "--out", str(out)]).exit_code == 0
    assert _report(out)["suites"]["lemma42"][0]["evidence"]["e0"] == 6

    args = ["verify", "lemma42", "--g", "2", "--p", "17", "--no-cache", "--out", str(out)]
    assert runner.invoke(main, args).exit_code == 0
    report = _report(out)
    assert report["suites"]["lemma42"][0]["evidence"]["e0"] == 28
    assert report["context"]["k"] == 2


def test_environment_sits_under_flags(runner, tmp_path, monkeypatch):
    monkeypatch.setenv("DWORKTHETA_G", "3")
    monkeypatch.setenv("DWORKTHETA_P", "13")
    monkeypatch.setenv("DWORKTHETA_K", "2")
    out = tmp_path / "report.json"
    assert runner.invoke(main, ["verify", "lemma42", "--no-cache", "--out", str(out)]).exit_code == 0
    assert _report(out)["config"]["p"] == 13


def test_dump_basis_A(runner, tmp_path):
    out = tmp_path / "basis.json"
    result = runner.invoke(main, ["dump", "basis:A", "--k", "2", "--window", "120", "--mode", "generic-u",
                                  "--no-cache", "--out", str(out)])
    assert result.exit_code == 0
    body = _report(out)
    assert body["partition"] == [2, 1, 0]
    assert body["basis"][0]["coeffs"] == [[0, "1"]]


def test_curve_series_is_cached_by_default(runner, isolated_dirs):
    out = isolated_dirs / "report.json"
    args = ["verify", "curve-identities", "--mode", "generic-u", "--k", "2", "--window", "80", "--out", str(out)]
    assert runner.invoke(main, args).exit_code == 0
    assert (isolated_dirs / "cache" / CACHE_NAME).exists()
    assert runner.invoke(main, args).exit_code == 0

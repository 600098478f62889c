import json
import logging

import pytest

from dworktheta import config
from dworktheta.errors import ContextError


def _write(path, body):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(body if isinstance(body, str) else json.dumps(body))
    return path


def test_defaults_without_a_file(tmp_path):
    settings = config.resolve({}, path=tmp_path / "missing.json")
    assert settings == config.DEFAULTS


def test_file_then_overrides(tmp_path):
    path = _write(tmp_path / "config.json", {"g": 3, "p": 13, "k": 4})
    settings = config.resolve({"k": 2, "p": None}, path=path)
    assert (settings["g"], settings["p"], settings["k"]) == (3, 13, 2)


def test_config_dir_honours_environment(isolated_dirs):
    assert config.config_dir() == isolated_dirs / "config"
    _write(isolated_dirs / "config" / config.CONFIG_NAME, {"jobs": 3})
    assert config.resolve({})["jobs"] == 3


def test_unknown_keys_are_dropped_with_a_warning(tmp_path, caplog):
    path = _write(tmp_path / "config.json", {"g": 3, "colour": "blue"})
    with caplog.at_level(logging.WARNING, logger="dworktheta.config"):
        data = config.load_file(path)
    assert data == {"g": 3}
    assert "colour" in caplog.text


def test_malformed_file_is_ignored(tmp_path):
    assert config.load_file(_write(tmp_path / "config.json", "{not json")) == {}
    assert config.load_file(_write(tmp_path / "list.json", [1, 2])) == {}


def test_string_values_from_the_environment_are_coerced(tmp_path):
    settings = config.resolve({"p": "13", "orbit": ["1", "2"]}, path=tmp_path / "none.json")
    assert settings["p"] == 13
    assert settings["orbit"] == [1, 2]


@pytest.mark.parametrize("overrides", [{"k": "six"}, {"mode": "fast"}, {"jobs": 0}])
def test_invalid_settings(tmp_path, overrides):
    with pytest.raises(ContextError):
        config.resolve(overrides, path=tmp_path / "none.json")

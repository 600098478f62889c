import pytest

from dworktheta.curve import make_curve
from dworktheta.padic import make_context

ENV_VARS = ("G", "P", "K", "WINDOW", "M", "MODE", "JOBS")


@pytest.fixture(autouse=True)
def isolated_dirs(tmp_path, monkeypatch):
    """Keep config and cache lookups away from the real home directory."""
    monkeypatch.setenv("DWORKTHETA_CONFIG_DIR", str(tmp_path / "config"))
    monkeypatch.setenv("DWORKTHETA_CACHE_DIR", str(tmp_path / "cache"))
    for name in ENV_VARS:
        monkeypatch.delenv(f"DWORKTHETA_{name}", raising=False)
    return tmp_path


@pytest.fixture
def ctx():
    return make_context(2, 17, 3)


@pytest.fixture
def curve(ctx):
    return make_curve(ctx, 160)

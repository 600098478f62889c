"""User configuration: ~/.config/dworktheta/config.json under flags and env."""

import json
import logging
import os
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ContextError

logger = logging.getLogger(__name__)

CONFIG_DIR = Path.home() / ".config" / "dworktheta"
CONFIG_NAME = "config.json"

MODES = ("generic-u", "exact-eps")

DEFAULTS: dict[str, Any] = {
    "g": 2,
    "p": 17,
    "k": 6,
    "window": None,  # max(400, 4mg)
    "M": None,  # ⌈k p²/(p-1)⌉
    "mode": "exact-eps",
    "jobs": 1,
    "orbit": None,  # eigenline residues; None means 1..p-1
}

_INT_KEYS = ("g", "p", "k", "window", "M", "jobs")


def config_dir() -> Path:
    env = os.environ.get("DWORKTHETA_CONFIG_DIR")
    return Path(env) if env else CONFIG_DIR


def load_file(path: Optional[Path] = None) -> dict[str, Any]:
    """Known keys from the config file, or {} when missing or unreadable."""
    path = path or config_dir() / CONFIG_NAME
    if not path.exists():
        return {}
    try:
        with open(path) as f:
            data = json.load(f)
    except (json.JSONDecodeError, OSError) as e:
        logger.warning(f"ignoring unreadable config {path}: {e}")
        return {}
    if not isinstance(data, dict):
        logger.warning(f"ignoring config {path}: expected a JSON object")
        return {}
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        logger.warning(f"config {path}: unknown keys {unknown}")
    return {k: v for k, v in data.items() if k in DEFAULTS}


def resolve(overrides: Mapping[str, Any], *, path: Optional[Path] = None) -> dict[str, Any]:
    """Defaults, then the config file, then non-None overrides (flags or env)."""
    settings = dict(DEFAULTS)
    settings.update(load_file(path))
    settings.update({k: v for k, v in overrides.items() if v is not None})
    for key in _INT_KEYS:
        value = settings[key]
        if value is None:
            continue
        try:
            settings[key] = int(value)
        except (TypeError, ValueError):
            raise ContextError(f"{key} must be an integer, got {value!r}") from None
    if settings["mode"] not in MODES:
        raise ContextError(f"mode must be one of {', '.join(MODES)}, got {settings['mode']!r}")
    if settings["jobs"] < 1:
        raise ContextError(f"jobs must be >= 1, got {settings['jobs']}")
    if settings["orbit"] is not None:
        settings["orbit"] = [int(i) for i in settings["orbit"]]
    return settings

"""On-disk cache of the curve series u(T), keyed by (g, N)."""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Optional

from .curve import CurveCtx, build_u, make_curve
from .padic import PrimeCtx

logger = logging.getLogger(__name__)

CACHE_DIR = Path.home() / ".cache" / "dworktheta"
CACHE_NAME = "curve_cache.json"


def cache_dir() -> Path:
    env = os.environ.get("DWORKTHETA_CACHE_DIR")
    return Path(env) if env else CACHE_DIR


def _stable_hash(s: str) -> str:
    """Deterministic hash for cache keys."""
    return hashlib.md5(s.encode()).hexdigest()[:16]


def cache_key(g: int, N: int) -> str:
    return _stable_hash(f"{g}:{N}")


def load_cache(directory: Optional[Path] = None) -> dict:
    """Load cached curve series.

    Format: {key -> {g, N, u}} with u the integer t-coefficients of u.
    """
    directory = directory or cache_dir()
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CACHE_NAME
    if path.exists():
        try:
            with open(path) as f:
                data = json.load(f)
            if isinstance(data, dict):
                return data
        except (json.JSONDecodeError, IOError):
            logger.warning(f"curve cache {path} is malformed; rebuilding")
    return {}


def save_cache(cache: dict, directory: Optional[Path] = None):
    """Save curve series to cache."""
    directory = directory or cache_dir()
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / CACHE_NAME, "w") as f:
        json.dump(cache, f)


def _u_coefficients(g: int, N: int) -> list[int]:
    return list(reversed(build_u(g, N).coeffs))


def cached_curve(prime: PrimeCtx, N: int, *, directory: Optional[Path] = None) -> CurveCtx:
    """make_curve with u(T) read from (or written to) the cache."""
    cache = load_cache(directory)
    key = cache_key(prime.g, N)
    entry = cache.get(key)
    if isinstance(entry, dict) and entry.get("g") == prime.g and entry.get("N") == N:
        try:
            coeffs = [int(c) for c in entry["u"]]
        except (KeyError, TypeError, ValueError):
            coeffs = []
        if len(coeffs) == N:
            logger.debug(f"curve cache hit g={prime.g} N={N}")
            return make_curve(prime, N, u_coeffs=coeffs)
    logger.debug(f"curve cache miss g={prime.g} N={N}")
    coeffs = _u_coefficients(prime.g, N)
    # integers are stored as strings; they outgrow JSON readers' number types
    cache[key] = {"g": prime.g, "N": N, "u": [str(c) for c in coeffs]}
    save_cache(cache, directory)
    return make_curve(prime, N, u_coeffs=coeffs)

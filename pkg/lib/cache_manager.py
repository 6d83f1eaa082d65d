"""Process-wide caches (TTLCache settings & key builders)."""

from __future__ import annotations

import os
from cachetools import TTLCache

# Reference-solution cache settings
REFERENCE_CACHE_VERSION = int(os.getenv("STARFRAME_REFERENCE_CACHE_VERSION", "1"))
REFERENCE_CACHE_MAXSIZE = int(os.getenv("STARFRAME_REFERENCE_CACHE_MAXSIZE", "8"))
REFERENCE_CACHE_TTL_S = int(os.getenv("STARFRAME_REFERENCE_CACHE_TTL_S", "3600"))

_reference_cache: TTLCache | None = None


def get_reference_cache() -> TTLCache:
    global _reference_cache
    if _reference_cache is None:
        _reference_cache = TTLCache(
            maxsize=REFERENCE_CACHE_MAXSIZE, ttl=REFERENCE_CACHE_TTL_S
        )
    return _reference_cache


def clear_reference_cache() -> None:
    if _reference_cache is not None:
        _reference_cache.clear()


def build_reference_cache_key(
    omega0: float, beta: float, omega: float, t_total: float, n_grid: int, substeps: int
) -> str:
    return (
        f"ref:{REFERENCE_CACHE_VERSION}:{omega0!r}:{beta!r}:{omega!r}:"
        f"{t_total!r}:{n_grid}:{substeps}"
    )

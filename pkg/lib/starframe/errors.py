"""
starframe の例外階層。ライブラリは raise するだけで、終了コードへの変換は app.py が担当する。
"""

from __future__ import annotations


class StarframeError(Exception):
    """Base error carrying optional diagnostic meta (node index, condition number, ...)."""

    def __init__(self, message: str, meta: dict | None = None):
        super().__init__(message)
        self.meta = meta or {}


class ConfigurationError(StarframeError, ValueError):
    """Invalid grid, parameters or config file contents."""


class ArgumentError(StarframeError, ValueError):
    """Invalid argument to an algebra operation (negative power, bad rho, ...)."""


class DimensionError(StarframeError):
    """Operands live on different grids or have different block dimensions."""


class StepTooLargeError(StarframeError):
    """(I - (h/2) F_ii) is singular: the grid is too coarse for this kernel."""


class SingularityError(StarframeError):
    """A per-node matrix that must be inverted is (numerically) singular."""


class MalformedGreenError(StarframeError):
    """A Green's function whose delta part is not the identity."""


class UndefinedMetricError(StarframeError):
    """The error functional hit a zero-norm matrix."""

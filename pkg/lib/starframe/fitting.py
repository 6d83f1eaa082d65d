"""λ-scaling order estimates shared by the matrix and function-space acceleration checks."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from lib.starframe.errors import ArgumentError

DEFAULT_LAMBDAS: tuple[float, ...] = (0.5, 0.25, 0.125, 0.0625)
# λ·‖M‖ at the largest λ picked by contraction_lambdas
CONTRACTION_REACH = 0.25


def fit_order(lambdas: Sequence[float], errors: Sequence[float]) -> float:
    """
    Fit log(err) ≈ p log(λ) + a + b λ by least squares and return p.

    The b λ term absorbs the leading λ-dependence of the remainder's prefactor,
    e.g. the (I - λM)^{-1} factor of a truncated Neumann series. Three points
    make the fit an exact interpolation; the defaults use four so the residual
    is an actual least-squares residual.
    """
    lam = np.asarray(lambdas, dtype=float)
    err = np.asarray(errors, dtype=float)
    if lam.shape != err.shape or lam.size < 3:
        raise ArgumentError("need at least three (lambda, error) pairs")
    if np.any(lam <= 0) or np.any(err <= 0) or not np.all(np.isfinite(err)):
        raise ArgumentError("lambdas and errors must be positive and finite")
    design = np.column_stack([np.log(lam), np.ones_like(lam), lam])
    coef, *_ = np.linalg.lstsq(design, np.log(err), rcond=None)
    return float(coef[0])


def contraction_lambdas(
    *mats: np.ndarray, reach: float = CONTRACTION_REACH, points: int = 4
) -> tuple[float, ...]:
    """
    Halving λ ladder whose top rung keeps every λ·M within spectral norm reach.

    A sum of contractions can have non-contractive parts; scaling by the
    largest part norm puts every rung in the asymptotic regime of the remainder.
    """
    if points < 3:
        raise ArgumentError(f"points must be >= 3, got {points}")
    norm = max((float(np.linalg.norm(m, 2)) for m in mats), default=0.0)
    top = 0.5 if norm == 0.0 else min(0.5, reach / norm)
    return tuple(top * 0.5**k for k in range(points))

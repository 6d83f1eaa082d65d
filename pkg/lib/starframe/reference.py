"""
参照解 (RK4 + Richardson 誤差推定) と相対誤差汎関数 ε。
"""

from __future__ import annotations

import logging
import time
from typing import Callable, Hashable

import numpy as np
from scipy.integrate import trapezoid

from lib.cache_manager import get_reference_cache
from lib.starframe.errors import ArgumentError, DimensionError, UndefinedMetricError
from lib.starframe.models import EvolutionTable, ReferenceSolution, TimeGrid

logger = logging.getLogger(__name__)

WARN_EST_ERROR = 1e-10
DEFAULT_SUBSTEPS = 20

GeneratorFn = Callable[[float], np.ndarray]


def _rk4_sweep(fn: GeneratorFn, grid: TimeGrid, substeps: int, dim: int) -> np.ndarray:
    out = np.empty((grid.n_points, dim, dim), dtype=complex)
    u = np.eye(dim, dtype=complex)
    out[0] = u
    dt = grid.step / substeps
    for i in range(grid.n_points - 1):
        t = float(grid.nodes[i])
        for s in range(substeps):
            ts = t + s * dt
            k1 = fn(ts) @ u
            k2 = fn(ts + 0.5 * dt) @ (u + 0.5 * dt * k1)
            k3 = fn(ts + 0.5 * dt) @ (u + 0.5 * dt * k2)
            k4 = fn(ts + dt) @ (u + dt * k3)
            u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = u
    return out


def rk_reference(
    fn: GeneratorFn, grid: TimeGrid, substeps: int = DEFAULT_SUBSTEPS
) -> ReferenceSolution:
    """
    U_r(t_i) from classical RK4 with substeps per grid interval.

    The run is repeated with 2*substeps; the finer solution is returned and
    est_error = max_i ‖U_fine - U_coarse‖_F / 15 (RK4 Richardson factor).
    """
    if substeps < 1:
        raise ArgumentError(f"substeps must be >= 1, got {substeps}")
    a0 = np.asarray(fn(float(grid.nodes[0])), dtype=complex)
    if a0.ndim != 2 or a0.shape[0] != a0.shape[1]:
        raise DimensionError(f"generator must return square matrices, got {a0.shape}")
    dim = a0.shape[0]

    t0 = time.time()
    coarse = _rk4_sweep(fn, grid, substeps, dim)
    fine = _rk4_sweep(fn, grid, 2 * substeps, dim)
    est_error = float(np.max(np.linalg.norm(fine - coarse, axis=(1, 2)))) / 15.0

    status = "ok"
    if est_error > WARN_EST_ERROR:
        status = "warning"
        logger.warning(
            f"[reference] est_error={est_error:.3e} above {WARN_EST_ERROR:.0e} (substeps={substeps})"
        )
    logger.info(
        f"[reference] n={grid.n_points} d={dim} substeps={substeps} "
        f"est_error={est_error:.3e} ms={int((time.time() - t0) * 1000)}"
    )
    return ReferenceSolution(grid=grid, u_ref=fine, est_error=est_error, status=status)


def cached_reference(
    key: Hashable, factory: Callable[[], ReferenceSolution]
) -> ReferenceSolution:
    cache = get_reference_cache()
    hit = cache.get(key)
    if hit is not None:
        logger.debug(f"[reference] cache hit key={key}")
        return hit
    ref = factory()
    cache[key] = ref
    return ref


def _test_samples(ref: ReferenceSolution, test: EvolutionTable | np.ndarray) -> np.ndarray:
    if isinstance(test, EvolutionTable):
        if not test.grid.same_as(ref.grid):
            raise DimensionError("reference and test live on different grids")
        samples = test.univariate
    else:
        samples = np.asarray(test, dtype=complex)
    if samples.shape != ref.u_ref.shape:
        raise DimensionError(
            f"shape mismatch: reference {ref.u_ref.shape}, test {samples.shape}"
        )
    return samples


def overlap_profile(
    ref: ReferenceSolution, test: EvolutionTable | np.ndarray
) -> np.ndarray:
    """
    Per-node complex overlap Tr(U_r†U) / √(Tr(U_r†U_r) Tr(U†U)).

    Raises:
        UndefinedMetricError: a zero-norm matrix at some node
    """
    u = _test_samples(ref, test)
    u_ref = ref.u_ref
    overlap = np.einsum("iab,iab->i", np.conj(u_ref), u)
    norm_ref = np.einsum("iab,iab->i", np.conj(u_ref), u_ref).real
    norm_test = np.einsum("iab,iab->i", np.conj(u), u).real
    denom = np.sqrt(norm_ref * norm_test)
    bad = np.flatnonzero(denom == 0)
    if bad.size:
        raise UndefinedMetricError(
            "zero-norm evolution operator", meta={"node": int(bad[0])}
        )
    return overlap / denom


def epsilon_components(
    ref: ReferenceSolution, test: EvolutionTable | np.ndarray
) -> tuple[float, float]:
    """
    (ε, time-averaged Im overlap).

    ε only sees the real part of the overlap; the imaginary part is kept for
    diagnostics because a pure phase drift moves it first.
    """
    profile = overlap_profile(ref, test)
    span = ref.grid.total_time
    eps = float(trapezoid(1.0 - profile.real, dx=ref.grid.step) / span)
    imag = float(trapezoid(profile.imag, dx=ref.grid.step) / span)
    return eps, imag


def epsilon_error(ref: ReferenceSolution, test: EvolutionTable | np.ndarray) -> float:
    """ε = (1/T) ∫_0^T [1 - Re overlap(τ)] dτ, trapezoid rule on the grid."""
    return epsilon_components(ref, test)[0]

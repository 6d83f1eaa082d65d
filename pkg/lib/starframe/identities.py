"""
行列恒等式の検証: ランダム縮小行列・分割レゾルベント・二乗/三乗トリック・加速部分和。

Everything here is ordinary finite-dimensional linear algebra; the ★-algebra versions
of the same identities live in frames.py.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from lib.starframe.errors import ArgumentError, SingularityError
from lib.starframe.fitting import contraction_lambdas, fit_order
from lib.starframe.models import ContractionPair, OrderCheck
from lib.starframe.parallel import thread_count

logger = logging.getLogger(__name__)

POWER_ITERATIONS = 200
MAX_CONDITION = 1e12

CHECK_NAMES = (
    "simple_split",
    "symmetric_split",
    "triframe",
    "square_trick",
    "cube_trick",
    "acceleration",
)


# =========================
# Random contractions
# =========================


def spectral_radius(m: np.ndarray, iterations: int = POWER_ITERATIONS) -> float:
    """
    Power-iteration estimate of ρ(M) from the fixed start vector (1, …, 1)/√d.

    The growth rate is averaged over the second half of the iterations so that
    competing eigenvalues of equal modulus do not make the estimate oscillate.
    """
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    v = np.ones(d, dtype=complex) / np.sqrt(d)
    log_growth: List[float] = []
    for _ in range(iterations):
        w = m @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        log_growth.append(np.log(norm))
        v = w / norm
    tail = log_growth[iterations // 2 :]
    return float(np.exp(np.mean(tail)))


def random_contraction(
    seed: int, dim: int, parts: int = 2, target_rho: float = 0.5
) -> ContractionPair:
    """
    Seeded complex parts, jointly rescaled so the estimated spectral radius of their
    sum equals target_rho.
    """
    if dim < 1:
        raise ArgumentError(f"dim must be >= 1, got {dim}")
    if parts not in (2, 3):
        raise ArgumentError(f"parts must be 2 or 3, got {parts}")
    if not 0.0 < target_rho < 1.0:
        raise ArgumentError(f"target_rho must lie in (0, 1), got {target_rho}")

    rng = np.random.default_rng(seed)
    raw = [
        rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        for _ in range(parts)
    ]
    rho_raw = spectral_radius(sum(raw[1:], raw[0]))
    if rho_raw == 0.0:
        raise SingularityError("random draw has a nilpotent sum", meta={"seed": seed})
    scale = target_rho / rho_raw
    scaled = tuple(p * scale for p in raw)
    rho = spectral_radius(sum(scaled[1:], scaled[0]))
    return ContractionPair(dim=dim, parts=scaled, rho=rho, seed=seed)


# =========================
# Helpers
# =========================


def _inv(m: np.ndarray, label: str) -> np.ndarray:
    cond = float(np.linalg.cond(m))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularityError(
            f"{label} is numerically singular", meta={"condition": cond}
        )
    return np.linalg.inv(m)


def _resolvent(m: np.ndarray, label: str = "I - M") -> np.ndarray:
    return _inv(np.eye(m.shape[0], dtype=complex) - m, label)


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    ref = float(np.linalg.norm(b))
    diff = float(np.linalg.norm(a - b))
    return diff / ref if ref > 0 else diff


def neumann_partial_sum_matrix(m: np.ndarray, order: int) -> np.ndarray:
    """Σ_{k=0}^{order} M^k."""
    if order < 0:
        raise ArgumentError(f"order must be >= 0, got {order}")
    eye = np.eye(m.shape[0], dtype=complex)
    total = eye.copy()
    power = eye
    for _ in range(order):
        power = power @ m
        total = total + power
    return total


# =========================
# Split identities
# =========================


def simple_split_rhs(m0: np.ndarray, m1: np.ndarray) -> np.ndarray:
    """R_1 (I - M_0 R_1)^{-1}."""
    r1 = _resolvent(m1, "I - M1")
    return r1 @ _resolvent(m0 @ r1, "I - M0 R1")


def symmetric_split_rhs(m0: np.ndarray, m1: np.ndarray) -> np.ndarray:
    """R_0 (I - M_1 R_1 M_0 R_0)^{-1} R_1."""
    r0 = _resolvent(m0, "I - M0")
    r1 = _resolvent(m1, "I - M1")
    middle = _resolvent(m1 @ r1 @ m0 @ r0, "I - M1 R1 M0 R0")
    return r0 @ middle @ r1


def triframe_rhs(m0: np.ndarray, m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    r0 = _resolvent(m0, "I - M0")
    r1 = _resolvent(m1, "I - M1")
    r2 = _resolvent(m2, "I - M2")
    u0, u1, u2 = m0 @ r0, m1 @ r1, m2 @ r2
    r10 = _resolvent(u1 @ u0, "I - M1 R1 M0 R0")
    r01 = _resolvent(u0 @ u1, "I - M0 R0 M1 R1")
    inner = u0 @ r10 @ r1 + u1 @ r01 @ r0
    outer = _resolvent(u2 @ inner, "I - M2 R2 (...)")
    return r0 @ r10 @ r1 @ outer @ r2


def check_simple_split(pair: ContractionPair) -> float:
    direct = _resolvent(pair.total)
    return _relative(simple_split_rhs(pair.m0, pair.m1), direct)


def check_symmetric_split(pair: ContractionPair) -> float:
    direct = _resolvent(pair.total)
    return _relative(symmetric_split_rhs(pair.m0, pair.m1), direct)


def check_triframe_identity(pair: ContractionPair) -> float:
    if pair.m2 is None:
        raise ArgumentError("the triframe identity needs a 3-part pair")
    direct = _resolvent(pair.total)
    return _relative(triframe_rhs(pair.m0, pair.m1, pair.m2), direct)


# =========================
# Square / cube tricks
# =========================


def _truncation_slope(
    truncated, exact, m: np.ndarray, lambdas: Sequence[float] | None
) -> float:
    if lambdas is None:
        lambdas = contraction_lambdas(m)
    errors = [float(np.linalg.norm(truncated(lam * m) - exact(lam * m))) for lam in lambdas]
    if min(errors) == 0.0:
        # 打ち切りが厳密 (M = 0 や冪零) なら傾きは定義できない
        return float("nan")
    return fit_order(lambdas, errors)


def check_square_trick(
    m: np.ndarray, order: int, lambdas: Sequence[float] | None = None
) -> OrderCheck:
    """
    R = (I + M)(I - M²)^{-1}; the order-m truncation (I + M) Σ_{k≤m} M^{2k} is the
    Neumann polynomial through M^{2m+1}.
    """
    m = np.asarray(m, dtype=complex)
    eye = np.eye(m.shape[0], dtype=complex)
    direct = _resolvent(m)
    identity_residual = _relative((eye + m) @ _resolvent(m @ m, "I - M^2"), direct)

    def truncated(x: np.ndarray) -> np.ndarray:
        return (eye + x) @ neumann_partial_sum_matrix(x @ x, order)

    polynomial_residual = _relative(
        truncated(m), neumann_partial_sum_matrix(m, 2 * order + 1)
    )
    slope = _truncation_slope(truncated, _resolvent, m, lambdas)
    return OrderCheck(
        identity_residual=identity_residual,
        polynomial_residual=polynomial_residual,
        slope=slope,
        expected_slope=float(2 * order + 2),
    )


def check_cube_trick(
    m: np.ndarray, order: int, lambdas: Sequence[float] | None = None
) -> OrderCheck:
    """R = (I + M + M²)(I - M³)^{-1}; truncation matches Neumann through M^{3m+2}."""
    m = np.asarray(m, dtype=complex)
    eye = np.eye(m.shape[0], dtype=complex)
    direct = _resolvent(m)
    m2 = m @ m
    identity_residual = _relative(
        (eye + m + m2) @ _resolvent(m2 @ m, "I - M^3"), direct
    )

    def truncated(x: np.ndarray) -> np.ndarray:
        x2 = x @ x
        return (eye + x + x2) @ neumann_partial_sum_matrix(x2 @ x, order)

    polynomial_residual = _relative(
        truncated(m), neumann_partial_sum_matrix(m, 3 * order + 2)
    )
    slope = _truncation_slope(truncated, _resolvent, m, lambdas)
    return OrderCheck(
        identity_residual=identity_residual,
        polynomial_residual=polynomial_residual,
        slope=slope,
        expected_slope=float(3 * order + 3),
    )


# =========================
# Accelerated partial sum
# =========================


class MatmulCounter:
    """Counts matrix-matrix products routed through it."""

    def __init__(self) -> None:
        self.count = 0

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.count += 1
        return a @ b


def accelerated_partial_sum(
    pair: ContractionPair, order: int, counter: MatmulCounter | None = None
) -> np.ndarray:
    """
    R^[m] = R_0 Σ_{k=0}^m (M_1 R_1 M_0 R_0)^k R_1.

    With P = R_0 R_1 and Y = P - R_0 - R_1 + I = (R_0 - I)(R_1 - I) this is
    P + (P - R_0) Σ_{k<m} Y^k (P - R_1), so Y costs no product and the whole
    sum costs m + 1: one for P, m - 2 Horner steps and the two outer factors.
    Every product goes through counter.
    """
    if order < 0:
        raise ArgumentError(f"order must be >= 0, got {order}")
    counter = counter or MatmulCounter()
    eye = np.eye(pair.dim, dtype=complex)
    r0 = _resolvent(pair.m0, "I - M0")
    r1 = _resolvent(pair.m1, "I - M1")
    p = counter.matmul(r0, r1)
    if order == 0:
        return p
    left, right = p - r0, p - r1
    if order == 1:
        return p + counter.matmul(left, right)
    y = p - r0 - r1 + eye
    series = eye + y
    for _ in range(order - 2):
        series = eye + counter.matmul(y, series)
    return p + counter.matmul(counter.matmul(left, series), right)


def acceleration_order(
    pair: ContractionPair, order: int, lambdas: Sequence[float] | None = None
) -> float:
    """
    λ-slope of ‖R^[m](λM_0, λM_1) - Σ_{k≤2m+1}(λM)^k‖; expected 2m + 2.
    Without lambdas the ladder comes from contraction_lambdas over M_0, M_1 and M.
    """
    m0, m1 = pair.parts[:2]
    if lambdas is None:
        lambdas = contraction_lambdas(m0, m1, m0 + m1)
    errors = []
    for lam in lambdas:
        scaled = ContractionPair(dim=pair.dim, parts=(lam * m0, lam * m1), rho=lam * pair.rho)
        std = neumann_partial_sum_matrix(scaled.total, 2 * order + 1)
        errors.append(float(np.linalg.norm(accelerated_partial_sum(scaled, order) - std)))
    return fit_order(lambdas, errors)


# =========================
# Trial runner
# =========================


@dataclass
class TrialRow:
    check: str
    seed: int
    dim: int
    rho: float
    residual: float
    slope: float | None = None
    expected_slope: float | None = None

    def as_dict(self) -> Dict[str, Any]:
        return {
            "check": self.check,
            "seed": self.seed,
            "dim": self.dim,
            "rho": self.rho,
            "residual": self.residual,
            "slope": self.slope,
            "expected_slope": self.expected_slope,
        }


def _accelerated_convergence(pair: ContractionPair, lam: float = 0.5, order: int = 200) -> float:
    """Relative distance of a long accelerated sum from R at half strength."""
    scaled = ContractionPair(
        dim=pair.dim, parts=tuple(lam * p for p in pair.parts[:2]), rho=lam * pair.rho
    )
    return _relative(accelerated_partial_sum(scaled, order), _resolvent(scaled.total))


def _one_trial(seed: int, dim: int, rho: float) -> List[TrialRow]:
    pair = random_contraction(seed, dim, parts=2, target_rho=rho)
    triple = random_contraction(seed, dim, parts=3, target_rho=rho)
    rows = [
        TrialRow("simple_split", seed, dim, rho, check_simple_split(pair)),
        TrialRow("symmetric_split", seed, dim, rho, check_symmetric_split(pair)),
        TrialRow("triframe", seed, dim, rho, check_triframe_identity(triple)),
    ]
    square = check_square_trick(pair.total, 1)
    cube = check_cube_trick(pair.total, 1)
    for name, chk in (("square_trick", square), ("cube_trick", cube)):
        rows.append(
            TrialRow(
                name,
                seed,
                dim,
                rho,
                max(chk.identity_residual, chk.polynomial_residual),
                chk.slope,
                chk.expected_slope,
            )
        )
    rows.append(
        TrialRow(
            "acceleration",
            seed,
            dim,
            rho,
            _accelerated_convergence(pair),
            acceleration_order(pair, 1),
            4.0,
        )
    )
    return rows


def run_trials(
    trials: int,
    dims: Iterable[int],
    rhos: Iterable[float],
    seed: int = 0,
) -> List[TrialRow]:
    """
    trials seeded draws for every (dim, rho); trial k uses seed + k.
    Rows come back in (dim, rho, seed, check) order regardless of scheduling.
    """
    if trials < 0:
        raise ArgumentError(f"trials must be >= 0, got {trials}")
    jobs = [(seed + k, int(d), float(r)) for d in dims for r in rhos for k in range(trials)]
    t0 = time.time()
    n_threads = thread_count()
    if n_threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(lambda job: _one_trial(*job), jobs))
    else:
        results = [_one_trial(*job) for job in jobs]
    rows = [row for group in results for row in group]
    logger.info(
        f"[identities] trials={trials} jobs={len(jobs)} rows={len(rows)} "
        f"ms={int((time.time() - t0) * 1000)}"
    )
    return rows

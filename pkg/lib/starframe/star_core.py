"""
離散化した ★-代数: 構成・積・冪・レゾルベント・積分。

Elements are c(t)δ(t-s) + f(t,s)Θ(t-s) on a uniform grid. The discrete product is the
block lower-triangular matrix product of the representation

    M_ii = D_i + (h/2) F_ii,    M_ij = h F_ij  (i > j)

so off-diagonal kernel blocks follow the composite trapezoid rule and the algebra is
exactly associative (up to rounding). Θ(0) = 1 with half weight at coincident times.
"""

from __future__ import annotations

import logging
import time
from typing import Callable, List

import numpy as np

from lib.starframe.errors import (
    ArgumentError,
    ConfigurationError,
    DimensionError,
    MalformedGreenError,
    SingularityError,
    StepTooLargeError,
)
from lib.starframe.models import EvolutionTable, Generator, StarElement, TimeGrid
from lib.starframe.parallel import column_blocks, run_blocks

logger = logging.getLogger(__name__)

# (I - (h/2)F_ii) の条件数がこれを超えたら刻み幅が粗すぎると判断する
MAX_STEP_CONDITION = 1e12


# =========================
# Grid / construction
# =========================


def make_grid(t_end: float, n_points: int, t_start: float = 0.0) -> TimeGrid:
    """
    Uniform grid on [t_start, t_end] with n_points nodes.

    Raises:
        ConfigurationError: non-positive duration or fewer than two nodes
    """
    if isinstance(n_points, bool) or int(n_points) != n_points:
        raise ConfigurationError(f"n_points must be an integer, got {n_points!r}")
    n_points = int(n_points)
    if not np.isfinite(t_end) or not np.isfinite(t_start):
        raise ConfigurationError("grid bounds must be finite")
    if t_end - t_start <= 0:
        raise ConfigurationError(
            f"grid duration must be positive (t_start={t_start}, t_end={t_end})"
        )
    if n_points < 2:
        raise ConfigurationError(f"n_points must be >= 2, got {n_points}")

    nodes = np.linspace(t_start, t_end, n_points)
    step = (t_end - t_start) / (n_points - 1)
    return TimeGrid(
        t_start=float(t_start),
        t_end=float(t_end),
        n_points=n_points,
        step=float(step),
        nodes=nodes,
    )


def _lower_mask(n: int) -> np.ndarray:
    return np.tril(np.ones((n, n), dtype=bool))


def _zero_upper(theta: np.ndarray) -> np.ndarray:
    n = theta.shape[0]
    iu = np.triu_indices(n, 1)
    theta[iu] = 0
    return theta


def _eye_stack(n: int, d: int) -> np.ndarray:
    return np.broadcast_to(np.eye(d, dtype=complex), (n, d, d)).copy()


def identity_element(grid: TimeGrid, d: int) -> StarElement:
    """I_★ = Id δ(t-s)."""
    if d < 1:
        raise ArgumentError(f"dimension must be >= 1, got {d}")
    n = grid.n_points
    return StarElement(
        grid=grid,
        dim=d,
        delta_part=_eye_stack(n, d),
        theta_part=np.zeros((n, n, d, d), dtype=complex),
    )


def zero_element(grid: TimeGrid, d: int) -> StarElement:
    n = grid.n_points
    return StarElement(
        grid=grid,
        dim=d,
        delta_part=np.zeros((n, d, d), dtype=complex),
        theta_part=np.zeros((n, n, d, d), dtype=complex),
    )


def theta_element(grid: TimeGrid, d: int) -> StarElement:
    """
    Id Θ(t-s), with Θ(0) = 1 on the diagonal blocks.

    Diagonal blocks of products are only O(h) accurate: Θ ⋆ Θ carries h/2
    there where the continuum value (t - s)Θ vanishes.
    """
    n = grid.n_points
    out = zero_element(grid, d)
    out.theta_part[_lower_mask(n)] = np.eye(d, dtype=complex)
    return out


def make_generator(grid: TimeGrid, samples: np.ndarray) -> Generator:
    samples = np.asarray(samples, dtype=complex)
    n = grid.n_points
    if samples.ndim != 3 or samples.shape[0] != n or samples.shape[1] != samples.shape[2]:
        raise DimensionError(
            f"generator samples must have shape ({n}, d, d), got {samples.shape}"
        )
    if not np.all(np.isfinite(samples)):
        raise ConfigurationError("generator samples contain NaN or Inf")
    return Generator(grid=grid, dim=samples.shape[1], samples=samples)


def sample_generator(fn: Callable[[float], np.ndarray], grid: TimeGrid) -> Generator:
    """Sample a callable A(t) at every grid node."""
    samples = np.array([np.asarray(fn(t), dtype=complex) for t in grid.nodes])
    return make_generator(grid, samples)


def from_generator(gen: Generator) -> StarElement:
    """A(t)Θ(t-s): F_ij = A(t_i) for i >= j."""
    n = gen.grid.n_points
    mask = _lower_mask(n)[:, :, None, None]
    theta = np.where(mask, gen.samples[:, None, :, :], 0).astype(complex)
    return StarElement(
        grid=gen.grid,
        dim=gen.dim,
        delta_part=np.zeros((n, gen.dim, gen.dim), dtype=complex),
        theta_part=theta,
    )


# =========================
# Linear structure
# =========================


def _check_compatible(x: StarElement, y: StarElement) -> None:
    if x.dim != y.dim:
        raise DimensionError(f"block dimension mismatch: {x.dim} vs {y.dim}")
    if not x.grid.same_as(y.grid):
        raise DimensionError("operands live on different grids")


def star_add(x: StarElement, y: StarElement) -> StarElement:
    _check_compatible(x, y)
    return StarElement(
        grid=x.grid,
        dim=x.dim,
        delta_part=x.delta_part + y.delta_part,
        theta_part=x.theta_part + y.theta_part,
    )


def star_scale(c: complex, x: StarElement) -> StarElement:
    return StarElement(
        grid=x.grid,
        dim=x.dim,
        delta_part=c * x.delta_part,
        theta_part=c * x.theta_part,
    )


def star_sub(x: StarElement, y: StarElement) -> StarElement:
    return star_add(x, star_scale(-1.0, y))


# =========================
# Products
# =========================


def _to_blocks(theta: np.ndarray) -> np.ndarray:
    """(N, N, d, d) -> (N*d, N*d) block matrix."""
    n, _, d, _ = theta.shape
    return np.ascontiguousarray(theta.transpose(0, 2, 1, 3)).reshape(n * d, n * d)


def _from_blocks(blocks: np.ndarray, n: int, d: int) -> np.ndarray:
    return np.ascontiguousarray(blocks.reshape(n, d, n, d).transpose(0, 2, 1, 3))


def _diag_blocks(theta: np.ndarray) -> np.ndarray:
    idx = np.arange(theta.shape[0])
    return theta[idx, idx]


def star_product(x: StarElement, y: StarElement) -> StarElement:
    """
    (X ⋆ Y): δ-part D^X_i D^Y_i, kernel D^X_i F^Y_ij + F^X_ij D^Y_j + Q_ij with

        Q_ij = h [ ½ F^X_ij F^Y_jj + Σ_{j<k<i} F^X_ik F^Y_kj + ½ F^X_ii F^Y_ij ]   (i > j)
        Q_jj = (h/2) F^X_jj F^Y_jj

    Q_jj is the trapezoid weight of a zero-length interval taken as a matrix
    product, so it keeps the product associative to rounding; it is O(h) away
    from the continuum diagonal, which is zero.

    Raises:
        DimensionError: grid or block dimension mismatch
    """
    _check_compatible(x, y)
    n, d, h = x.n_points, x.dim, x.grid.step
    fx, fy = x.theta_part, y.theta_part

    xb = _to_blocks(fx)
    yb = _to_blocks(fy)
    full = np.zeros((n * d, n * d), dtype=complex)

    def work(c0: int, c1: int) -> None:
        rows = slice(c0 * d, None)
        cols = slice(c0 * d, c1 * d)
        # X, Y はともに下三角なので k < c0 の寄与はない
        full[rows, cols] = xb[rows, rows] @ yb[rows, cols]

    run_blocks(work, column_blocks(n))
    sums = _from_blocks(full, n, d)

    x_diag = _diag_blocks(fx)
    y_diag = _diag_blocks(fy)
    q = h * (
        sums
        - 0.5 * np.einsum("ijab,jbc->ijac", fx, y_diag)
        - 0.5 * np.einsum("iab,ijbc->ijac", x_diag, fy)
    )
    idx = np.arange(n)
    q[idx, idx] = 0.5 * h * (x_diag @ y_diag)

    theta = (
        np.einsum("iab,ijbc->ijac", x.delta_part, fy)
        + np.einsum("ijab,jbc->ijac", fx, y.delta_part)
        + q
    )
    return StarElement(
        grid=x.grid,
        dim=d,
        delta_part=x.delta_part @ y.delta_part,
        theta_part=_zero_upper(theta),
    )


def star_chain(*factors: StarElement) -> StarElement:
    """Left-to-right product of several elements."""
    if not factors:
        raise ArgumentError("star_chain needs at least one factor")
    out = factors[0]
    for f in factors[1:]:
        out = star_product(out, f)
    return out


def star_power(x: StarElement, k: int) -> StarElement:
    if k < 0:
        raise ArgumentError(f"star power must be >= 0, got {k}")
    if k == 0:
        return identity_element(x.grid, x.dim)
    out = x
    for _ in range(k - 1):
        out = star_product(x, out)
    return out


def neumann_partial_sum(x: StarElement, m: int) -> StarElement:
    """Σ_{k=0}^m X^{⋆k} by Horner accumulation S <- I_★ + X ⋆ S."""
    if m < 0:
        raise ArgumentError(f"truncation order must be >= 0, got {m}")
    unit = identity_element(x.grid, x.dim)
    total = unit
    for _ in range(m):
        total = star_add(unit, star_product(x, total))
    return total


def neumann_partial_sums(x: StarElement, m_max: int) -> List[StarElement]:
    """All partial sums for m = 0..m_max from a single power chain."""
    if m_max < 0:
        raise ArgumentError(f"truncation order must be >= 0, got {m_max}")
    power = identity_element(x.grid, x.dim)
    total = power
    sums = [total]
    for _ in range(m_max):
        power = star_product(x, power)
        total = star_add(total, power)
        sums.append(total)
    return sums


# =========================
# Resolvent
# =========================


def exact_resolvent(x: StarElement) -> StarElement:
    """
    G = (I_★ - X)^{⋆-1} = I_★ + KΘ for X = FΘ (zero δ-part).

    Column-wise forward substitution, row i >= j:
        (I - (h/2) F_ii) K_ij = F_ij + Σ_{k=j}^{i-1} w_k F_ik K_kj,  w_j = h/2, w_k = h

    Raises:
        ArgumentError: X has a non-zero δ-part
        StepTooLargeError: (I - (h/2) F_ii) singular at some node
    """
    if not x.has_zero_delta():
        raise ArgumentError("exact_resolvent expects an element with zero delta part")

    t0 = time.time()
    n, d, h = x.n_points, x.dim, x.grid.step
    f = x.theta_part
    eye = np.eye(d, dtype=complex)

    lhs = eye - 0.5 * h * _diag_blocks(f)
    cond = np.linalg.cond(lhs)
    bad = np.flatnonzero(~np.isfinite(cond) | (cond > MAX_STEP_CONDITION))
    if bad.size:
        node = int(bad[0])
        raise StepTooLargeError(
            f"(I - h/2 F_ii) is singular at node {node} (h={h:.3e}); refine the grid",
            meta={"node": node, "step": h, "condition": float(cond[node])},
        )

    fb = _to_blocks(f)
    f4 = fb.reshape(n, d, n, d)
    kb = np.zeros((n * d, n * d), dtype=complex)
    k4 = kb.reshape(n, d, n, d)
    k_diag = np.zeros((n, d, d), dtype=complex)

    def work(c0: int, c1: int) -> None:
        for i in range(c0, n):
            j_hi = min(c1, i + 1)
            cols = slice(c0 * d, j_hi * d)
            row = slice(i * d, (i + 1) * d)
            rhs = fb[row, cols].copy()
            if i > c0:
                rhs += h * (fb[row, c0 * d : i * d] @ kb[c0 * d : i * d, cols])
            # k = j の端点は重み h/2
            corr = np.einsum("ajb,jbc->ajc", f4[i, :, c0:j_hi, :], k_diag[c0:j_hi])
            rhs -= 0.5 * h * corr.reshape(d, (j_hi - c0) * d)
            kb[row, cols] = np.linalg.solve(lhs[i], rhs)
            if i < c1:
                k_diag[i] = k4[i, :, i, :]

    blocks = column_blocks(n)
    try:
        run_blocks(work, blocks)
    except np.linalg.LinAlgError as e:
        raise StepTooLargeError(f"forward substitution failed: {e}; refine the grid") from e

    logger.debug(
        f"[star] resolvent n={n} d={d} chunks={len(blocks)} ms={int((time.time() - t0) * 1000)}"
    )
    return StarElement(
        grid=x.grid,
        dim=d,
        delta_part=_eye_stack(n, d),
        theta_part=_from_blocks(kb, n, d),
    )


# =========================
# Evolution operators
# =========================


def evolution_from_green(g: StarElement, atol: float = 1e-12) -> EvolutionTable:
    """
    U = Θ ⋆ G read out as U_ij = I + trapezoid of K_{kj} over k = j..i, U_ii = I.

    Raises:
        MalformedGreenError: δ-part of G is not the identity
    """
    n, d, h = g.n_points, g.dim, g.grid.step
    eye = np.eye(d, dtype=complex)
    if not np.allclose(g.delta_part, eye, rtol=0.0, atol=atol):
        raise MalformedGreenError("Green's function must have identity delta part")

    k = g.theta_part
    csum = np.cumsum(k, axis=0)
    k_diag = _diag_blocks(k)
    biv = eye + h * (csum - 0.5 * k_diag[None, :, :, :] - 0.5 * k)
    biv = _zero_upper(biv)
    return EvolutionTable(
        grid=g.grid,
        dim=d,
        bivariate=biv,
        univariate=biv[:, 0].copy(),
    )


def evolution_as_element(table: EvolutionTable) -> StarElement:
    """U(t,s)Θ(t-s) as an element with zero δ-part."""
    n, d = table.grid.n_points, table.dim
    return StarElement(
        grid=table.grid,
        dim=d,
        delta_part=np.zeros((n, d, d), dtype=complex),
        theta_part=table.bivariate.copy(),
    )


def node_inverse(samples: np.ndarray, unitary: bool = False) -> np.ndarray:
    """
    Per-node inverse of (N, d, d) samples; conjugate transpose when unitary.

    Raises:
        SingularityError: a sample is numerically singular
    """
    if unitary:
        return np.conj(np.swapaxes(samples, -1, -2))
    cond = np.linalg.cond(samples)
    bad = np.flatnonzero(~np.isfinite(cond) | (cond > MAX_STEP_CONDITION))
    if bad.size:
        node = int(bad[0])
        raise SingularityError(
            f"matrix at node {node} is not invertible",
            meta={"node": node, "condition": float(cond[node])},
        )
    return np.linalg.inv(samples)


def evolution_from_univariate(
    grid: TimeGrid, samples: np.ndarray, unitary: bool = False
) -> EvolutionTable:
    """U(t_i, t_j) = U(t_i) U(t_j)^{-1} from one-time samples with U(t_0) = I."""
    samples = np.asarray(samples, dtype=complex)
    n, d = samples.shape[0], samples.shape[1]
    inv = node_inverse(samples, unitary=unitary)
    biv = _zero_upper(np.einsum("iab,jbc->ijac", samples, inv))
    idx = np.arange(n)
    biv[idx, idx] = np.eye(d, dtype=complex)
    return EvolutionTable(grid=grid, dim=d, bivariate=biv, univariate=samples.copy())


def closed_form_green(gen: Generator, table: EvolutionTable) -> StarElement:
    """G = I_★ + A(t)U(t,s)Θ, using A Θ ⋆ G = A(t)U(t,s)."""
    n, d = gen.grid.n_points, gen.dim
    theta = _zero_upper(np.einsum("iab,ijbc->ijac", gen.samples, table.bivariate))
    return StarElement(
        grid=gen.grid, dim=d, delta_part=_eye_stack(n, d), theta_part=theta
    )

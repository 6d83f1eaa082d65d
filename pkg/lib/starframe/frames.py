"""
フレーム変換: 標準フレーム・バイフレーム・トライフレームと、各フレームでの Dyson 打ち切り。

Every "U = U_a ⋆ Y" is evaluated as U = Θ ⋆ (G_a ⋆ Y), i.e. the Green's function is
assembled in the discrete ★-algebra and read out once with evolution_from_green.
Generators are expected to carry A = -iH already.
"""

from __future__ import annotations

import logging
import time
from typing import Callable, Dict, Iterable, List, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from lib.starframe.errors import ArgumentError, DimensionError
from lib.starframe.fitting import DEFAULT_LAMBDAS, fit_order
from lib.starframe.models import (
    BiframeForm,
    BiframeOperator,
    EvolutionTable,
    Frame,
    Generator,
    SplitGenerator,
    StarElement,
)
from lib.starframe.star_core import (
    evolution_from_green,
    exact_resolvent,
    from_generator,
    identity_element,
    make_generator,
    neumann_partial_sums,
    node_inverse,
    star_add,
    star_chain,
    star_product,
    star_sub,
    zero_element,
)

logger = logging.getLogger(__name__)


# =========================
# Split construction
# =========================


def build_split(
    parts: Sequence[Generator],
    evolutions: Sequence[EvolutionTable] | None = None,
    unitary: bool = False,
) -> SplitGenerator:
    """
    Split A = Σ parts. Part Green's functions are the discrete resolvents of A_iΘ;
    part evolutions are read out from them unless closed forms are supplied.

    Raises:
        ArgumentError: fewer than two or more than three parts
        DimensionError: parts on different grids or dimensions
    """
    parts = list(parts)
    if len(parts) not in (2, 3):
        raise ArgumentError(f"a split needs 2 or 3 parts, got {len(parts)}")
    first = parts[0]
    for p in parts[1:]:
        if p.dim != first.dim or not p.grid.same_as(first.grid):
            raise DimensionError("split parts must share grid and dimension")

    greens = [exact_resolvent(from_generator(p)) for p in parts]
    if evolutions is None:
        evolutions = [evolution_from_green(g) for g in greens]
    elif len(evolutions) != len(parts):
        raise ArgumentError("one evolution table per part is required")

    return SplitGenerator(
        parts=parts,
        part_evolutions=list(evolutions),
        part_greens=greens,
        unitary=unitary,
    )


def permute_split(split: SplitGenerator, order: Sequence[int]) -> SplitGenerator:
    """Reorder the parts (and their evolutions / Green's functions)."""
    if sorted(order) != list(range(split.n_parts)):
        raise ArgumentError(f"{list(order)} is not a permutation of the parts")
    return SplitGenerator(
        parts=[split.parts[i] for i in order],
        part_evolutions=[split.part_evolutions[i] for i in order],
        part_greens=[split.part_greens[i] for i in order],
        unitary=split.unitary,
    )


def total_generator(split: SplitGenerator) -> Generator:
    samples = sum(p.samples for p in split.parts[1:]) + split.parts[0].samples
    return make_generator(split.grid, samples)


def part_derivative(split: SplitGenerator, i: int) -> StarElement:
    """U̇_i = A_iΘ ⋆ G_i, which equals G_i - I_★ by the resolvent identity."""
    g = split.part_greens[i]
    return star_sub(g, identity_element(g.grid, g.dim))


def _require_parts(split: SplitGenerator, n: int) -> None:
    if split.n_parts != n:
        raise ArgumentError(f"expected a {n}-part split, got {split.n_parts} parts")


# =========================
# Laboratory / standard frame
# =========================


def lab_green(split: SplitGenerator) -> StarElement:
    return exact_resolvent(from_generator(total_generator(split)))


def lab_U(split: SplitGenerator) -> EvolutionTable:
    """Direct resolvent pipeline for the full generator."""
    return evolution_from_green(lab_green(split))


def std_frame_operator(split: SplitGenerator) -> StarElement:
    """Kernel U_1^{-1}(t) A_0(t) U_1(t) times Θ; its ★-resolvent time-orders F(t,s)."""
    _require_parts(split, 2)
    u1 = split.part_evolutions[1].univariate
    u1_inv = node_inverse(u1, unitary=split.unitary)
    samples = u1_inv @ split.parts[0].samples @ u1
    return from_generator(make_generator(split.grid, samples))


def std_frame_U(split: SplitGenerator) -> EvolutionTable:
    """U(t,s) = U_1(t) Te^{F(t,s)} U_1^{-1}(s)."""
    _require_parts(split, 2)
    inner = evolution_from_green(exact_resolvent(std_frame_operator(split)))
    u1 = split.part_evolutions[1].univariate
    u1_inv = node_inverse(u1, unitary=split.unitary)
    biv = np.einsum("iab,ijbc,jcd->ijad", u1, inner.bivariate, u1_inv)
    idx = np.arange(split.grid.n_points)
    biv[idx, idx] = np.eye(split.dim, dtype=complex)
    return EvolutionTable(
        grid=split.grid, dim=split.dim, bivariate=biv, univariate=biv[:, 0].copy()
    )


# =========================
# Biframe
# =========================


def biframe_operator(
    split: SplitGenerator, form: BiframeForm = BiframeForm.BLUE
) -> BiframeOperator:
    """
    blue: B(t,s)   = A_1(t)U_1(t) ∫_s^t U_1^{-1}A_0U_0 dτ U_0^{-1}(s)
    red:  B_2(t,s) = A_1(t)U_0(t) ∫_s^t U_0^{-1}A_0U_1 dτ U_1^{-1}(s)

    The inner integral is a running composite trapezoid, so B_jj = 0 and the total
    cost is O(N^2) block products.
    """
    _require_parts(split, 2)
    form = BiframeForm(form)
    a0, a1 = split.parts[0].samples, split.parts[1].samples
    u0 = split.part_evolutions[0].univariate
    u1 = split.part_evolutions[1].univariate
    if form is BiframeForm.BLUE:
        left, right = u1, u0
    else:
        left, right = u0, u1

    left_inv = node_inverse(left, unitary=split.unitary)
    right_inv = node_inverse(right, unitary=split.unitary)
    integrand = left_inv @ a0 @ right
    running = cumulative_trapezoid(integrand, dx=split.grid.step, axis=0, initial=0)
    inner = running[:, None] - running[None, :]
    kernel = np.einsum("iab,ijbc,jcd->ijad", a1 @ left, inner, right_inv)
    iu = np.triu_indices(split.grid.n_points, 1)
    kernel[iu] = 0
    return BiframeOperator(grid=split.grid, dim=split.dim, kernel=kernel, form=form)


def operator_element(op: BiframeOperator) -> StarElement:
    """BΘ as a ★-element with zero δ-part."""
    out = zero_element(op.grid, op.dim)
    out.theta_part = op.kernel.copy()
    return out


def biframe_kernel(split: SplitGenerator, form: BiframeForm = BiframeForm.BLUE) -> StarElement:
    """
    The biframe driving element evaluated in the ★-algebra:
        blue: U̇_1 ⋆ U̇_0              (= A_1Θ⋆G_1⋆A_0Θ⋆G_0)
        red:  (A_1Θ⋆G_0) ⋆ (A_0Θ⋆G_1)
    """
    _require_parts(split, 2)
    if BiframeForm(form) is BiframeForm.BLUE:
        return star_product(part_derivative(split, 1), part_derivative(split, 0))
    a0 = from_generator(split.parts[0])
    a1 = from_generator(split.parts[1])
    g0, g1 = split.part_greens
    return star_product(star_product(a1, g0), star_product(a0, g1))


def biframe_green(
    split: SplitGenerator,
    form: BiframeForm = BiframeForm.BLUE,
    use_operator: bool = False,
) -> StarElement:
    """
    blue: G = G_0 ⋆ (I_★ - BΘ)^{⋆-1} ⋆ G_1
    red:  G = G_0 ⋆ G_1 ⋆ (I_★ - B_2Θ)^{⋆-1}

    use_operator=True takes BΘ from the running-integral biframe_operator instead of
    the ★-product path.
    """
    _require_parts(split, 2)
    form = BiframeForm(form)
    if use_operator:
        kernel = operator_element(biframe_operator(split, form))
    else:
        kernel = biframe_kernel(split, form)
    resolvent = exact_resolvent(kernel)
    g0, g1 = split.part_greens
    if form is BiframeForm.BLUE:
        return star_chain(g0, resolvent, g1)
    return star_chain(g0, g1, resolvent)


def biframe_U(
    split: SplitGenerator,
    form: BiframeForm = BiframeForm.BLUE,
    use_operator: bool = False,
) -> EvolutionTable:
    """U = U_0 ⋆ Te^{B} ⋆ G_1 (blue) or U_0 ⋆ G_1 ⋆ Te^{B_2} (red)."""
    t0 = time.time()
    table = evolution_from_green(biframe_green(split, form, use_operator))
    logger.debug(
        f"[frames] biframe form={BiframeForm(form).value} operator={use_operator} "
        f"ms={int((time.time() - t0) * 1000)}"
    )
    return table


def udot_alternating_series(split: SplitGenerator, m: int) -> StarElement:
    """Sum of all alternating words in {U̇_0, U̇_1} of length 1..m."""
    _require_parts(split, 2)
    if m < 1:
        raise ArgumentError(f"word length cap must be >= 1, got {m}")
    u0, u1 = part_derivative(split, 0), part_derivative(split, 1)
    # w0: words starting with U̇_0, w1: words starting with U̇_1
    w0, w1 = u0, u1
    total = star_add(w0, w1)
    for _ in range(m - 1):
        w0, w1 = star_product(u0, w1), star_product(u1, w0)
        total = star_add(total, star_add(w0, w1))
    return total


# =========================
# Triframe
# =========================


def triframe_green(split: SplitGenerator) -> StarElement:
    """
    G = G_0 ⋆ (I - U̇_1⋆U̇_0)^{-1} ⋆ G_1
          ⋆ (I - U̇_2 ⋆ (U̇_0⋆(I - U̇_1⋆U̇_0)^{-1}⋆G_1 + U̇_1⋆(I - U̇_0⋆U̇_1)^{-1}⋆G_0))^{-1}
          ⋆ G_2
    """
    _require_parts(split, 3)
    g0, g1, g2 = split.part_greens
    u0, u1, u2 = (part_derivative(split, i) for i in range(3))

    r10 = exact_resolvent(star_product(u1, u0))
    r01 = exact_resolvent(star_product(u0, u1))
    inner = star_add(star_chain(u0, r10, g1), star_chain(u1, r01, g0))
    r2 = exact_resolvent(star_product(u2, inner))
    return star_chain(g0, r10, g1, r2, g2)


def triframe_U(split: SplitGenerator) -> EvolutionTable:
    return evolution_from_green(triframe_green(split))


# =========================
# Truncated Dyson series
# =========================


def _driving_element(split: SplitGenerator, frame: Frame) -> StarElement:
    if frame is Frame.LAB:
        return from_generator(total_generator(split))
    _require_parts(split, 2)
    g0, g1 = split.part_greens
    if frame is Frame.STD:
        return star_product(from_generator(split.parts[0]), g1)
    if frame is Frame.STD0:
        return star_product(from_generator(split.parts[1]), g0)
    return biframe_kernel(split, BiframeForm.BLUE)


def _wrap_partial_sum(split: SplitGenerator, frame: Frame, total: StarElement) -> StarElement:
    if frame is Frame.LAB:
        return total
    g0, g1 = split.part_greens[0], split.part_greens[1]
    if frame is Frame.STD:
        return star_product(g1, total)
    if frame is Frame.STD0:
        return star_product(g0, total)
    return star_chain(g0, total, g1)


def dyson_truncated_orders(
    split: SplitGenerator, frame: Frame, orders: Iterable[int]
) -> Dict[int, EvolutionTable]:
    """
    m-th order Dyson approximants for every requested m, from one power chain.

        lab:     Θ ⋆ Σ_{k<=m} (AΘ)^{⋆k}
        std:     U_1 ⋆ Σ_{k<=m} (A_0Θ ⋆ G_1)^{⋆k}
        std0:    U_0 ⋆ Σ_{k<=m} (A_1Θ ⋆ G_0)^{⋆k}
        biframe: U_0 ⋆ Σ_{k<=m} (BΘ)^{⋆k} ⋆ G_1
    """
    frame = Frame(frame)
    wanted = sorted(set(int(m) for m in orders))
    if not wanted:
        return {}
    if wanted[0] < 0:
        raise ArgumentError(f"truncation orders must be >= 0, got {wanted[0]}")

    t0 = time.time()
    sums = neumann_partial_sums(_driving_element(split, frame), wanted[-1])
    out = {m: evolution_from_green(_wrap_partial_sum(split, frame, sums[m])) for m in wanted}
    logger.info(
        f"[frames] dyson frame={frame.value} orders={len(wanted)} m_max={wanted[-1]} "
        f"ms={int((time.time() - t0) * 1000)}"
    )
    return out


def dyson_truncated(split: SplitGenerator, frame: Frame, m: int) -> EvolutionTable:
    return dyson_truncated_orders(split, frame, [m])[m]


# =========================
# Comparisons
# =========================


def table_deviation(a: EvolutionTable, b: EvolutionTable) -> float:
    """Relative Frobenius deviation ‖a - b‖ / ‖b‖ over all (t_i, t_j) blocks."""
    if a.dim != b.dim or not a.grid.same_as(b.grid):
        raise DimensionError("evolution tables live on different grids")
    return float(
        np.linalg.norm(a.bivariate - b.bivariate) / np.linalg.norm(b.bivariate)
    )


def acceleration_deviation(split: SplitGenerator, m: int) -> float:
    """‖U_biframe^[m] - U_std^[2m+1]‖_F (absolute, over all blocks)."""
    biframe = dyson_truncated(split, Frame.BIFRAME, m)
    std = dyson_truncated(split, Frame.STD, 2 * m + 1)
    return float(np.linalg.norm(biframe.bivariate - std.bivariate))


def acceleration_slope(
    make_split: Callable[[float], SplitGenerator],
    m: int,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
) -> float:
    """Log-log slope of acceleration_deviation under generator scaling A -> λA."""
    errors: List[float] = [acceleration_deviation(make_split(lam), m) for lam in lambdas]
    return fit_order(lambdas, errors)

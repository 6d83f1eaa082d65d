"""
駆動二準位系 H(t) = (ω0/2)σz + 2β cos(ωt)σx の閉形式と収束実験。

Closed forms here duplicate what the generic pipeline computes and serve as
cross-checks for it.
"""

from __future__ import annotations

import logging
import time
from typing import Callable, Dict, List, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from lib.cache_manager import build_reference_cache_key
from lib.starframe.errors import ConfigurationError
from lib.starframe.frames import (
    biframe_U,
    build_split,
    dyson_truncated_orders,
    lab_U,
    std_frame_U,
    triframe_U,
)
from lib.starframe.models import (
    EPSILON_FLOOR,
    BiframeForm,
    BiframeOperator,
    ConvergenceRecord,
    Frame,
    RabiParams,
    ReferenceSolution,
    SCIntegrals,
    SplitGenerator,
    TimeGrid,
)
from lib.starframe.reference import (
    DEFAULT_SUBSTEPS,
    cached_reference,
    epsilon_components,
    epsilon_error,
    rk_reference,
)
from lib.starframe.star_core import evolution_from_univariate, make_generator, make_grid

logger = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
EYE2 = np.eye(2, dtype=complex)

FIGURE1_FRAMES: tuple[Frame, ...] = (Frame.LAB, Frame.STD, Frame.BIFRAME)


def validate_params(params: RabiParams) -> RabiParams:
    """
    Raises:
        ConfigurationError: non-positive frequencies/time, too few nodes, bad orders
    """
    for name in ("omega0", "beta", "omega", "t_total"):
        value = getattr(params, name)
        if not np.isfinite(value) or value <= 0:
            raise ConfigurationError(f"{name} must be positive and finite, got {value}")
    if params.n_grid < 2:
        raise ConfigurationError(f"n_grid must be >= 2, got {params.n_grid}")
    if not params.orders or min(params.orders) < 0:
        raise ConfigurationError(f"orders must be non-empty and >= 0, got {params.orders}")
    return params


def rabi_grid(params: RabiParams) -> TimeGrid:
    return make_grid(params.t_total, params.n_grid)


def _phase(params: RabiParams, t):
    """φ(t) = (2β/ω) sin(ωt)."""
    return (2.0 * params.beta / params.omega) * np.sin(params.omega * t)


def _h0(params: RabiParams) -> np.ndarray:
    return 0.5 * params.omega0 * SIGMA_Z


def _drive(params: RabiParams, t):
    return 2.0 * params.beta * np.cos(params.omega * t)


def hamiltonian(params: RabiParams, t: float) -> np.ndarray:
    return _h0(params) + _drive(params, t) * SIGMA_X


def rabi_generator(params: RabiParams) -> Callable[[float], np.ndarray]:
    """A(t) = -iH(t) as a callable for the reference solver."""

    def fn(t: float) -> np.ndarray:
        return -1j * hamiltonian(params, t)

    return fn


# =========================
# Closed-form parts
# =========================


def u0_closed(params: RabiParams, nodes: np.ndarray) -> np.ndarray:
    """U_0(t) = diag(e^{-iω0t/2}, e^{iω0t/2})."""
    out = np.zeros((len(nodes), 2, 2), dtype=complex)
    out[:, 0, 0] = np.exp(-0.5j * params.omega0 * nodes)
    out[:, 1, 1] = np.exp(0.5j * params.omega0 * nodes)
    return out


def u1_closed(params: RabiParams, nodes: np.ndarray) -> np.ndarray:
    """U_1(t) = exp(-iφ(t)σx) = cos φ I - i sin φ σx."""
    phi = _phase(params, nodes)
    return (
        np.cos(phi)[:, None, None] * EYE2
        - 1j * np.sin(phi)[:, None, None] * SIGMA_X
    )


def rabi_split(params: RabiParams, closed_form: bool = True) -> SplitGenerator:
    """
    A_0 = -i(ω0/2)σz, A_1 = -i 2β cos(ωt)σx. Part evolutions come from the closed
    forms unless closed_form=False; part Green's functions are always the discrete
    resolvents so that the frame identities hold on the grid.
    """
    validate_params(params)
    grid = rabi_grid(params)
    nodes = grid.nodes
    a0 = np.broadcast_to(-1j * _h0(params), (grid.n_points, 2, 2)).copy()
    a1 = -1j * _drive(params, nodes)[:, None, None] * SIGMA_X
    parts = [make_generator(grid, a0), make_generator(grid, a1)]
    evolutions = None
    if closed_form:
        evolutions = [
            evolution_from_univariate(grid, u0_closed(params, nodes), unitary=True),
            evolution_from_univariate(grid, u1_closed(params, nodes), unitary=True),
        ]
    return build_split(parts, evolutions, unitary=True)


def rabi_split_three(params: RabiParams, rotated: bool = False) -> SplitGenerator:
    """
    Three parts: the static term and the drive halved into two copies of
    β cos(ωt)σx. rotated=True shares the drive between (σx + σy)/2 and
    (σx - σy)/2 instead, so that no two parts commute.
    """
    validate_params(params)
    grid = rabi_grid(params)
    drive = _drive(params, grid.nodes)[:, None, None]
    a0 = np.broadcast_to(-1j * _h0(params), (grid.n_points, 2, 2)).copy()
    if rotated:
        a1 = -0.5j * drive * (SIGMA_X + SIGMA_Y)
        a2 = -0.5j * drive * (SIGMA_X - SIGMA_Y)
    else:
        a1 = -0.5j * drive * SIGMA_X
        a2 = a1.copy()
    parts = [make_generator(grid, a) for a in (a0, a1, a2)]
    return build_split(parts, unitary=True)


def h_std(params: RabiParams, which: int, t: float) -> np.ndarray:
    """
    which=0: U_0†HU_0 = (ω0/2)σz + 2β cos(ωt) [[0, e^{iω0t}], [e^{-iω0t}, 0]]
    which=1: U_1†HU_1 = 2β cos(ωt)σx + (ω0/2) sin 2φ σy + (ω0/2) cos 2φ σz
    """
    drive = _drive(params, t)
    half = 0.5 * params.omega0
    if which == 0:
        rot = np.exp(1j * params.omega0 * t)
        return np.array([[half, drive * rot], [drive * np.conj(rot), -half]], dtype=complex)
    if which == 1:
        two_phi = 2.0 * _phase(params, t)
        return (
            drive * SIGMA_X
            + half * np.sin(two_phi) * SIGMA_Y
            + half * np.cos(two_phi) * SIGMA_Z
        )
    raise ConfigurationError(f"which must be 0 or 1, got {which}")


# =========================
# S / C integrals and the closed-form biframe operator
# =========================


GAUSS_POINTS = 8


def _running_gauss(fn: Callable[[np.ndarray], np.ndarray], grid: TimeGrid) -> np.ndarray:
    """∫_{t_0}^{t_i} fn dτ with Gauss-Legendre on every grid interval."""
    x, w = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    left = grid.nodes[:-1]
    half = 0.5 * grid.step
    tau = (left + half)[:, None] + half * x[None, :]
    pieces = half * (fn(tau) @ w)
    return np.concatenate([[0.0], np.cumsum(pieces)])


def sc_integrals(
    params: RabiParams, grid: TimeGrid | None = None, method: str = "trapezoid"
) -> SCIntegrals:
    """
    S(t,s) = e^{iω0s/2} ∫_s^t e^{-iω0τ/2} sin φ(τ) dτ, C likewise with cos φ.

    One running integral per kernel, so the cost is O(N²) scalar operations.
    method="trapezoid" uses the grid samples (the rule biframe_operator uses);
    method="gauss" integrates the closed-form integrand to near machine precision.
    """
    grid = grid or rabi_grid(params)
    nodes = grid.nodes
    phase = np.exp(-0.5j * params.omega0 * nodes)

    def running(trig) -> np.ndarray:
        def integrand(t):
            return np.exp(-0.5j * params.omega0 * t) * trig(_phase(params, t))

        if method == "trapezoid":
            return cumulative_trapezoid(integrand(nodes), dx=grid.step, initial=0)
        if method == "gauss":
            return _running_gauss(integrand, grid)
        raise ConfigurationError(f"unknown quadrature method {method!r}")

    def kernel(trig) -> np.ndarray:
        r = running(trig)
        return np.tril(np.conj(phase)[None, :] * (r[:, None] - r[None, :]))

    return SCIntegrals(grid=grid, s_kernel=kernel(np.sin), c_kernel=kernel(np.cos))


def biframe_closed_form(
    params: RabiParams, grid: TimeGrid | None = None, method: str = "trapezoid"
) -> BiframeOperator:
    """
    B(t,s) = βω0 cos(ωt) [ cos φ [[-iS, C̄], [-C, iS̄]] + sin φ [[iC, S̄], [-S, -iC̄]] ]

    with φ = φ(t). Entry (2,2) is the conjugate of (1,1); (2,1) is minus the
    conjugate of (1,2).
    """
    grid = grid or rabi_grid(params)
    sc = sc_integrals(params, grid, method)
    s, c = sc.s_kernel, sc.c_kernel
    sb, cb = sc.s_conj, sc.c_conj
    phi = _phase(params, grid.nodes)
    cos_phi = np.cos(phi)[:, None]
    sin_phi = np.sin(phi)[:, None]
    pref = (params.beta * params.omega0 * np.cos(params.omega * grid.nodes))[:, None]

    kernel = np.zeros((grid.n_points, grid.n_points, 2, 2), dtype=complex)
    kernel[:, :, 0, 0] = pref * (cos_phi * (-1j * s) + sin_phi * (1j * c))
    kernel[:, :, 0, 1] = pref * (cos_phi * cb + sin_phi * sb)
    kernel[:, :, 1, 0] = pref * (cos_phi * (-c) + sin_phi * (-s))
    kernel[:, :, 1, 1] = pref * (cos_phi * (1j * sb) + sin_phi * (-1j * cb))
    return BiframeOperator(grid=grid, dim=2, kernel=kernel, form=BiframeForm.BLUE)


# =========================
# Experiments
# =========================


def rabi_reference(params: RabiParams, substeps: int = DEFAULT_SUBSTEPS) -> ReferenceSolution:
    validate_params(params)
    key = build_reference_cache_key(
        params.omega0, params.beta, params.omega, params.t_total, params.n_grid, substeps
    )
    return cached_reference(
        key, lambda: rk_reference(rabi_generator(params), rabi_grid(params), substeps)
    )


def quadrature_floor(params: RabiParams, ref: ReferenceSolution | None = None) -> float:
    """ε of the untruncated laboratory pipeline: the grid-limited error level."""
    ref = ref or rabi_reference(params)
    return epsilon_error(ref, lab_U(rabi_split(params)))


def frame_equivalence(
    params: RabiParams, ref: ReferenceSolution | None = None
) -> Dict[str, float]:
    """ε of every untruncated pipeline against the reference."""
    ref = ref or rabi_reference(params)
    split = rabi_split(params)
    tables = {
        "lab": lab_U(split),
        "std": std_frame_U(split),
        "biframe_blue": biframe_U(split, BiframeForm.BLUE),
        "biframe_red": biframe_U(split, BiframeForm.RED),
        "triframe": triframe_U(rabi_split_three(params)),
    }
    out = {name: epsilon_error(ref, table) for name, table in tables.items()}
    for name, eps in out.items():
        logger.info(f"[rabi] pipeline={name} eps={eps:.3e}")
    return out


def run_figure1(
    params: RabiParams,
    frames: Sequence[Frame] = FIGURE1_FRAMES,
    substeps: int = DEFAULT_SUBSTEPS,
) -> List[ConvergenceRecord]:
    """
    ε of the order-m Dyson truncation in every requested frame.
    Records come back sorted by (frame, m).
    """
    validate_params(params)
    ref = rabi_reference(params, substeps)
    split = rabi_split(params)
    orders = sorted(set(params.orders))

    records: List[ConvergenceRecord] = []
    for frame in dict.fromkeys(Frame(f) for f in frames):
        t0 = time.time()
        tables = dyson_truncated_orders(split, frame, orders)
        for m in orders:
            eps, imag = epsilon_components(ref, tables[m])
            if eps <= 0.0:
                logger.warning(
                    f"[figure1] frame={frame.value} m={m} eps={eps:.3e} at or below zero, "
                    f"log10 reported at {EPSILON_FLOOR:.1e}"
                )
            records.append(
                ConvergenceRecord(frame=frame.value, m=m, epsilon=eps, imag_overlap=imag)
            )
            logger.debug(f"[figure1] frame={frame.value} m={m} eps={eps:.3e} imag={imag:.3e}")
        logger.info(
            f"[figure1] frame={frame.value} orders={len(orders)} "
            f"ms={int((time.time() - t0) * 1000)}"
        )
    records.sort(key=lambda r: (r.frame, r.m))
    return records

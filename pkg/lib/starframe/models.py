"""
★-代数と各フレームのデータモデル。

配列の形:
  - per-node matrices: (N, d, d)
  - lower-triangular block kernels: (N, N, d, d), index [i, j] = value at (t_i, t_j),
    blocks with i < j are identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple

import numpy as np

EPSILON_FLOOR = float(np.finfo(float).eps)


class Frame(str, Enum):
    """
    Dyson 展開を行うフレーム。
    STD は part 1 の枠 (H_std,1), STD0 は part 0 の枠 (H_std,0)。
    """

    LAB = "lab"
    STD = "std"
    STD0 = "std0"
    BIFRAME = "biframe"


class BiframeForm(str, Enum):
    BLUE = "blue"  # U_0 ⋆ Te^{B} ⋆ G_1
    RED = "red"  # U_0 ⋆ G_1 ⋆ Te^{B_2}


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [t_start, t_end]."""

    t_start: float
    t_end: float
    n_points: int
    step: float
    nodes: np.ndarray = field(repr=False, compare=False)

    @property
    def total_time(self) -> float:
        return self.t_end - self.t_start

    def same_as(self, other: "TimeGrid") -> bool:
        return (
            self.n_points == other.n_points
            and self.t_start == other.t_start
            and self.t_end == other.t_end
        )


@dataclass
class StarElement:
    """
    Discretised element c(t)δ(t-s) + f(t,s)Θ(t-s) of the ★-algebra.

    delta_part: (N, d, d) coefficients of δ
    theta_part: (N, N, d, d) lower-triangular kernel blocks F_ij
    """

    grid: TimeGrid
    dim: int
    delta_part: np.ndarray
    theta_part: np.ndarray

    @property
    def n_points(self) -> int:
        return self.grid.n_points

    def has_zero_delta(self) -> bool:
        return not np.any(self.delta_part)


@dataclass
class Generator:
    """Sampled coefficient matrix A(t_i); for Schrödinger dynamics A = -iH."""

    grid: TimeGrid
    dim: int
    samples: np.ndarray


@dataclass
class EvolutionTable:
    """U(t_i, t_j) on the grid plus its restriction U(t_i) = U(t_i, t_start)."""

    grid: TimeGrid
    dim: int
    bivariate: np.ndarray
    univariate: np.ndarray


@dataclass
class SplitGenerator:
    """
    A(t) = Σ parts. 各 part の発展演算子と Green 関数を保持する。

    unitary=True のとき U_i^{-1} は共役転置で計算する。
    """

    parts: List[Generator]
    part_evolutions: List[EvolutionTable]
    part_greens: List[StarElement]
    unitary: bool = False

    @property
    def grid(self) -> TimeGrid:
        return self.parts[0].grid

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    @property
    def n_parts(self) -> int:
        return len(self.parts)


@dataclass
class BiframeOperator:
    """Kernel B_ij ≈ B(t_i, t_j), defined for i >= j only."""

    grid: TimeGrid
    dim: int
    kernel: np.ndarray
    form: BiframeForm = BiframeForm.BLUE


@dataclass
class ContractionPair:
    """Two or three parts whose sum has spectral radius rho < 1."""

    dim: int
    parts: Tuple[np.ndarray, ...]
    rho: float
    seed: int | None = None

    @property
    def m0(self) -> np.ndarray:
        return self.parts[0]

    @property
    def m1(self) -> np.ndarray:
        return self.parts[1]

    @property
    def m2(self) -> np.ndarray | None:
        return self.parts[2] if len(self.parts) > 2 else None

    @property
    def total(self) -> np.ndarray:
        return sum(self.parts[1:], self.parts[0])


@dataclass
class OrderCheck:
    """Result of the square/cube acceleration checks."""

    identity_residual: float
    polynomial_residual: float
    slope: float
    expected_slope: float


@dataclass
class ReferenceSolution:
    grid: TimeGrid
    u_ref: np.ndarray
    est_error: float
    status: str = "ok"  # "ok" | "warning"


@dataclass(frozen=True)
class ConvergenceRecord:
    frame: str
    m: int
    epsilon: float
    imag_overlap: float = 0.0

    @property
    def log10_epsilon(self) -> float:
        """
        log10 ε, floored at machine epsilon.

        Truncations that agree with the reference to rounding can land on
        ε <= 0; those are reported at the floor (run_figure1 logs a warning).
        """
        return float(np.log10(max(self.epsilon, EPSILON_FLOOR)))


@dataclass(frozen=True)
class RabiParams:
    """
    H(t) = (ω0/2)σ_z + 2β cos(ωt)σ_x.
    既定値は ω0/ω = 2/3, β/ω = 0.533, ωT = 6。
    """

    omega0: float = 2.0
    beta: float = 1.6
    omega: float = 3.0
    t_total: float = 2.0
    n_grid: int = 601
    orders: Tuple[int, ...] = tuple(range(13))


@dataclass
class SCIntegrals:
    """S(t_i, t_j), C(t_i, t_j) for i >= j; zero above the diagonal."""

    grid: TimeGrid
    s_kernel: np.ndarray
    c_kernel: np.ndarray

    @property
    def s_conj(self) -> np.ndarray:
        return np.conj(self.s_kernel)

    @property
    def c_conj(self) -> np.ndarray:
        return np.conj(self.c_kernel)

"""
End-to-end property suite behind `app.py verify`.

Each property returns a PropertyResult(value, tolerance, passed); value is the
measured residual, ε or |slope - expected|.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Sequence

import numpy as np

from lib.starframe.frames import (
    acceleration_slope,
    biframe_U,
    build_split,
    lab_U,
    permute_split,
    table_deviation,
    triframe_U,
)
from lib.starframe.models import BiframeForm, RabiParams
from lib.starframe.rabi import (
    frame_equivalence,
    rabi_generator,
    rabi_grid,
    rabi_split,
    rabi_split_three,
    validate_params,
)
from lib.starframe.reference import rk_reference
from lib.starframe.star_core import (
    evolution_from_green,
    exact_resolvent,
    from_generator,
    identity_element,
    make_generator,
    make_grid,
    star_product,
    star_sub,
)

logger = logging.getLogger(__name__)

# permutation / order checks run on at most this many nodes
SMALL_GRID = 201
TRAPEZOID_GRIDS = (51, 101, 201)
# ‖A‖T is about 7 for the Rabi problem; λ‖A‖T must stay below 1
ACCELERATION_LAMBDAS = (0.1, 0.05, 0.025, 0.0125)


@dataclass
class PropertyResult:
    name: str
    value: float
    tolerance: float
    passed: bool

    def as_dict(self) -> Dict[str, object]:
        return {
            "property": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _result(name: str, value: float, tolerance: float) -> PropertyResult:
    passed = bool(np.isfinite(value) and value <= tolerance)
    return PropertyResult(name=name, value=float(value), tolerance=tolerance, passed=passed)


def _small(params: RabiParams) -> RabiParams:
    return replace(params, n_grid=min(params.n_grid, SMALL_GRID))


def prop_frame_equivalence(params: RabiParams) -> PropertyResult:
    eps = frame_equivalence(params)
    return _result("frame_equivalence", max(eps.values()), 1e-4)


def prop_blue_red(params: RabiParams) -> PropertyResult:
    split = rabi_split(params)
    dev = table_deviation(
        biframe_U(split, BiframeForm.RED), biframe_U(split, BiframeForm.BLUE)
    )
    return _result("blue_red", dev, 1e-8)


def prop_triframe_reduction(params: RabiParams) -> PropertyResult:
    """Triframe with a vanishing third part against the biframe of the first two."""
    split = rabi_split(_small(params), closed_form=False)
    zero = make_generator(split.grid, np.zeros_like(split.parts[0].samples))
    three = build_split([*split.parts, zero], unitary=True)
    dev = table_deviation(triframe_U(three), biframe_U(split))
    return _result("triframe_reduction", dev, 1e-10)


def prop_triframe_permutation(params: RabiParams) -> PropertyResult:
    split = rabi_split_three(_small(params), rotated=True)
    base = triframe_U(split)
    worst = 0.0
    for order in itertools.permutations(range(3)):
        worst = max(worst, table_deviation(triframe_U(permute_split(split, order)), base))
    return _result("triframe_permutation", worst, 1e-8)


def constant_split(n_points: int = 101, t_end: float = 2.0):
    """Constant A = -iH split into two constant non-commuting parts."""
    grid = make_grid(t_end, n_points)
    h0 = np.array([[1.0, 0.3], [0.3, -0.5]], dtype=complex)
    h1 = np.array([[0.2, -0.7j], [0.7j, 0.4]], dtype=complex)
    parts = [
        make_generator(grid, np.broadcast_to(-1j * h, (n_points, 2, 2)).copy())
        for h in (h0, h1)
    ]
    return build_split(parts, unitary=True)


def prop_constant_generator(params: RabiParams) -> PropertyResult:
    split = constant_split()
    direct = lab_U(split)
    dev = float(np.max(np.abs(biframe_U(split).bivariate - direct.bivariate)))
    return _result("constant_generator", dev, 1e-10)


def prop_resolvent_identity(params: RabiParams) -> PropertyResult:
    """(I_★ - AΘ) ⋆ G = I_★ for the Rabi generator."""
    split = rabi_split(_small(params), closed_form=False)
    a_theta = from_generator(make_generator(split.grid, sum(p.samples for p in split.parts)))
    unit = identity_element(split.grid, split.dim)
    g = exact_resolvent(a_theta)
    residual = star_sub(star_product(star_sub(unit, a_theta), g), unit)
    value = max(
        float(np.max(np.abs(residual.theta_part))),
        float(np.max(np.abs(residual.delta_part))),
    )
    return _result("resolvent_identity", value, 1e-10)


def trapezoid_errors(params: RabiParams, grids: Sequence[int] = TRAPEZOID_GRIDS) -> List[float]:
    """‖U_lab(T) - U_r(T)‖_F for each grid size."""
    errors = []
    for n in grids:
        p = replace(params, n_grid=n)
        ref = rk_reference(rabi_generator(p), rabi_grid(p))
        table = lab_U(rabi_split(p, closed_form=False))
        errors.append(float(np.linalg.norm(table.univariate[-1] - ref.u_ref[-1])))
    return errors


def prop_trapezoid_order(params: RabiParams) -> PropertyResult:
    steps = [params.t_total / (n - 1) for n in TRAPEZOID_GRIDS]
    slope = float(np.polyfit(np.log(steps), np.log(trapezoid_errors(params)), 1)[0])
    return _result("trapezoid_order", abs(slope - 2.0), 0.2)


def prop_acceleration_order(
    params: RabiParams, orders: Sequence[int] = (1, 2)
) -> PropertyResult:
    """Worst |slope - (2m + 2)| over orders."""
    base = replace(params, n_grid=min(params.n_grid, 101))

    def make_split(lam: float):
        return rabi_split(
            replace(base, omega0=lam * base.omega0, beta=lam * base.beta),
            closed_form=False,
        )

    worst = max(
        abs(acceleration_slope(make_split, m, ACCELERATION_LAMBDAS) - (2 * m + 2))
        for m in orders
    )
    return _result("acceleration_order", worst, 0.3)


PROPERTIES: Dict[str, Callable[[RabiParams], PropertyResult]] = {
    "frame_equivalence": prop_frame_equivalence,
    "blue_red": prop_blue_red,
    "triframe_reduction": prop_triframe_reduction,
    "triframe_permutation": prop_triframe_permutation,
    "constant_generator": prop_constant_generator,
    "resolvent_identity": prop_resolvent_identity,
    "trapezoid_order": prop_trapezoid_order,
    "acceleration_order": prop_acceleration_order,
}


def run_properties(params: RabiParams, names: Sequence[str] | None = None) -> List[PropertyResult]:
    validate_params(params)
    results = []
    for name in names or PROPERTIES:
        t0 = time.time()
        res = PROPERTIES[name](params)
        logger.info(
            f"[verify] property={name} value={res.value:.3e} tol={res.tolerance:.1e} "
            f"passed={res.passed} ms={int((time.time() - t0) * 1000)}"
        )
        results.append(res)
    return results

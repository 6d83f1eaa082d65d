"""
★-product frame changes for non-autonomous linear ODEs U' = A(t)U.

Public API:
  - make_grid(t_end, n_points) -> TimeGrid
  - star_product(x, y) / exact_resolvent(x) / evolution_from_green(g)
  - build_split(parts) -> SplitGenerator
  - std_frame_U(split) / biframe_U(split, form) / triframe_U(split) -> EvolutionTable
  - dyson_truncated_orders(split, frame, orders) -> {m: EvolutionTable}
  - rk_reference(fn, grid, substeps) -> ReferenceSolution
  - epsilon_error(ref, table) -> float, epsilon_components(ref, table) -> (ε, Im overlap)
  - run_trials(trials, dims, rhos, seed) -> list[TrialRow]
  - run_figure1(params) -> list[ConvergenceRecord]
"""

from lib.starframe.errors import (
    ArgumentError,
    ConfigurationError,
    DimensionError,
    MalformedGreenError,
    SingularityError,
    StarframeError,
    StepTooLargeError,
    UndefinedMetricError,
)
from lib.starframe.frames import (
    biframe_U,
    build_split,
    dyson_truncated_orders,
    lab_U,
    std_frame_U,
    triframe_U,
)
from lib.starframe.identities import run_trials
from lib.starframe.models import (
    BiframeForm,
    ConvergenceRecord,
    EvolutionTable,
    Frame,
    RabiParams,
    SplitGenerator,
    StarElement,
    TimeGrid,
)
from lib.starframe.rabi import run_figure1
from lib.starframe.reference import epsilon_components, epsilon_error, rk_reference
from lib.starframe.star_core import (
    evolution_from_green,
    exact_resolvent,
    make_grid,
    star_product,
)

__all__ = [
    "make_grid",
    "star_product",
    "exact_resolvent",
    "evolution_from_green",
    "build_split",
    "lab_U",
    "std_frame_U",
    "biframe_U",
    "triframe_U",
    "dyson_truncated_orders",
    "rk_reference",
    "epsilon_error",
    "epsilon_components",
    "run_trials",
    "run_figure1",
    "BiframeForm",
    "ConvergenceRecord",
    "EvolutionTable",
    "Frame",
    "RabiParams",
    "SplitGenerator",
    "StarElement",
    "TimeGrid",
    "StarframeError",
    "ArgumentError",
    "ConfigurationError",
    "DimensionError",
    "MalformedGreenError",
    "SingularityError",
    "StepTooLargeError",
    "UndefinedMetricError",
]

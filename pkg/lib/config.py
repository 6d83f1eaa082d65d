"""
Run configuration: flat `key = value` files (python-dotenv syntax) validated by pydantic.

Example:
    # figure1.conf
    omega0 = 2.0
    orders = 0,1,2,3
    frames = lab,std,biframe
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError, field_validator

from lib.starframe.errors import ConfigurationError
from lib.starframe.models import Frame, RabiParams


def _split_csv(value: Any) -> Any:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


def _parse_bool(value: Optional[str], default: bool) -> bool:
    if value is None:
        return default
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    return default


class RunConfig(BaseModel):
    model_config = {"extra": "forbid"}

    # Rabi parameters (ratios ω0/ω = 2/3, β/ω = 0.533, ωT = 6)
    omega0: float = 2.0
    beta: float = 1.6
    omega: float = 3.0
    t_total: float = 2.0
    n_grid: int = 601
    orders: List[int] = list(range(13))
    frames: List[Frame] = [Frame.LAB, Frame.STD, Frame.BIFRAME]
    substeps: int = 20

    # matrix identity trials
    seed: int = 0
    trials: int = 100
    dims: List[int] = [2, 4, 8]
    rhos: List[float] = [0.5, 0.9]

    output_path: Optional[Path] = None
    emit_svg: bool = False

    @field_validator("orders", "frames", "dims", "rhos", mode="before")
    @classmethod
    def _lists(cls, v: Any) -> Any:
        return _split_csv(v)

    @field_validator("orders")
    @classmethod
    def _orders(cls, v: List[int]) -> List[int]:
        if not v or min(v) < 0:
            raise ValueError("orders must be non-empty and >= 0")
        return v

    @field_validator("omega0", "beta", "omega", "t_total")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("n_grid")
    @classmethod
    def _n_grid(cls, v: int) -> int:
        if v < 2:
            raise ValueError("n_grid must be >= 2")
        return v

    @field_validator("trials", "substeps")
    @classmethod
    def _non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("rhos")
    @classmethod
    def _rhos(cls, v: List[float]) -> List[float]:
        if any(not 0.0 < r < 1.0 for r in v):
            raise ValueError("every rho must lie in (0, 1)")
        return v

    def to_params(self) -> RabiParams:
        return RabiParams(
            omega0=self.omega0,
            beta=self.beta,
            omega=self.omega,
            t_total=self.t_total,
            n_grid=self.n_grid,
            orders=tuple(self.orders),
        )


def _format_validation_error(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        key = ".".join(str(x) for x in err.get("loc", ()))
        parts.append(f"{key}: {err.get('msg')}")
    return "; ".join(parts)


def build_config(values: Dict[str, Any]) -> RunConfig:
    """
    Raises:
        ConfigurationError: unknown key or invalid value (key named in the message)
    """
    cleaned = {k.strip(): v for k, v in values.items() if v is not None and v != ""}
    if "emit_svg" in cleaned and isinstance(cleaned["emit_svg"], str):
        cleaned["emit_svg"] = _parse_bool(cleaned["emit_svg"], default=False)
    try:
        return RunConfig(**cleaned)
    except ValidationError as e:
        raise ConfigurationError(
            f"invalid config: {_format_validation_error(e)}",
            meta={"keys": [".".join(str(x) for x in err["loc"]) for err in e.errors()]},
        ) from e


def load_config(path: Optional[Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Read a config file (if given), apply CLI overrides, validate."""
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        values.update(dotenv_values(path))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return build_config(values)


def check_writable(path: Path) -> None:
    """
    Raises:
        ConfigurationError: parent directory missing or not writable
    """
    path = Path(path)
    parent = path.resolve().parent
    if not parent.is_dir():
        raise ConfigurationError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise ConfigurationError(f"output directory is not writable: {parent}")
    if path.exists() and not os.access(path, os.W_OK):
        raise ConfigurationError(f"output file is not writable: {path}")

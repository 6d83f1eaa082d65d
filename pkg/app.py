from __future__ import annotations


import os
from pathlib import Path
from dotenv import load_dotenv

_ENV = Path(__file__).resolve().parent / ".env"
_ENV_LOCAL = Path(__file__).resolve().parent / ".env.local"
if _ENV.exists():
    load_dotenv(dotenv_path=_ENV, override=True)
if _ENV_LOCAL.exists():
    load_dotenv(dotenv_path=_ENV_LOCAL, override=True)

import csv
import logging
import time
from typing import Any, Dict, Iterable, List, Optional, Sequence

import click

from lib.config import RunConfig, check_writable, load_config
from lib.starframe.errors import ConfigurationError, StarframeError
from lib.starframe.identities import run_trials
from lib.starframe.models import Frame
from lib.starframe.properties import PROPERTIES, run_properties
from lib.starframe.rabi import quadrature_floor, rabi_reference, run_figure1

logging.basicConfig(
    level=getattr(logging, (os.getenv("STARFRAME_LOG_LEVEL") or "INFO").upper(), logging.INFO)
)
logger = logging.getLogger("starframe")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2

# identities: residual tolerance per check, slope tolerance
RESIDUAL_TOL: Dict[str, float] = {
    "simple_split": 1e-11,
    "symmetric_split": 1e-11,
    "triframe": 1e-11,
    "square_trick": 1e-11,
    "cube_trick": 1e-11,
    "acceleration": 1e-10,
}
SLOPE_TOL = 0.2


# =========================
# CSV helpers
# =========================


def _fmt(value: Any) -> str:
    """17 significant digits for floats; empty cell for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.16e}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Dict[str, Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in header])


# =========================
# Shared plumbing
# =========================


def _resolve(
    config_path: Optional[Path],
    out: Optional[Path],
    default_name: str,
    overrides: Dict[str, Any],
) -> tuple[RunConfig, Path]:
    cfg = load_config(config_path, overrides)
    out_path = Path(out) if out else (cfg.output_path or Path(default_name))
    check_writable(out_path)
    if cfg.emit_svg:
        check_writable(out_path.with_suffix(".svg"))
    return cfg, out_path


def _overrides(seed: Optional[int], grid: Optional[int], orders: Optional[str]) -> Dict[str, Any]:
    return {"seed": seed, "n_grid": grid, "orders": orders}


def _run(fn, *args) -> int:
    """Map library errors to the exit-code contract."""
    try:
        return fn(*args)
    except ConfigurationError as e:
        click.echo(f"config error: {e}", err=True)
        return EXIT_CONFIG
    except OSError as e:
        click.echo(f"io error: {e}", err=True)
        return EXIT_CONFIG
    except StarframeError as e:
        logger.error(f"computation failed: {e} meta={e.meta}")
        return EXIT_VERIFY


_common = [
    click.option("--config", "config_path", type=click.Path(path_type=Path), default=None),
    click.option("--out", type=click.Path(path_type=Path), default=None),
    click.option("--seed", type=int, default=None),
    click.option("--grid", type=int, default=None, help="Override n_grid."),
    click.option("--orders", type=str, default=None, help="Comma-separated orders."),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
def cli() -> None:
    """Frame-change experiments for time-ordered exponentials."""


# =========================
# identities
# =========================


def _identities(config_path, out, overrides) -> int:
    cfg, out_path = _resolve(config_path, out, "identities.csv", overrides)
    rows = run_trials(cfg.trials, cfg.dims, cfg.rhos, seed=cfg.seed)

    failed: List[str] = []
    for row in rows:
        ok = row.residual <= RESIDUAL_TOL[row.check]
        if row.slope is not None and row.expected_slope is not None:
            ok = ok and abs(row.slope - row.expected_slope) <= SLOPE_TOL
        if not ok:
            failed.append(f"{row.check}(seed={row.seed}, dim={row.dim}, rho={row.rho})")

    write_csv(
        out_path,
        ["check", "seed", "dim", "rho", "residual", "slope"],
        (r.as_dict() for r in rows),
    )
    worst = max((r.residual for r in rows), default=0.0)
    click.echo(f"rows={len(rows)} max_residual={worst:.3e} failed={len(failed)}")
    if failed:
        for name in failed[:10]:
            click.echo(f"FAILED {name}", err=True)
        return EXIT_VERIFY
    return EXIT_OK


@cli.command()
@common_options
def identities(config_path, out, seed, grid, orders) -> None:
    """Matrix identity suite over seeded random contractions."""
    raise SystemExit(_run(_identities, config_path, out, _overrides(seed, grid, orders)))


# =========================
# figure1
# =========================


def _figure1(config_path, out, overrides) -> int:
    cfg, out_path = _resolve(config_path, out, "figure1.csv", overrides)
    params = cfg.to_params()
    t0 = time.time()
    records = run_figure1(params, frames=cfg.frames, substeps=cfg.substeps)
    write_csv(
        out_path,
        ["frame", "m", "epsilon", "log10_epsilon"],
        (
            {
                "frame": r.frame,
                "m": r.m,
                "epsilon": r.epsilon,
                "log10_epsilon": r.log10_epsilon,
            }
            for r in records
        ),
    )
    if cfg.emit_svg:
        from lib.svg_plot import write_convergence_svg

        floor = quadrature_floor(params, rabi_reference(params, cfg.substeps))
        write_convergence_svg(records, out_path.with_suffix(".svg"), floor=floor)
    frames = ",".join(Frame(f).value for f in cfg.frames)
    logger.info(
        f"[figure1] rows={len(records)} frames={frames} "
        f"ms={int((time.time() - t0) * 1000)}"
    )
    click.echo(f"rows={len(records)} out={out_path}")
    return EXIT_OK


@cli.command()
@common_options
def figure1(config_path, out, seed, grid, orders) -> None:
    """ε against truncation order for each frame (Rabi problem)."""
    raise SystemExit(_run(_figure1, config_path, out, _overrides(seed, grid, orders)))


# =========================
# verify
# =========================


def _verify(config_path, out, overrides) -> int:
    cfg, out_path = _resolve(config_path, out, "verify.csv", overrides)
    results = run_properties(cfg.to_params())
    write_csv(
        out_path,
        ["property", "value", "tolerance", "passed"],
        (r.as_dict() for r in results),
    )
    failed = [r.name for r in results if not r.passed]
    click.echo(f"properties={len(results)} failed={len(failed)}")
    for name in failed:
        click.echo(f"FAILED {name}", err=True)
    return EXIT_VERIFY if failed else EXIT_OK


@cli.command()
@common_options
@click.option("--list", "list_only", is_flag=True, help="Print property names and exit.")
def verify(config_path, out, seed, grid, orders, list_only) -> None:
    """Frame-equivalence, symmetry and order properties end to end."""
    if list_only:
        for name in PROPERTIES:
            click.echo(name)
        raise SystemExit(EXIT_OK)
    raise SystemExit(_run(_verify, config_path, out, _overrides(seed, grid, orders)))


if __name__ == "__main__":
    cli()

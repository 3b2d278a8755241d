"""
Data tables behind the figures
Each builder returns a Table; write_table renders it as CSV (config echo as
'# key=value' lines, header row, 17 significant digits) or JSON
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Literal, TextIO

import numpy as np

from errors import InvalidInputError, NonPhysicalStateError
from mutual_info import SQRT3, avg_mi_classical, avg_mi_isotropic
from rsp import (
    average_over_relevant,
    closed_form_averages,
    isotropic_nonmmms_state,
    pure_state,
    relative_differences,
)
from sphere_avg import DEFAULT_QUADRATURE, QuadratureSpec

logger = logging.getLogger(__name__)

FIGURE_IDS = (1, 2, 3, 4, 5, 6)
DEFAULT_STEP = 0.05
DEFAULT_GRID = 20
DIGITS = 17


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[self.columns.index(name)] for row in self.rows], dtype=float)

    def as_dict(self) -> dict:
        return {"name": self.name, "columns": self.columns, "rows": self.rows}


def unit_grid(step: float, upper: float = 1.0) -> np.ndarray:
    """0, step, ..., upper with the end point hit exactly."""
    if step <= 0 or step > upper:
        raise InvalidInputError(f"grid step must lie in (0, {upper}], got {step}")
    return np.linspace(0.0, upper, int(round(upper / step)) + 1)


def figure_1(step: float = DEFAULT_STEP) -> Table:
    """Average mutual information of rho_2iso^0 and rho_3iso against kappa."""
    table = Table("figure-1", ["kappa", "I_2iso0", "I_3iso"])
    for kappa in unit_grid(step):
        table.rows.append([kappa, avg_mi_classical(kappa), avg_mi_isotropic(kappa)])
    return table


def figure_2(step: float = DEFAULT_STEP) -> Table:
    """<F> against <G> for both extremal classes, parametrized by kappa."""
    table = Table("figure-2", ["kappa", "F_3iso", "G_3iso", "F_2iso0", "G_2iso0"])
    for kappa in unit_grid(step):
        table.rows.append(
            [kappa, *closed_form_averages("iso3", kappa), *closed_form_averages("classical", kappa)]
        )
    return table


def figure_3(step: float = DEFAULT_STEP, normalize: str = "isotropic") -> Table:
    """Relative gap between the two classes in gain and in figure of merit."""
    table = Table("figure-3", ["kappa", "delta_G", "delta_F"])
    for kappa in unit_grid(step)[1:]:
        table.rows.append([kappa, *relative_differences(kappa, normalize)])
    return table


def figure_4(step: float = DEFAULT_STEP, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> Table:
    """Pure states against the Schmidt coefficient."""
    table = Table("figure-4", ["lambda", "F", "F_opt", "G_U"])
    for lam in unit_grid(step):
        averages = average_over_relevant(pure_state(lam), quad=quad)
        table.rows.append([lam, averages.F_U, averages.F_opt, averages.gain])
    return table


def _isotropic_family_grid(grid: int):
    if grid < 2:
        raise InvalidInputError(f"grid must have at least 2 points per axis, got {grid}")
    for kappa in np.linspace(0.0, SQRT3, grid):
        for b in np.linspace(0.0, 1.0, grid):
            try:
                yield kappa, b, isotropic_nonmmms_state(kappa, b)
            except NonPhysicalStateError:
                continue


def figure_5(grid: int = DEFAULT_GRID, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> Table:
    """Optimized protocol on the isotropic-E family over the physical (kappa, b) region."""
    table = Table("figure-5", ["kappa", "b", "F_opt", "G_U", "useful_fraction"])
    for kappa, b, state in _isotropic_family_grid(grid):
        averages = average_over_relevant(state, quad=quad)
        table.rows.append([kappa, b, averages.F_opt, averages.gain, averages.useful_fraction])
    return table


def figure_6(grid: int = DEFAULT_GRID, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> Table:
    """<F> of the standard protocol minus <F_opt>."""
    table = Table("figure-6", ["kappa", "b", "delta_F"])
    for kappa, b, state in _isotropic_family_grid(grid):
        averages = average_over_relevant(state, quad=quad)
        table.rows.append([kappa, b, averages.F_U - averages.F_opt])
    return table


def build_figure(
    figure_id: int,
    step: float = DEFAULT_STEP,
    grid: int = DEFAULT_GRID,
    normalize: str = "isotropic",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> Table:
    logger.info("[figure] building figure %s", figure_id)
    if figure_id == 1:
        return figure_1(step)
    if figure_id == 2:
        return figure_2(step)
    if figure_id == 3:
        return figure_3(step, normalize)
    if figure_id == 4:
        return figure_4(step, quad)
    if figure_id == 5:
        return figure_5(grid, quad)
    if figure_id == 6:
        return figure_6(grid, quad)
    raise InvalidInputError(f"unknown figure {figure_id}, expected one of {FIGURE_IDS}")


# --------------------------------------------------------------------
#  OUTPUT
# --------------------------------------------------------------------
def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), f".{DIGITS}g")
    return str(value)


def write_table(
    table: Table,
    stream: TextIO,
    fmt: Literal["csv", "json"] = "csv",
    config: dict | None = None,
) -> None:
    config = config or {}
    if fmt == "json":
        json.dump({"config": config, **table.as_dict()}, stream, indent=2)
        stream.write("\n")
        return
    if fmt != "csv":
        raise InvalidInputError(f"unknown output format {fmt!r}")

    for key, value in config.items():
        stream.write(f"# {key}={format_value(value)}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])


def render_table(table: Table, fmt: str = "csv", config: dict | None = None) -> str:
    buffer = io.StringIO()
    write_table(table, buffer, fmt, config)
    return buffer.getvalue()

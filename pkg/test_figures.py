import io
import json
import math

import numpy as np
import pytest

from errors import InvalidInputError
from figures import (
    Table,
    build_figure,
    figure_1,
    figure_2,
    figure_3,
    figure_4,
    figure_5,
    figure_6,
    format_value,
    render_table,
    unit_grid,
    write_table,
)
from mutual_info import avg_mi_series
from sphere_avg import QuadratureSpec

QUAD = QuadratureSpec(16, 32)


def test_unit_grid_hits_end_point():
    grid = unit_grid(0.05)
    assert len(grid) == 21
    assert grid[-1] == 1.0
    with pytest.raises(InvalidInputError):
        unit_grid(0.0)


def test_figure_1_columns_and_ordering():
    table = figure_1(0.25)
    assert table.columns == ["kappa", "I_2iso0", "I_3iso"]
    assert len(table.rows) == 5
    assert table.rows[0][1:] == [0.0, 0.0]
    np.testing.assert_array_less(table.column("I_3iso")[1:], table.column("I_2iso0")[1:])
    assert table.rows[-1][1] == pytest.approx(avg_mi_series("classical", 1.0), rel=1e-10)


def test_figure_2_end_points():
    table = figure_2(0.5)
    last = dict(zip(table.columns, table.rows[-1]))
    assert last["F_2iso0"] == pytest.approx(0.4427, abs=1e-4)
    assert last["F_3iso"] == pytest.approx(1.0 - math.log2(1.0 + 1.0 / math.sqrt(3.0)))


def test_figure_3_peaks():
    table = figure_3(0.05)
    assert table.rows[0][0] > 0.0
    assert table.column("delta_G").max() == pytest.approx(0.0885, abs=5e-4)
    assert table.column("delta_F").max() == pytest.approx(0.2926, abs=5e-4)
    classical = figure_3(0.05, "classical")
    assert 0.07 < classical.column("delta_G").max() < 0.09
    assert 0.2 < classical.column("delta_F").max() < 0.25


def test_figure_4_bell_point():
    table = figure_4(0.5, QUAD)
    assert table.columns == ["lambda", "F", "F_opt", "G_U"]
    middle = table.rows[1]
    # lambda = 0.5 is not maximally entangled
    assert 0.0 < middle[1] < 1.0
    product = table.rows[-1]
    assert product[3] == pytest.approx(0.0, abs=1e-12)


def test_figure_5_skips_non_physical_points():
    table = figure_5(3, QUAD)
    assert len(table.rows) == 6
    for kappa, b, f_opt, gain, fraction in table.rows:
        assert kappa / math.sqrt(3.0) + b <= 1.0 + 1e-9
        assert 0.0 <= fraction <= 1.0


def test_figure_6_vanishes_where_correlations_dominate():
    table = figure_6(5, QUAD)
    for kappa, b, delta in table.rows:
        if kappa / math.sqrt(3.0) > b:
            assert delta == pytest.approx(0.0, abs=1e-12)
        else:
            assert delta >= -1e-12
    assert table.column("delta_F").max() > 0.0


def test_build_figure_dispatch():
    assert build_figure(1, step=0.5).name == "figure-1"
    with pytest.raises(InvalidInputError):
        build_figure(7)


def test_format_value():
    assert format_value(True) == "1"
    assert format_value(np.int64(3)) == "3"
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value("Iso3") == "Iso3"


def test_csv_output_echoes_config():
    table = Table("t", ["kappa", "value"], [[0.0, 1.0], [0.5, 0.25]])
    text = render_table(table, "csv", {"seed": 7, "format": "csv"})
    lines = text.splitlines()
    assert lines[:3] == ["# seed=7", "# format=csv", "kappa,value"]
    assert lines[3:] == ["0,1", "0.5,0.25"]


def test_json_output():
    table = Table("t", ["kappa"], [[0.5]])
    stream = io.StringIO()
    write_table(table, stream, "json", {"seed": 1})
    record = json.loads(stream.getvalue())
    assert record == {"config": {"seed": 1}, "name": "t", "columns": ["kappa"], "rows": [[0.5]]}
    with pytest.raises(InvalidInputError):
        write_table(table, stream, "xlsx")

import math

import numpy as np
import pandas as pd
import pytest

from modules import data
from modules.control import RunTrace
from modules.dp import DpTables, GridSpec, RateGrid, TablesMeta, build_grid
from modules.montecarlo import McConfig
from modules.oracle import solve_exact
from modules.problems import Ruggedness


@pytest.fixture
def small_tables():
    grid = build_grid(GridSpec(mult_base=1e-2, mult_alpha=10 ** 0.25, mult_count=9), 0, 6)
    return solve_exact(Ruggedness(6), grid, 2)


def test_tables_round_trip(tmp_path, small_tables):
    data.write_tables(small_tables, tmp_path)
    back = data.read_tables(tmp_path)
    assert back.meta == small_tables.meta
    assert np.array_equal(back.T_star, small_tables.T_star)
    assert np.array_equal(back.P_opt, small_tables.P_opt, equal_nan=True)
    for a, b in zip(back.T, small_tables.T):
        assert np.array_equal(a, b)
    for f in range(0, 6):
        assert np.array_equal(back.grid.rates(f), small_tables.grid.rates(f))


def test_infinite_times_survive_csv(tmp_path):
    rates = np.array([0.1, 0.2])
    rows = (np.array([2.0, math.inf]), np.array([math.inf, math.inf]))
    tables = DpTables(RateGrid(0, 2, (rates, rates)), rows, np.array([2.0, math.inf, 0.0]),
                      np.array([0.1, 0.1, np.nan]),
                      TablesMeta("onemax", 2, 1, "mc", McConfig(100, 50, 7)))
    data.write_tables(tables, tmp_path)
    text = (tmp_path / "tables.csv").read_text()
    assert "inf" in text
    back = data.read_tables(tmp_path / "tables.csv")
    assert back.row(1).tolist() == [math.inf, math.inf]
    assert back.t_star(1) == math.inf
    assert back.meta.mc == McConfig(100, 50, 7)


def test_csv_format(tmp_path, small_tables):
    data.write_tables(small_tables, tmp_path)
    raw = (tmp_path / "optimal.csv").read_bytes()
    assert b"\r\n" not in raw
    assert raw.splitlines()[0] == b"fitness,T_star_iterations,T_star_evaluations,p_opt"
    df = pd.read_csv(tmp_path / "tables.csv")
    assert list(df.columns) == ["fitness", "rate", "T_iterations", "T_evaluations"]
    assert np.allclose(df["T_evaluations"], df["T_iterations"] * 2)


def test_missing_column_is_named(tmp_path, small_tables):
    data.write_tables(small_tables, tmp_path)
    df = pd.read_csv(tmp_path / "tables.csv").drop(columns=["rate"])
    df.to_csv(tmp_path / "tables.csv", index=False)
    with pytest.raises(data.SchemaError, match="rate"):
        data.read_tables(tmp_path)


def test_missing_meta(tmp_path, small_tables):
    data.write_tables(small_tables, tmp_path)
    (tmp_path / "tables.meta").unlink()
    with pytest.raises(data.SchemaError):
        data.read_tables(tmp_path)


def traces():
    a = RunTrace("ruggedness", 6, 2, iteration=[1, 2], fitness=[3, 3], rate=[0.1, 0.2],
                 best_offspring_fitness=[2, 6], success=[False, True], optimum_at=2)
    b = RunTrace("ruggedness", 6, 2, iteration=[1], fitness=[0], rate=[0.05],
                 best_offspring_fitness=[1], success=[True])
    return [a, b]


def test_traces_round_trip(tmp_path):
    data.write_traces(traces(), tmp_path, "ab")
    back = data.read_traces(tmp_path)
    assert sorted(back) == [0, 1]
    assert back[0].rate == [0.1, 0.2]
    assert back[0].success == [False, True]
    assert back[1].best_offspring_fitness == [1]
    assert back[1].problem == "ruggedness"


def test_runs_csv(tmp_path):
    data.write_traces(traces(), tmp_path, "ab")
    df = pd.read_csv(tmp_path / "runs.csv", dtype=str)
    assert df["iterations_to_optimum"].tolist() == ["2", "budget_exhausted"]
    assert df["run_id"].tolist() == ["0", "1"]


def test_traces_need_problem(tmp_path):
    data.write_traces(traces(), tmp_path, "ab")
    (tmp_path / "trace.meta").unlink()
    with pytest.raises(data.SchemaError):
        data.read_traces(tmp_path)
    assert len(data.read_traces(tmp_path, "ruggedness", 6, 2)) == 2


def test_trace_missing_column(tmp_path):
    pd.DataFrame({"run_id": [0], "iteration": [1]}).to_csv(tmp_path / "trace.csv", index=False)
    with pytest.raises(data.SchemaError, match="fitness"):
        data.read_traces(tmp_path, "onemax", 4, 1)


def test_ledger(tmp_path):
    cfg = {"problem.name": "onemax", "problem.n": 10, "ea.lambda": 4, "seed": 1}
    eid = data.insert_experiment(tmp_path, "solve", cfg, {"lower_bound_iterations": 12.5})
    data.insert_artifact(tmp_path, eid, tmp_path / "tables.csv", 40)
    rows = data.list_experiments(tmp_path)
    assert len(rows) == 1
    assert rows[0].label == "solve-onemax-n10-l4"
    assert "lower_bound_iterations = 12.5" in rows[0].summary
    assert data.list_experiments(tmp_path, command="simulate") == []

import math
import os
import time
import uuid
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from slugify import slugify
from sqlalchemy import create_engine, text

from modules.config import format_kv, parse_kv_text
from modules.control import RunTrace
from modules.dp import DpTables, RateGrid, TablesMeta, argmin_rate
from modules.montecarlo import McConfig

DB_NAME = "experiments.db"

SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS experiments (
    id TEXT PRIMARY KEY,
    label TEXT,
    command TEXT,
    problem TEXT,
    n INTEGER,
    lam INTEGER,
    seed INTEGER,
    config TEXT,
    summary TEXT,
    created_at TEXT
);
CREATE TABLE IF NOT EXISTS artifacts (
    id TEXT PRIMARY KEY,
    experiment_id TEXT,
    path TEXT,
    rows INTEGER,
    FOREIGN KEY(experiment_id) REFERENCES experiments(id) ON DELETE CASCADE
);
"""


class SchemaError(ValueError):
    pass


# ---- ledger ----

@lru_cache(maxsize=None)
def get_engine(out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    return create_engine(f"sqlite:///{os.path.join(out_dir, DB_NAME)}", future=True)


def init_db(out_dir) -> None:
    with get_engine(str(out_dir)).begin() as conn:
        for stmt in SCHEMA_SQL.strip().split(";"):
            s = stmt.strip()
            if s:
                conn.execute(text(s))


def now_iso():
    return time.strftime("%Y-%m-%dT%H:%M:%S")


def insert_experiment(out_dir, command: str, cfg: dict, summary: dict) -> str:
    init_db(out_dir)
    rid = str(uuid.uuid4())
    label = slugify(f"{command} {cfg['problem.name']} n{cfg['problem.n']} l{cfg['ea.lambda']}")
    with get_engine(str(out_dir)).begin() as conn:
        conn.execute(text("""
            INSERT INTO experiments(id,label,command,problem,n,lam,seed,config,summary,created_at)
            VALUES(:id,:label,:command,:problem,:n,:lam,:seed,:config,:summary,:created_at)
        """), {
            "id": rid,
            "label": label,
            "command": command,
            "problem": cfg["problem.name"],
            "n": int(cfg["problem.n"]),
            "lam": int(cfg["ea.lambda"]),
            "seed": int(cfg["seed"]),
            "config": format_kv(cfg),
            "summary": format_kv(summary),
            "created_at": now_iso(),
        })
    return rid


def insert_artifact(out_dir, experiment_id: str, path, rows: int):
    with get_engine(str(out_dir)).begin() as conn:
        conn.execute(text("INSERT INTO artifacts(id,experiment_id,path,rows) VALUES(:id,:eid,:path,:rows)"), {
            "id": str(uuid.uuid4()), "eid": experiment_id, "path": str(path), "rows": int(rows),
        })


def list_experiments(out_dir, command: Optional[str] = None):
    init_db(out_dir)
    q = "SELECT id,label,command,problem,n,lam,seed,summary,created_at FROM experiments"
    params = {}
    if command:
        q += " WHERE command=:command"
        params["command"] = command
    q += " ORDER BY created_at DESC"
    with get_engine(str(out_dir)).begin() as conn:
        return conn.execute(text(q), params).fetchall()


# ---- csv ----

def write_csv(df: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n", na_rep="")
    return path


def read_csv(path, required) -> pd.DataFrame:
    path = Path(path)
    df = pd.read_csv(path, float_precision="round_trip", keep_default_na=True)
    for col in required:
        if col not in df.columns:
            raise SchemaError(f"{path.name}: Spalte {col!r} fehlt")
    return df


def _resolve(path, default_name: str) -> Path:
    path = Path(path)
    return path / default_name if path.is_dir() else path


# ---- dp tables ----

def tables_frame(tables: DpTables) -> pd.DataFrame:
    rows = []
    lam = tables.meta.lam
    for f in range(tables.f_min, tables.f_max):
        for p, t in zip(tables.grid.rates(f), tables.row(f)):
            rows.append((f, float(p), float(t), float(t) * lam))
    return pd.DataFrame(rows, columns=["fitness", "rate", "T_iterations", "T_evaluations"])


def optimal_frame(tables: DpTables) -> pd.DataFrame:
    fitness = np.arange(tables.f_min, tables.f_max + 1)
    return pd.DataFrame({
        "fitness": fitness,
        "T_star_iterations": tables.T_star,
        "T_star_evaluations": tables.T_star * tables.meta.lam,
        "p_opt": tables.P_opt,
    })


def _meta_values(meta: TablesMeta, grid: RateGrid) -> dict:
    values = {"problem": meta.problem, "n": meta.n, "lambda": meta.lam, "provider": meta.provider,
              "f_min": grid.f_min, "f_max": grid.f_max}
    if meta.mc is not None:
        values.update({"mc.iterations": meta.mc.iterations, "mc.successes": meta.mc.successes,
                       "mc.seed": meta.mc.seed})
    return values


def write_tables(tables: DpTables, out_dir) -> list:
    out_dir = Path(out_dir)
    paths = [
        write_csv(tables_frame(tables), out_dir / "tables.csv"),
        write_csv(optimal_frame(tables), out_dir / "optimal.csv"),
    ]
    meta_path = out_dir / "tables.meta"
    with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_kv(_meta_values(tables.meta, tables.grid)))
    return paths + [meta_path]


def read_tables(path) -> DpTables:
    """Baut DpTables aus ``tables.csv`` und der Begleitdatei ``tables.meta`` wieder auf."""
    tables_path = _resolve(path, "tables.csv")
    meta_path = tables_path.with_name("tables.meta")
    try:
        meta_values = parse_kv_text(meta_path.read_text(encoding="utf-8"), str(meta_path))
    except OSError as e:
        raise SchemaError(f"{meta_path.name} fehlt neben {tables_path.name}") from e
    for key in ("problem", "n", "lambda", "provider", "f_min", "f_max"):
        if key not in meta_values:
            raise SchemaError(f"{meta_path.name}: Eintrag {key!r} fehlt")
    mc = None
    if "mc.iterations" in meta_values:
        mc = McConfig(int(meta_values["mc.iterations"]), int(meta_values["mc.successes"]),
                      int(meta_values["mc.seed"]))
    meta = TablesMeta(meta_values["problem"], int(meta_values["n"]), int(meta_values["lambda"]),
                      meta_values["provider"], mc)
    f_min, f_max = int(meta_values["f_min"]), int(meta_values["f_max"])

    df = read_csv(tables_path, ["fitness", "rate", "T_iterations"])
    rates, T = [], []
    for f in range(f_min, f_max):
        level = df[df["fitness"] == f].sort_values("rate")
        if level.empty:
            raise SchemaError(f"{tables_path.name}: keine Zeilen für Fitness {f}")
        rates.append(level["rate"].to_numpy(dtype=float))
        T.append(level["T_iterations"].to_numpy(dtype=float))
    grid = RateGrid(f_min, f_max, tuple(rates))

    T_star = np.zeros(f_max - f_min + 1)
    P_opt = np.full(f_max - f_min + 1, np.nan)
    for i, row in enumerate(T):
        best = argmin_rate(row)
        T_star[i] = row[best]
        P_opt[i] = rates[i][best]
    return DpTables(grid, tuple(T), T_star, P_opt, meta)


# ---- traces ----

TRACE_COLUMNS = ["run_id", "iteration", "fitness", "rate", "best_offspring_fitness", "success"]


def trace_frame(traces) -> pd.DataFrame:
    frames = []
    for run_id, tr in enumerate(traces):
        frames.append(pd.DataFrame({
            "run_id": np.full(len(tr), run_id, dtype=np.int64),
            "iteration": np.asarray(tr.iteration, dtype=np.int64),
            "fitness": np.asarray(tr.fitness, dtype=np.int64),
            "rate": np.asarray(tr.rate, dtype=float),
            "best_offspring_fitness": np.asarray(tr.best_offspring_fitness, dtype=np.int64),
            "success": np.asarray(tr.success, dtype=bool),
        }))
    if not frames:
        return pd.DataFrame(columns=TRACE_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def runs_frame(traces) -> pd.DataFrame:
    return pd.DataFrame({
        "run_id": range(len(traces)),
        "iterations_to_optimum": [
            tr.optimum_at if tr.optimum_at is not None else "budget_exhausted" for tr in traces
        ],
    })


def write_traces(traces, out_dir, policy: str) -> list:
    out_dir = Path(out_dir)
    paths = [
        write_csv(trace_frame(traces), out_dir / "trace.csv"),
        write_csv(runs_frame(traces), out_dir / "runs.csv"),
    ]
    if traces:
        meta_path = out_dir / "trace.meta"
        with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_kv({"problem": traces[0].problem, "n": traces[0].n,
                                "lambda": traces[0].lam, "policy": policy}))
        paths.append(meta_path)
    return paths


def read_traces(path, problem: Optional[str] = None, n: Optional[int] = None,
                lam: Optional[int] = None) -> dict:
    """Läufe aus ``trace.csv``, nach run_id.

    Problem, n und lambda stammen aus ``trace.meta``, falls vorhanden,
    sonst aus den Argumenten.
    """
    trace_path = _resolve(path, "trace.csv")
    meta_path = trace_path.with_name("trace.meta")
    if meta_path.exists():
        meta = parse_kv_text(meta_path.read_text(encoding="utf-8"), str(meta_path))
        problem, n, lam = meta["problem"], int(meta["n"]), int(meta["lambda"])
    if problem is None or n is None or lam is None:
        raise SchemaError(f"{trace_path.name}: Problem, n und lambda unbekannt")

    df = read_csv(trace_path, TRACE_COLUMNS)
    traces = {}
    for run_id, group in df.groupby("run_id", sort=True):
        group = group.sort_values("iteration")
        traces[int(run_id)] = RunTrace(
            problem, n, lam,
            iteration=group["iteration"].astype(int).tolist(),
            fitness=group["fitness"].astype(int).tolist(),
            rate=group["rate"].astype(float).tolist(),
            best_offspring_fitness=group["best_offspring_fitness"].astype(int).tolist(),
            success=group["success"].astype(bool).tolist(),
        )
    return traces


# ---- analysis outputs ----

def heatmap_frame(cells) -> pd.DataFrame:
    return pd.DataFrame(
        [(c.f, c.p, c.C, c.alpha_f, c.T) for c in cells],
        columns=["fitness", "rate", "C", "alpha_f", "T"],
    )


def regret_frame(points_by_run: dict) -> pd.DataFrame:
    rows = []
    for run_id, points in sorted(points_by_run.items()):
        for pt in points:
            rows.append((run_id, pt.iteration, pt.fitness, pt.rate, pt.mapped_rate, pt.regret,
                         math.isinf(pt.regret)))
    return pd.DataFrame(rows, columns=["run_id", "iteration", "fitness", "rate", "mapped_rate",
                                       "regret", "infinite"])


def lowerbound_frame(rows) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=["problem", "n", "lambda", "T_iterations", "T_evaluations",
                                       "static_T_iterations"])

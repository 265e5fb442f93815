import logging
from pathlib import Path

import numpy as np

from commands.common import emit, record
from modules import data
from modules.analysis import mean_mapped_rate, regret_trace

logger = logging.getLogger(__name__)


def run(cfg, args) -> int:
    tables = data.read_tables(args.tables or cfg.out_dir)
    traces = data.read_traces(args.trace or cfg.out_dir, cfg.problem_name, cfg.n, cfg.lam)
    points = {run_id: regret_trace(tr, tables, exact=args.exact_rates) for run_id, tr in traces.items()}

    df = data.regret_frame(points)
    path = data.write_csv(df, Path(cfg.out_dir) / "regret.csv")
    finite = df.loc[~df["infinite"], "regret"]
    tail_rates = [r for r in (mean_mapped_rate(pts) for pts in points.values()) if r is not None]
    summary = {
        "runs": len(points),
        "iterations": len(df),
        "infinite_iterations": int(df["infinite"].sum()),
        "median_finite_regret": float(np.median(finite)) if len(finite) else float("nan"),
        # mean over runs of the mapped rate in the last 20% of each run
        "tail_mapped_rate": float(np.mean(tail_rates)) if tail_rates else float("nan"),
    }
    emit(summary)
    record(cfg, "regret", summary, [path], [len(df)])
    return 0

import logging
import math
from pathlib import Path

from commands.common import emit, record
from commands.solve import solve_tables
from modules import data
from modules.analysis import lower_bound, static_runtime
from modules.problems import initial_fitness_distribution, make_problem

logger = logging.getLogger(__name__)


def run(cfg, args) -> int:
    if args.tables:
        tables = data.read_tables(args.tables)
        problem = make_problem(tables.meta.problem, tables.meta.n)
        jobs = [(tables.meta.lam, tables)]
    else:
        problem = cfg.make_problem()
        jobs = [(lam, None) for lam in cfg.lambdas]
    init = initial_fitness_distribution(problem)

    rows = []
    for lam, tables in jobs:
        if tables is None:
            tables = solve_tables(cfg, problem, lam, cfg.provider)
        bound = lower_bound(tables, init)
        static = static_runtime(problem, lam, 1 / problem.n, workers=cfg.workers)
        logger.info("lambda=%d: Schranke %.6g, statisch 1/n %.6g", lam, bound, static)
        rows.append((problem.name, problem.n, lam, bound, bound * lam, static))

    df = data.lowerbound_frame(rows)
    path = data.write_csv(df, Path(cfg.out_dir) / "lowerbound.csv")
    for _, _, lam, bound, _, static in rows:
        ratio = static / bound if bound > 0 and not math.isinf(bound) else float("nan")
        emit({"lambda": lam, "lower_bound_iterations": bound, "static_ratio": ratio})
    record(cfg, "lowerbound", {"lambdas": ",".join(str(r[2]) for r in rows)}, [path], [len(df)])
    return 0

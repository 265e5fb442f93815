import logging

from commands.common import emit, record
from modules import data
from modules.analysis import lower_bound
from modules.dp import DpTables, TablesMeta, build_grid, solve
from modules.montecarlo import MonteCarloProvider
from modules.oracle import solve_exact
from modules.problems import initial_fitness_distribution

logger = logging.getLogger(__name__)


def solve_tables(cfg, problem, lam: int, provider: str) -> DpTables:
    grid = build_grid(cfg.grid, problem.f_min, problem.f_max)
    logger.info("Löse %s n=%d lambda=%d mit %s (%d Raten, %d Worker)",
                problem.name, problem.n, lam, provider, len(grid.rates(problem.f_min)), cfg.workers)
    if provider == "exact":
        return solve_exact(problem, grid, lam, workers=cfg.workers)
    meta = TablesMeta(problem.name, problem.n, lam, "mc", cfg.mc)
    return solve(problem, grid, lam, MonteCarloProvider(problem, lam, cfg.mc),
                 meta=meta, workers=cfg.workers)


def run(cfg, args, provider=None) -> int:
    provider = provider or cfg.provider
    problem = cfg.make_problem()
    tables = solve_tables(cfg, problem, cfg.lam, provider)
    paths = data.write_tables(tables, cfg.out_dir)

    bound = lower_bound(tables, initial_fitness_distribution(problem))
    summary = {
        "problem": problem.name,
        "n": problem.n,
        "lambda": cfg.lam,
        "provider": provider,
        "lower_bound_iterations": bound,
        "lower_bound_evaluations": bound * cfg.lam,
    }
    emit(summary)
    record(cfg, "solve-exact" if provider == "exact" else "solve", summary, paths)
    return 0

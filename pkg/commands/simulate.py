import logging

from commands.common import emit, record
from modules import data
from modules.analysis import summarize_runs
from modules.control import RunJob, make_policy
from modules.parallel import WorkerPool

logger = logging.getLogger(__name__)


def run(cfg, args) -> int:
    problem = cfg.make_problem()
    policy = make_policy(cfg.policy, problem.n, cfg.p_min, cfg.p_max, cfg.p_init, cfg.clamp_offspring)
    job = RunJob(problem, cfg.lam, policy, cfg.budget, cfg.seed, cfg.initial_fitness)
    logger.info("Simuliere %d Läufe: %s, %s n=%d lambda=%d, p_min=%.3g",
                cfg.runs, cfg.policy, problem.name, problem.n, cfg.lam, cfg.p_min)

    with WorkerPool(cfg.workers) as pool:
        traces = pool.map(job, range(cfg.runs))

    paths = data.write_traces(traces, cfg.out_dir, cfg.policy)
    s = summarize_runs(traces)
    if s.finished < s.runs:
        logger.warning("%d von %d Läufen haben das Budget erschöpft", s.runs - s.finished, s.runs)
    summary = {
        "policy": cfg.policy,
        "runs": s.runs,
        "finished": s.finished,
        "mean_iterations": s.mean_iterations,
        "stderr_iterations": s.stderr_iterations,
        "mean_evaluations": s.mean_evaluations,
    }
    emit(summary)
    record(cfg, "simulate", summary, paths, [sum(len(t) for t in traces), len(traces)])
    return 0

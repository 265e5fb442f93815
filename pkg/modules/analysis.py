import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from modules.control import RunTrace
from modules.dp import DpTables, grid_from_rates
from modules.oracle import solve_exact
from modules.problems import FitnessDistribution, ProblemModel, initial_fitness_distribution

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)


@dataclass(frozen=True)
class HeatmapCell:
    f: int
    p: float
    C: float
    alpha_f: float
    T: float


@dataclass(frozen=True)
class RegretPoint:
    iteration: int
    fitness: int
    rate: float
    mapped_rate: float
    regret: float

    @property
    def infinite(self) -> bool:
        return math.isinf(self.regret)


@dataclass(frozen=True)
class RunSummary:
    runs: int
    finished: int
    mean_iterations: float
    stderr_iterations: float
    mean_evaluations: float


# ---- lower bound ----

def lower_bound(tables: DpTables, init: FitnessDistribution) -> float:
    """Erwartete Iterationen mit den besten fitnessabhängigen Raten: sum_f T*_f * p_init(f)."""
    meta = tables.meta
    if init.problem is not None and init.problem != meta.problem:
        raise ValueError(f"Startverteilung gehört zu {init.problem}, Tabellen zu {meta.problem}")
    if init.n is not None and init.n != meta.n:
        raise ValueError(f"Startverteilung hat n={init.n}, Tabellen n={meta.n}")
    support = np.asarray(init.support)
    if support.min() < tables.f_min or support.max() > tables.f_max:
        raise ValueError("Startverteilung liegt außerhalb des Fitnessbereichs der Tabellen")

    terms = []
    for f, mass in zip(support, init.mass):
        if mass <= 0.0:
            continue
        t = tables.t_star(int(f))
        if math.isinf(t):
            return math.inf
        terms.append(mass * t)
    return math.fsum(terms)


def static_runtime(problem: ProblemModel, lam: int, p: float, workers: int = 1) -> float:
    """Exakte erwartete Iterationen des (1+lambda) EA mit fester Rate p."""
    grid = grid_from_rates([p], problem.f_min, problem.f_max)
    tables = solve_exact(problem, grid, lam, workers=workers)
    return lower_bound(tables, initial_fitness_distribution(problem))


def summarize_runs(traces: Sequence[RunTrace]) -> RunSummary:
    lam = traces[0].lam if traces else 1
    done = np.array([t.optimum_at for t in traces if t.optimum_at is not None], dtype=float)
    if len(done) == 0:
        return RunSummary(len(traces), 0, math.nan, math.nan, math.nan)
    stderr = float(done.std(ddof=1) / math.sqrt(len(done))) if len(done) > 1 else math.nan
    mean = float(done.mean())
    return RunSummary(len(traces), len(done), mean, stderr, mean * lam)


# ---- heatmap ----

def heatmap(tables: DpTables) -> list:
    """Relative Effizienz C = exp(alpha_f * (T*_f - T_{f,p})) für jede Gitterzelle.

    alpha_f = min(1, ln 2 / d_med) mit d_med als Median der endlichen Abweichungen,
    damit mindestens die Hälfte der endlichen Zellen einer Zeile C >= 0.5 erhält. Zeilen ohne
    endliche Abweichung oder mit d_med = 0 behalten alpha_f = 1, unendliche Zellen C = 0.
    """
    cells = []
    for f in range(tables.f_min, tables.f_max):
        row = tables.row(f)
        best = tables.t_star(f)
        rates = tables.grid.rates(f)
        dev = row - best if not math.isinf(best) else np.full(len(row), math.inf)
        finite = dev[np.isfinite(dev)]
        d_med = float(np.median(finite)) if len(finite) else 0.0
        if d_med >= LN2:
            alpha = LN2 / d_med
            C = np.exp2(-dev / d_med)
        else:
            alpha = 1.0
            C = np.exp(-dev)
        C = np.where(np.isfinite(dev), C, 0.0)
        if not math.isinf(best):
            C[row == best] = 1.0
        for p, c, t in zip(rates, C, row):
            cells.append(HeatmapCell(f, float(p), float(c), alpha, float(t)))
    return cells


# ---- regret ----

def map_rate(rates: np.ndarray, p: float, exact: bool = False) -> int:
    """Grid index nearest to p in log space."""
    idx = int(np.argmin(np.abs(np.log(rates) - math.log(p))))
    if exact and not math.isclose(rates[idx], p, rel_tol=1e-9):
        raise ValueError(f"Rate {p!r} liegt nicht auf dem Gitter")
    return idx


def regret_trace(trace: RunTrace, tables: DpTables, exact: bool = False) -> list:
    meta = tables.meta
    if (trace.problem, trace.n, trace.lam) != (meta.problem, meta.n, meta.lam):
        raise ValueError(
            f"Lauf ({trace.problem}, n={trace.n}, lambda={trace.lam}) passt nicht zu "
            f"Tabellen ({meta.problem}, n={meta.n}, lambda={meta.lam})"
        )
    points = []
    for it, f, p in zip(trace.iteration, trace.fitness, trace.rate):
        if not tables.f_min <= f < tables.f_max:
            raise ValueError(f"Fitness {f} liegt außerhalb der Tabellen")
        rates = tables.grid.rates(f)
        idx = map_rate(rates, p, exact)
        t = float(tables.row(f)[idx])
        regret = math.inf if math.isinf(t) else abs(t - tables.t_star(f))
        points.append(RegretPoint(int(it), int(f), float(p), float(rates[idx]), regret))
    return points


def mean_mapped_rate(points: Sequence[RegretPoint], tail: float = 0.2) -> Optional[float]:
    """Mean mapped rate over the final ``tail`` share of the iterations."""
    if not points:
        return None
    start = int(len(points) * (1.0 - tail))
    return float(np.mean([pt.mapped_rate for pt in points[start:]]))

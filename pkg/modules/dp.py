"""Rückwärtsdurchlauf über die Fitnessniveaus, liefert beinahe optimale Mutationsraten.

Zeiten sind erwartete Iterationen des (1+lambda) EA als float; ``math.inf`` heißt
"verlässt dieses Niveau nie".
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from modules.montecarlo import McConfig, TransitionDistribution
from modules.parallel import WorkerPool
from modules.problems import ProblemModel

logger = logging.getLogger(__name__)

INF = math.inf
TIE_RTOL = 1e-12
NORM_TOL = 1e-9


# ---- rate grids ----

@dataclass(frozen=True)
class GridSpec:
    mult_base: float = 1e-4
    mult_alpha: float = 10 ** (1 / 25)
    mult_count: int = 101
    add_base: float = 0.0
    add_step: float = 0.0
    add_count: int = 0


@dataclass(frozen=True, eq=False)
class RateGrid:
    """Sorted candidate rates for every non-optimal level f_min..f_max-1."""

    f_min: int
    f_max: int
    rows: tuple

    def rates(self, f: int) -> np.ndarray:
        return self.rows[f - self.f_min]

    def __post_init__(self):
        if len(self.rows) != self.f_max - self.f_min:
            raise ValueError("RateGrid braucht genau eine Zeile pro nicht-optimaler Fitness")
        for row in self.rows:
            if len(row) == 0:
                raise ValueError("leere Ratenzeile")
            if np.any(row <= 0) or np.any(row > 1):
                raise ValueError("Raten müssen in (0,1] liegen")
            if np.any(np.diff(row) <= 0):
                raise ValueError("Raten müssen streng steigend sein")


def _dedupe(rates: np.ndarray) -> np.ndarray:
    rates = np.sort(rates)
    keep = np.ones(len(rates), dtype=bool)
    keep[1:] = np.diff(rates) > TIE_RTOL * rates[1:]
    return rates[keep]


def grid_rates(spec: GridSpec) -> np.ndarray:
    parts = []
    if spec.mult_count > 0:
        parts.append(spec.mult_base * spec.mult_alpha ** np.arange(spec.mult_count))
    if spec.add_count > 0:
        parts.append(spec.add_base + spec.add_step * np.arange(spec.add_count))
    if not parts:
        raise ValueError("weder multiplikatives noch additives Gitter konfiguriert")
    rates = np.concatenate(parts)
    # 10^(-4+100/25) lands a few ulps away from 1
    rates[np.isclose(rates, 1.0, rtol=TIE_RTOL, atol=0.0)] = 1.0
    if np.any(rates <= 0) or np.any(rates > 1):
        bad = rates[(rates <= 0) | (rates > 1)]
        raise ValueError(f"Raten außerhalb von (0,1]: {bad[:5].tolist()}")
    return _dedupe(rates)


def build_grid(spec: GridSpec, f_min: int, f_max: int) -> RateGrid:
    rates = grid_rates(spec)
    return RateGrid(f_min, f_max, tuple(rates for _ in range(f_min, f_max)))


def grid_from_rates(rates: Sequence[float], f_min: int, f_max: int) -> RateGrid:
    row = _dedupe(np.asarray(rates, dtype=float))
    return RateGrid(f_min, f_max, tuple(row for _ in range(f_min, f_max)))


# ---- tables ----

@dataclass(frozen=True)
class TablesMeta:
    problem: str
    n: int
    lam: int
    provider: str = "exact"
    mc: Optional[McConfig] = None


@dataclass(frozen=True, eq=False)
class DpTables:
    grid: RateGrid
    T: tuple                    # one array per level f_min..f_max-1, aligned with grid
    T_star: np.ndarray          # f_min..f_max, T_star[-1] == 0
    P_opt: np.ndarray           # f_min..f_max, nan at f_max
    meta: TablesMeta = field(compare=False)

    @property
    def f_min(self) -> int:
        return self.grid.f_min

    @property
    def f_max(self) -> int:
        return self.grid.f_max

    def row(self, f: int) -> np.ndarray:
        return self.T[f - self.f_min]

    def t_star(self, f: int) -> float:
        return float(self.T_star[f - self.f_min])

    def p_opt(self, f: int) -> float:
        return float(self.P_opt[f - self.f_min])


def expected_time(trans: TransitionDistribution, tail: Sequence[float]) -> float:
    """Expected iterations to the optimum from the current level.

    ``tail[i-1]`` is the optimal remaining time after a gain of i, so the
    result solves T = 1 + p0*T + sum_i p_i*tail[i-1].
    """
    gains = np.asarray(trans.gains, dtype=float)
    if np.any(gains < 0) or abs(gains.sum() - 1.0) > NORM_TOL:
        raise ValueError(f"Übergangsverteilung nicht normiert (Summe {gains.sum()!r})")
    if len(tail) < len(gains) - 1:
        raise ValueError("zu wenige Restzeiten für die Übergangsverteilung")
    move = gains[1:]
    leave = float(move.sum())
    if leave <= 0.0:
        return INF
    acc = 1.0
    for p_i, t in zip(move, tail):
        if p_i > 0.0:
            if math.isinf(t):
                return INF
            acc += p_i * t
    return acc / leave


def argmin_rate(row: np.ndarray) -> int:
    """Index of the row minimum; the smallest rate wins near-ties."""
    best = float(np.min(row))
    if math.isinf(best):
        return 0
    return int(np.flatnonzero(row <= best * (1.0 + TIE_RTOL))[0])


Provider = Callable[[int, int, float], TransitionDistribution]


def solve(
    problem: ProblemModel,
    grid: RateGrid,
    lam: int,
    transitions: Provider,
    meta: Optional[TablesMeta] = None,
    workers: int = 1,
) -> DpTables:
    if grid.f_min != problem.f_min or grid.f_max != problem.f_max:
        raise ValueError("Gitter passt nicht zum Fitnessbereich des Problems")
    f_min, f_max = problem.f_min, problem.f_max
    levels = f_max - f_min
    T_star = np.zeros(levels + 1)
    P_opt = np.full(levels + 1, np.nan)
    T = [None] * levels

    with WorkerPool(workers) as pool:
        for f in range(f_max - 1, f_min - 1, -1):
            rates = grid.rates(f)
            cells = pool.map(transitions, [f] * len(rates), range(len(rates)), rates)
            tail = T_star[f - f_min + 1:]
            row = np.array([expected_time(trans, tail) for trans in cells])
            best = argmin_rate(row)
            T[f - f_min] = row
            T_star[f - f_min] = row[best]
            P_opt[f - f_min] = rates[best]
            if math.isinf(row[best]):
                logger.warning("Fitness %d: keine Rate verlässt das Niveau (T* = inf)", f)
            logger.debug("Fitness %d: T*=%.6g bei p=%.4g", f, row[best], rates[best])

    logger.info("DP fertig: %s n=%d lambda=%d, %d Niveaus", problem.name, problem.n, lam, levels)
    if meta is None:
        meta = TablesMeta(problem.name, problem.n, lam)
    return DpTables(grid, tuple(T), T_star, P_opt, meta)

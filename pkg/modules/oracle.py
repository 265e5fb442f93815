"""Exakte Übergangsgesetze für Probleme, deren Fitness nur vom OneMax-Wert abhängt."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from modules.dp import DpTables, RateGrid, TablesMeta, solve
from modules.montecarlo import TransitionDistribution
from modules.mutation import shift_binomial_pmf_vector
from modules.problems import FitnessDistribution, ProblemModel, UnsupportedProblemError, fitness_to_om

UNDERFLOW = 1e-300


@lru_cache(maxsize=None)
def log_factorials(n: int) -> np.ndarray:
    table = gammaln(np.arange(n + 1) + 1.0)
    table.setflags(write=False)
    return table


def _log_choose(lf: np.ndarray, a, b):
    return lf[a] - lf[b] - lf[a - b]


@dataclass(frozen=True, eq=False)
class GainLaw:
    gains: np.ndarray   # OM gain 2j - k for every feasible j
    probs: np.ndarray

    def as_dict(self):
        return {int(g): float(q) for g, q in zip(self.gains, self.probs)}


def gain_pmf(n: int, d: int, k: int) -> GainLaw:
    """OM gain when k uniformly chosen bits flip and d of the n bits are wrong."""
    if n < 0 or not 0 <= d <= n or not 0 <= k <= n:
        raise ValueError(f"ungültige Argumente n={n}, d={d}, k={k}")
    lf = log_factorials(n)
    j = np.arange(max(0, k - (n - d)), min(k, d) + 1)
    log_q = _log_choose(lf, d, j) + _log_choose(lf, n - d, k - j) - _log_choose(lf, n, k)
    return GainLaw(2 * j - k, np.exp(log_q))


def offspring_om_pmf(n: int, om: int, p: float) -> np.ndarray:
    """OM law (index 0..n) of one shift-mutation offspring of a parent with OM value ``om``."""
    d = n - om
    weights = shift_binomial_pmf_vector(n, p)
    out = np.zeros(n + 1)
    for k in range(1, n + 1):
        if weights[k] < UNDERFLOW:
            continue
        law = gain_pmf(n, d, k)
        np.add.at(out, om + law.gains, weights[k] * law.probs)
    return out


def offspring_fitness_pmf(problem: ProblemModel, f: int, p: float) -> FitnessDistribution:
    if not problem.om_decomposable:
        raise UnsupportedProblemError(f"{problem.name} ist nicht OM-zerlegbar")
    om_law = offspring_om_pmf(problem.n, fitness_to_om(problem, f), p)
    om_law[om_law < UNDERFLOW] = 0.0
    support = np.arange(problem.f_min, problem.f_max + 1)
    mass = np.zeros(len(support))
    np.add.at(mass, problem.om_table - problem.f_min, om_law)
    mass /= mass.sum()
    return FitnessDistribution(support, mass, problem=problem.name, n=problem.n)


def best_of_cdf(mass: np.ndarray, lam: int) -> np.ndarray:
    """CDF of the best of ``lam`` independent draws from ``mass``."""
    cdf = np.cumsum(mass)
    cdf /= cdf[-1]
    return cdf ** lam


def transition_exact(problem: ProblemModel, f: int, p: float, lam: int) -> TransitionDistribution:
    if lam < 1:
        raise ValueError(f"lambda muss mindestens 1 sein, nicht {lam}")
    single = offspring_fitness_pmf(problem, f, p)
    best = best_of_cdf(single.mass, lam)
    at = f - problem.f_min
    gains = np.empty(problem.f_max - f + 1)
    gains[0] = best[at]
    gains[1:] = np.diff(best[at:])
    return TransitionDistribution(np.clip(gains, 0.0, None))


@dataclass(frozen=True)
class ExactProvider:
    problem: ProblemModel
    lam: int

    def __call__(self, f: int, rate_index: int, p: float) -> TransitionDistribution:
        return transition_exact(self.problem, f, p, self.lam)


def solve_exact(problem: ProblemModel, grid: RateGrid, lam: int, workers: int = 1) -> DpTables:
    # warm the cache before any worker forks
    log_factorials(problem.n)
    meta = TablesMeta(problem.name, problem.n, lam, provider="exact")
    return solve(problem, grid, lam, ExactProvider(problem, lam), meta=meta, workers=workers)

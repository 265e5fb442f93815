import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from modules.mutation import flip_batch
from modules.problems import ProblemModel, representative

logger = logging.getLogger(__name__)

# offspring genotypes materialized per batch, bounds memory for large lambda*n
BATCH_CELLS = 1 << 21


@dataclass(frozen=True)
class McConfig:
    iterations: int = 10**6      # N_I
    successes: int = 5 * 10**4   # N_T
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.successes < 1:
            raise ValueError("mc.iterations und mc.successes müssen positiv sein")
        if self.successes > self.iterations:
            raise ValueError(
                f"mc.successes={self.successes} größer als mc.iterations={self.iterations}"
            )


@dataclass(frozen=True, eq=False)
class TransitionDistribution:
    """gains[i] is the probability that one iteration lifts the parent fitness by i.

    gains[0] also holds every iteration whose best offspring was worse.
    ``n_actual`` is the number of simulated iterations, None for exact laws.
    """

    gains: np.ndarray
    n_actual: Optional[int] = None

    @property
    def p_stay(self) -> float:
        return float(self.gains[0])


def cell_rng(seed: int, level: int, rate_index: int) -> np.random.Generator:
    """Stream of one (fitness level, rate index) cell, independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(level, rate_index)))


def batch_size(problem: ProblemModel, lam: int) -> int:
    return max(1, BATCH_CELLS // (lam * problem.n))


def estimate_transitions(
    problem: ProblemModel,
    f: int,
    p: float,
    lam: int,
    cfg: McConfig,
    rng: np.random.Generator,
) -> TransitionDistribution:
    if lam < 1:
        raise ValueError(f"lambda muss mindestens 1 sein, nicht {lam}")
    if f >= problem.f_max:
        raise ValueError(f"Fitness {f} ist optimal, es gibt keine Übergänge zu schätzen")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Mutationsrate {p!r} liegt nicht in [0,1]")

    parent = representative(problem, f)
    counts = np.zeros(problem.f_max - f + 1, dtype=np.int64)
    done = 0
    hits = 0
    step = batch_size(problem, lam)
    while done < cfg.iterations and hits < cfg.successes:
        b = min(step, cfg.iterations - done)
        ks = np.maximum(rng.binomial(problem.n, p, size=b * lam), 1)
        offspring = flip_batch(parent, ks, rng)
        best = np.asarray(problem.evaluate(offspring)).reshape(b, lam).max(axis=1)
        gain = np.maximum(best - f, 0)
        assert gain.max() <= problem.f_max - f, "Nachkomme jenseits des Optimums"

        success = np.cumsum(gain > 0) + hits
        if success[-1] >= cfg.successes:
            # stop right after the iteration that brings the N_T-th success
            b = int(np.searchsorted(success, cfg.successes)) + 1
            gain = gain[:b]
        counts += np.bincount(gain, minlength=len(counts))
        hits = int(success[b - 1])
        done += b

    logger.debug("Zelle f=%d p=%.3g: %d Iterationen, %d Erfolge", f, p, done, hits)
    return TransitionDistribution(counts / done, n_actual=done)


@dataclass(frozen=True)
class MonteCarloProvider:
    """Übergangsquelle für den DP-Durchlauf, gestützt auf Simulation."""

    problem: ProblemModel
    lam: int
    cfg: McConfig

    def __call__(self, f: int, rate_index: int, p: float) -> TransitionDistribution:
        rng = cell_rng(self.cfg.seed, f - self.problem.f_min, rate_index)
        return estimate_transitions(self.problem, f, p, self.lam, self.cfg, rng)

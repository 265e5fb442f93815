"""(1+lambda) EA mit Shift-Mutation unter verschiedenen Regeln zur Ratensteuerung."""
import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from modules.mutation import flip_batch
from modules.problems import ProblemModel, representative

logger = logging.getLogger(__name__)

P_MAX_DEFAULT = 0.5


class PolicyKind(str, Enum):
    STATIC = "static"
    AB = "ab"
    TWO_RATE = "two-rate"
    HQEA = "hqea"  # reserved, not implemented


@dataclass
class ControlPolicy:
    kind: PolicyKind
    p: float
    p_min: float = 0.0
    p_max: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p_min <= self.p_max <= 1.0:
            raise ValueError(f"ungültige Grenzen [{self.p_min}, {self.p_max}]")
        self.p = self.clamp(self.p)

    def clamp(self, p: float) -> float:
        return min(max(p, self.p_min), self.p_max)

    def offspring_rates(self, lam: int) -> np.ndarray:
        return np.full(lam, self.p)

    def update(self, parent_fitness: int, offspring_fitness: np.ndarray, rng: np.random.Generator):
        pass


@dataclass
class AbPolicy(ControlPolicy):
    """Multiplicative success rule: p*A after a non-worsening iteration, p*b otherwise."""

    A: float = 2.0
    b: float = 0.5

    def update(self, parent_fitness, offspring_fitness, rng):
        factor = self.A if offspring_fitness.max() >= parent_fitness else self.b
        self.p = self.clamp(self.p * factor)


@dataclass
class TwoRatePolicy(ControlPolicy):
    """Half of the offspring use p/2, the other half 2p; p follows the better half.

    Only p is clamped. With ``clamp_offspring`` the two derived rates are
    clamped to [p_min, p_max] as well.
    """

    clamp_offspring: bool = False

    def offspring_rates(self, lam: int) -> np.ndarray:
        if lam % 2:
            raise ValueError(f"two-rate braucht ein gerades lambda, nicht {lam}")
        low, high = self.p / 2, min(2 * self.p, 1.0)
        if self.clamp_offspring:
            low, high = self.clamp(low), self.clamp(high)
        return np.repeat([low, high], lam // 2)

    def update(self, parent_fitness, offspring_fitness, rng):
        half = len(offspring_fitness) // 2
        f_h = offspring_fitness[:half].max()
        f_d = offspring_fitness[half:].max()
        if f_h > f_d:
            halve = rng.random() < 0.75
        elif f_d > f_h:
            halve = rng.random() < 0.25
        else:
            halve = rng.random() < 0.5
        self.p = self.clamp(self.p / 2 if halve else self.p * 2)


def policy_static(p: float) -> ControlPolicy:
    return ControlPolicy(PolicyKind.STATIC, p)


def policy_ab(n: int, p_min: Optional[float] = None, p_max: float = P_MAX_DEFAULT,
              p_init: Optional[float] = None) -> AbPolicy:
    p_min = 1 / n**2 if p_min is None else p_min
    return AbPolicy(PolicyKind.AB, 1 / n if p_init is None else p_init, p_min, p_max)


def policy_two_rate(n: int, p_min: Optional[float] = None, p_max: float = P_MAX_DEFAULT,
                    p_init: Optional[float] = None, clamp_offspring: bool = False) -> TwoRatePolicy:
    p_min = 1 / n**2 if p_min is None else p_min
    return TwoRatePolicy(PolicyKind.TWO_RATE, 1 / n if p_init is None else p_init, p_min, p_max,
                         clamp_offspring=clamp_offspring)


def make_policy(kind: str, n: int, p_min: float, p_max: float = P_MAX_DEFAULT,
                p_init: Optional[float] = None, clamp_offspring: bool = False) -> ControlPolicy:
    kind = PolicyKind(kind)
    if kind is PolicyKind.STATIC:
        return policy_static(1 / n if p_init is None else p_init)
    if kind is PolicyKind.AB:
        return policy_ab(n, p_min, p_max, p_init)
    if kind is PolicyKind.TWO_RATE:
        return policy_two_rate(n, p_min, p_max, p_init, clamp_offspring)
    raise NotImplementedError(f"Policy {kind.value} ist nicht implementiert")


# ---- runs ----

@dataclass
class RunTrace:
    problem: str
    n: int
    lam: int
    iteration: list = field(default_factory=list)
    fitness: list = field(default_factory=list)
    rate: list = field(default_factory=list)
    best_offspring_fitness: list = field(default_factory=list)
    success: list = field(default_factory=list)
    optimum_at: Optional[int] = None

    @property
    def status(self) -> str:
        return "optimum" if self.optimum_at is not None else "budget_exhausted"

    def __len__(self):
        return len(self.iteration)


def run_ea(
    problem: ProblemModel,
    lam: int,
    policy: ControlPolicy,
    budget: int,
    rng: np.random.Generator,
    initial_fitness: Optional[int] = None,
) -> RunTrace:
    if budget < 1:
        raise ValueError(f"Budget muss mindestens 1 sein, nicht {budget}")
    if lam < 1:
        raise ValueError(f"lambda muss mindestens 1 sein, nicht {lam}")
    policy = dataclasses.replace(policy)
    if initial_fitness is None:
        x = rng.integers(0, 2, size=problem.n, dtype=np.uint8)
    else:
        x = representative(problem, initial_fitness)
    fx = problem.evaluate(x)
    trace = RunTrace(problem.name, problem.n, lam)

    t = 0
    while fx < problem.f_max and t < budget:
        t += 1
        rates = policy.offspring_rates(lam)
        ks = np.maximum(rng.binomial(problem.n, rates), 1)
        children = flip_batch(x, ks, rng)
        fit = np.asarray(problem.evaluate(children))
        best = int(fit.max())

        trace.iteration.append(t)
        trace.fitness.append(fx)
        trace.rate.append(policy.p)
        trace.best_offspring_fitness.append(best)
        trace.success.append(best > fx)

        parent_fitness = fx
        if best >= fx:
            winners = np.flatnonzero(fit == best)
            x = children[winners[rng.integers(len(winners))]]
            fx = best
        policy.update(parent_fitness, fit, rng)

    if fx >= problem.f_max:
        trace.optimum_at = t
    logger.debug("Lauf beendet nach %d Iterationen (%s)", t, trace.status)
    return trace


@dataclass(frozen=True)
class RunJob:
    """One seeded run, picklable for the worker pool."""

    problem: ProblemModel
    lam: int
    policy: ControlPolicy
    budget: int
    seed: int
    initial_fitness: Optional[int] = None

    def __call__(self, run_id: int) -> RunTrace:
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(run_id,)))
        return run_ea(self.problem, self.lam, self.policy, self.budget, rng, self.initial_fitness)

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

logger = logging.getLogger(__name__)

PROBLEM_NAMES = ("onemax", "ruggedness")


class UnsupportedProblemError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FitnessDistribution:
    support: np.ndarray
    mass: np.ndarray
    problem: Optional[str] = None
    n: Optional[int] = None

    def __post_init__(self):
        if len(self.support) != len(self.mass):
            raise ValueError("support und mass haben unterschiedliche Länge")
        if np.any(self.mass < 0) or np.any(self.mass > 1):
            raise ValueError("Wahrscheinlichkeiten müssen in [0,1] liegen")
        if abs(float(np.sum(self.mass)) - 1.0) > 1e-12:
            raise ValueError(f"Massen summieren sich zu {np.sum(self.mass)!r}, nicht 1")

    def as_dict(self):
        return {int(f): float(m) for f, m in zip(self.support, self.mass)}


@dataclass(frozen=True)
class ProblemModel:
    """Fitness landscape on {0,1}^n seen through its fitness levels.

    The hidden optimum is the all-ones string; every operator in this package
    is unbiased, so the choice does not change any distribution.
    """

    n: int
    name: str = "problem"
    om_decomposable: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n muss positiv sein, nicht {self.n}")

    # -- OM-decomposable interface --
    def fitness_of_om(self, om):
        raise NotImplementedError

    def evaluate(self, x: np.ndarray):
        """Fitness of one genotype (1-D) or a batch of genotypes (2-D, one per row)."""
        x = np.asarray(x)
        if x.shape[-1] != self.n:
            raise ValueError(f"Genotyp hat Länge {x.shape[-1]}, erwartet {self.n}")
        fitness = self.fitness_of_om(x.sum(axis=-1, dtype=np.int64))
        return int(fitness) if x.ndim == 1 else np.asarray(fitness)

    @cached_property
    def om_table(self) -> np.ndarray:
        return np.asarray(self.fitness_of_om(np.arange(self.n + 1)), dtype=np.int64)

    @property
    def f_min(self) -> int:
        return int(self.om_table.min())

    @property
    def f_max(self) -> int:
        return int(self.om_table[self.n])

    @cached_property
    def _inverse(self) -> dict:
        return {int(f): om for om, f in enumerate(self.om_table)}

    def fitness_range(self) -> range:
        return range(self.f_min, self.f_max + 1)


def rugged_of_om(om, n: int):
    """r = n at the optimum, OM + 1 where OM and n share parity, OM - 1 otherwise."""
    om = np.asarray(om)
    r = np.where((om - n) % 2 == 0, om + 1, om - 1)
    r = np.where(om == n, n, r)
    return r if r.ndim else int(r)


@dataclass(frozen=True)
class OneMax(ProblemModel):
    name: str = "onemax"

    def fitness_of_om(self, om):
        return om


@dataclass(frozen=True)
class Ruggedness(ProblemModel):
    """Concatenated jumps over OneMax: neighbouring OM levels swap their ranks."""

    name: str = "ruggedness"

    def __post_init__(self):
        super().__post_init__()
        # odd n sends OM=0 to -1 and leaves fitness 0 unattainable
        if self.n % 2:
            raise ValueError(f"Ruggedness braucht ein gerades n, nicht {self.n}")

    def fitness_of_om(self, om):
        return rugged_of_om(om, self.n)


@dataclass(frozen=True)
class CallbackProblem(ProblemModel):
    """User-supplied fitness function without fitness-level shortcuts.

    ``representative_fn`` must return a genotype of the requested fitness;
    only the Monte-Carlo path and the EA runner can use such problems.
    """

    name: str = "callback"
    om_decomposable: bool = False
    fn: Callable = field(default=None, compare=False)
    representative_fn: Optional[Callable] = field(default=None, compare=False)
    lowest: int = 0
    highest: int = 0

    def evaluate(self, x: np.ndarray):
        x = np.asarray(x)
        if x.ndim == 1:
            return int(self.fn(x))
        return np.fromiter((self.fn(row) for row in x), dtype=np.int64, count=len(x))

    @property
    def f_min(self) -> int:
        return self.lowest

    @property
    def f_max(self) -> int:
        return self.highest


def make_problem(name: str, n: int) -> ProblemModel:
    if name == "onemax":
        return OneMax(n)
    if name == "ruggedness":
        return Ruggedness(n)
    raise ValueError(f"unbekanntes Problem {name!r}, erlaubt: {', '.join(PROBLEM_NAMES)}")


# ---- evaluation ----

def onemax_eval(x: np.ndarray) -> int:
    return int(np.count_nonzero(x))


def ruggedness_eval(x: np.ndarray) -> int:
    x = np.asarray(x)
    return rugged_of_om(int(np.count_nonzero(x)), x.shape[-1])


# ---- fitness levels ----

def _check_level(problem: ProblemModel, f: int):
    if not problem.f_min <= f <= problem.f_max:
        raise ValueError(f"Fitness {f} liegt außerhalb von [{problem.f_min}..{problem.f_max}]")


def fitness_to_om(problem: ProblemModel, f: int) -> int:
    if not problem.om_decomposable:
        raise UnsupportedProblemError(f"{problem.name} ist nicht OM-zerlegbar")
    _check_level(problem, f)
    try:
        return problem._inverse[int(f)]
    except KeyError:
        raise ValueError(f"Fitness {f} ist für {problem.name} nicht erreichbar") from None


def representative(problem: ProblemModel, f: int) -> np.ndarray:
    _check_level(problem, f)
    if not problem.om_decomposable:
        representative_fn = getattr(problem, "representative_fn", None)
        if representative_fn is None:
            raise UnsupportedProblemError(f"{problem.name} hat keine representative_fn")
        x = np.asarray(representative_fn(f), dtype=np.uint8)
        if problem.evaluate(x) != f:
            raise ValueError(f"representative_fn lieferte keinen Genotyp mit Fitness {f}")
        return x
    ones = fitness_to_om(problem, f)
    x = np.zeros(problem.n, dtype=np.uint8)
    x[:ones] = 1
    return x


def initial_fitness_distribution(problem: ProblemModel) -> FitnessDistribution:
    """Fitness law of a uniformly random bit string: OM ~ Binomial(n, 1/2)."""
    if not problem.om_decomposable:
        raise UnsupportedProblemError(
            f"{problem.name}: exakte Startverteilung nur für OM-zerlegbare Probleme"
        )
    n = problem.n
    om = np.arange(n + 1)
    log_mass = gammaln(n + 1) - gammaln(om + 1) - gammaln(n - om + 1) - n * np.log(2.0)
    om_mass = np.exp(log_mass)
    support = np.arange(problem.f_min, problem.f_max + 1)
    mass = np.zeros(len(support))
    mass[problem.om_table - problem.f_min] = om_mass
    mass /= mass.sum()
    return FitnessDistribution(support, mass, problem=problem.name, n=n)


def sample_initial_distribution(
    problem: ProblemModel, samples: int, rng: np.random.Generator
) -> FitnessDistribution:
    """Empirische Fitnessverteilung zufälliger Genotypen, für jedes Problem."""
    x = rng.integers(0, 2, size=(samples, problem.n), dtype=np.uint8)
    fitness = np.asarray(problem.evaluate(x))
    support = np.arange(problem.f_min, problem.f_max + 1)
    counts = np.bincount(fitness - problem.f_min, minlength=len(support))
    logger.debug("Startverteilung aus %d Stichproben geschätzt", samples)
    return FitnessDistribution(support, counts / samples, problem=problem.name, n=problem.n)

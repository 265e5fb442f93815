from dataclasses import dataclass

import numpy as np
from scipy.stats import binom


def _check_rate(p: float):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Mutationsrate {p!r} liegt nicht in [0,1]")


@dataclass(frozen=True)
class ShiftBinomial:
    """Binomial flip count with the mass of k=0 moved onto k=1."""

    n: int
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n muss positiv sein, nicht {self.n}")
        _check_rate(self.p)

    def pmf(self) -> np.ndarray:
        return shift_binomial_pmf_vector(self.n, self.p)


def shift_binomial_pmf_vector(n: int, p: float) -> np.ndarray:
    """Probabilities of k = 0..n flips; entry 0 is always zero."""
    _check_rate(p)
    pmf = np.exp(binom.logpmf(np.arange(n + 1), n, p))
    pmf[1] += pmf[0]
    pmf[0] = 0.0
    return pmf


def shift_binomial_pmf(n: int, p: float, k: int) -> float:
    _check_rate(p)
    if not 0 <= k <= n:
        raise ValueError(f"k={k} liegt nicht in [0..{n}]")
    if k == 0:
        return 0.0
    if k == 1:
        return float(np.exp(binom.logpmf(0, n, p)) + np.exp(binom.logpmf(1, n, p)))
    return float(np.exp(binom.logpmf(k, n, p)))


def sample_flip_count(dist: ShiftBinomial, rng: np.random.Generator, size=None):
    k = rng.binomial(dist.n, dist.p, size=size)
    return np.maximum(k, 1) if size is not None else max(int(k), 1)


def flip_k_bits(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    if not 0 <= k <= n:
        raise ValueError(f"k={k} liegt nicht in [0..{n}]")
    y = x.copy()
    if k:
        idx = rng.choice(n, size=k, replace=False)
        y[idx] ^= 1
    return y


def flip_batch(x: np.ndarray, ks: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One offspring of ``x`` per entry of ``ks``, each with exactly ks[i] flipped bits.

    The flipped positions of a row are the ks[i] smallest of n iid uniform keys,
    i.e. a uniform ks[i]-subset.
    """
    ks = np.asarray(ks, dtype=np.int64).ravel()
    n = len(x)
    keys = rng.random((len(ks), n))
    kth = np.sort(keys, axis=1)[np.arange(len(ks)), np.clip(ks, 1, n) - 1]
    mask = (keys <= kth[:, None]) & (ks[:, None] > 0)
    return np.bitwise_xor(x[None, :], mask.astype(x.dtype))

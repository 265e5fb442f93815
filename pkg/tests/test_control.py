import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

from modules.control import (
    AbPolicy,
    PolicyKind,
    RunJob,
    TwoRatePolicy,
    make_policy,
    policy_ab,
    policy_static,
    policy_two_rate,
    run_ea,
)
from modules.problems import OneMax, Ruggedness

RNG = np.random.default_rng


def test_static_policy_never_changes():
    policy = policy_static(0.1)
    for best in (0, 5, 10):
        policy.update(5, np.array([best]), RNG(0))
    assert policy.p == 0.1
    assert policy.offspring_rates(3).tolist() == [0.1, 0.1, 0.1]


def test_ab_success_doubles():
    policy = policy_ab(100, p_min=1e-4, p_max=0.5, p_init=0.01)
    policy.update(5, np.array([3, 5]), RNG(0))
    assert policy.p == 0.02


def test_ab_failure_halves_and_clamps():
    policy = policy_ab(100, p_min=1e-4, p_max=0.5, p_init=1e-4)
    policy.update(5, np.array([3, 4]), RNG(0))
    assert policy.p == 1e-4
    policy.p = 0.4
    policy.update(5, np.array([6]), RNG(0))
    assert policy.p == 0.5


def test_ab_defaults():
    policy = policy_ab(10)
    assert isinstance(policy, AbPolicy)
    assert (policy.p, policy.p_min, policy.p_max) == (0.1, 0.01, 0.5)
    assert (policy.A, policy.b) == (2.0, 0.5)


def test_two_rate_offspring_rates():
    policy = policy_two_rate(10, p_init=0.1)
    assert policy.offspring_rates(4).tolist() == [0.05, 0.05, 0.2, 0.2]
    with pytest.raises(ValueError):
        policy.offspring_rates(3)


def test_two_rate_clamp_offspring():
    policy = policy_two_rate(10, p_min=0.01, p_max=0.5, p_init=0.01, clamp_offspring=True)
    assert policy.offspring_rates(2).tolist() == [0.01, 0.02]
    policy = policy_two_rate(10, p_min=0.01, p_max=0.5, p_init=0.01)
    assert policy.offspring_rates(2).tolist() == [0.005, 0.02]


def halving_share(f_h, f_d, trials=10_000):
    rng = RNG(42)
    halved = 0
    for _ in range(trials):
        policy = TwoRatePolicy(PolicyKind.TWO_RATE, 0.01, 1e-6, 0.5)
        policy.update(0, np.array([f_h, f_d]), rng)
        halved += policy.p < 0.01
    return halved / trials


@pytest.mark.parametrize("f_h, f_d, share", [(5, 3, 0.75), (3, 5, 0.25), (4, 4, 0.5)])
def test_two_rate_update_probabilities(f_h, f_d, share):
    se = np.sqrt(share * (1 - share) / 10_000)
    assert abs(halving_share(f_h, f_d) - share) <= 3 * se


def test_make_policy():
    assert make_policy("static", 10, 0.01).p == 0.1
    assert make_policy("ab", 10, 0.01).kind is PolicyKind.AB
    assert make_policy("two-rate", 10, 0.01).kind is PolicyKind.TWO_RATE
    with pytest.raises(NotImplementedError):
        make_policy("hqea", 10, 0.01)
    with pytest.raises(ValueError):
        make_policy("one-fifth", 10, 0.01)


def test_invalid_bounds():
    with pytest.raises(ValueError):
        policy_ab(10, p_min=0.6, p_max=0.5)


def test_single_bit_problem_needs_one_iteration():
    # n=1 and shift mutation: the only bit always flips
    for seed in range(20):
        trace = run_ea(OneMax(1), 1, policy_static(0.5), 10, RNG(seed), initial_fitness=0)
        assert trace.optimum_at == 1


def test_start_at_optimum():
    trace = run_ea(OneMax(4), 2, policy_static(0.25), 10, RNG(0), initial_fitness=4)
    assert trace.optimum_at == 0
    assert len(trace) == 0


def test_trace_is_elitist_and_consistent():
    problem = Ruggedness(20)
    trace = run_ea(problem, 4, policy_static(1 / 20), 10**5, RNG(3))
    assert trace.optimum_at == len(trace)
    assert trace.iteration == list(range(1, len(trace) + 1))
    assert all(a <= b for a, b in zip(trace.fitness, trace.fitness[1:]))
    for f, best, ok in zip(trace.fitness, trace.best_offspring_fitness, trace.success):
        assert ok == (best > f)


@settings(max_examples=20, deadline=None)
@given(integers(0, 2**31))
def test_ab_rates_stay_in_bounds(seed):
    n = 16
    trace = run_ea(Ruggedness(n), 4, policy_ab(n), 2000, RNG(seed))
    assert all(1 / n**2 <= p <= 0.5 for p in trace.rate)


@settings(max_examples=20, deadline=None)
@given(integers(0, 2**31))
def test_two_rate_stored_rate_in_bounds(seed):
    n = 16
    trace = run_ea(Ruggedness(n), 4, policy_two_rate(n), 2000, RNG(seed))
    assert all(1 / n**2 <= p <= 0.5 for p in trace.rate)


def test_budget_exhausted():
    trace = run_ea(OneMax(200), 1, policy_static(1 / 200), 5, RNG(0))
    assert trace.optimum_at is None
    assert trace.status == "budget_exhausted"
    assert len(trace) == 5


def test_policy_state_is_not_shared_between_runs():
    policy = policy_ab(20)
    run_ea(OneMax(20), 2, policy, 50, RNG(0))
    assert policy.p == 1 / 20


def test_run_job_reproducible():
    job = RunJob(Ruggedness(12), 4, policy_two_rate(12), 10**4, seed=7)
    a, b = job(3), job(3)
    assert dataclasses.asdict(a) == dataclasses.asdict(b)
    assert dataclasses.asdict(job(4)) != dataclasses.asdict(a)


def test_run_ea_invalid():
    with pytest.raises(ValueError):
        run_ea(OneMax(4), 0, policy_static(0.25), 10, RNG(0))
    with pytest.raises(ValueError):
        run_ea(OneMax(4), 1, policy_static(0.25), 0, RNG(0))

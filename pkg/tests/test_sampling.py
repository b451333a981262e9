import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cycle_type_of, ewens_probability
from permspec.errors import InvalidArgument
from permspec.rng import RngStream, run_trials
from permspec.sampling import (
    CycleType,
    Permutation,
    compose,
    count_fixed_points,
    cycle_type,
    identity,
    inverse,
    n_cycle,
    sample_ewens_permutation,
    sample_uniform_permutation,
)


def test_identity_and_n_cycle():
    assert count_fixed_points(identity(7)) == 7
    c = n_cycle(5)
    assert list(c.image) == [1, 2, 3, 4, 0]
    assert cycle_type(c)[5] == 1 and cycle_type(c).cycles == 1


@pytest.mark.parametrize("bad", [[0, 0, 1], [1, 2, 3], [], [[0, 1]]])
def test_permutation_rejects_non_bijections(bad):
    with pytest.raises(InvalidArgument):
        Permutation(np.array(bad))


def test_image_is_read_only():
    p = sample_uniform_permutation(5, 1)
    with pytest.raises(ValueError):
        p.image[0] = 3


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 60), seed=st.integers(0, 2**32))
def test_group_laws(n, seed):
    g = RngStream(seed).generator
    p = sample_uniform_permutation(n, g)
    q = sample_uniform_permutation(n, g)
    assert compose(p, inverse(p)) == identity(n)
    assert compose(p, q)(0) == p(q(0))
    ct = cycle_type(p)
    assert ct.n == n
    assert ct[1] == count_fixed_points(p)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 40), theta=st.floats(0.05, 20), seed=st.integers(0, 2**32))
def test_ewens_output_is_a_permutation(n, theta, seed):
    p = sample_ewens_permutation(n, theta, seed)
    assert sorted(p.image.tolist()) == list(range(n))


def test_uniform_is_uniform_on_s3():
    g = RngStream(11).generator
    N = 30000
    counts = Counter(tuple(sample_uniform_permutation(3, g).image.tolist()) for _ in range(N))
    assert len(counts) == 6
    for c in counts.values():
        # binomial(N, 1/6): sd ~ 64
        assert abs(c - N / 6) < 4 * math.sqrt(N * (1 / 6) * (5 / 6))


@pytest.mark.parametrize("theta", [0.5, 2.0])
def test_ewens_matches_sampling_formula_on_s4(theta):
    g = RngStream(5).generator
    N = 40000
    counts = Counter()
    for _ in range(N):
        ct = cycle_type_of(sample_ewens_permutation(4, theta, g).image.tolist())
        counts[tuple(sorted(ct.items()))] += 1
    from itertools import permutations

    exact = {}
    for p in permutations(range(4)):
        ct = cycle_type_of(p)
        exact[tuple(sorted(ct.items()))] = ewens_probability(ct, 4, Fraction(theta))
    assert sum(exact.values()) == 1
    for key, prob in exact.items():
        p = float(prob)
        assert abs(counts[key] - N * p) < 4 * math.sqrt(N * p * (1 - p)), key


def test_ewens_theta_one_is_uniform_cycle_count():
    g = RngStream(3).generator
    cyc = [cycle_type(sample_ewens_permutation(50, 1.0, g)).cycles for _ in range(4000)]
    harmonic = sum(1 / i for i in range(1, 51))
    assert abs(np.mean(cyc) - harmonic) < 4 * np.std(cyc) / math.sqrt(len(cyc))


def test_invalid_sampling_arguments():
    with pytest.raises(InvalidArgument):
        sample_uniform_permutation(0, 1)
    with pytest.raises(InvalidArgument):
        sample_ewens_permutation(5, 0.0, 1)


def test_streams_are_reproducible_and_independent_of_threads():
    a = sample_uniform_permutation(100, RngStream(9, 4))
    b = sample_uniform_permutation(100, RngStream(9, 4))
    c = sample_uniform_permutation(100, RngStream(9, 5))
    assert a == b and a != c
    fn = _first_image
    assert run_trials(fn, 6, 42, threads=1) == run_trials(fn, 6, 42, threads=2)


def _first_image(stream):
    return int(sample_uniform_permutation(1000, stream.generator).image[0])


def test_cycle_type_getitem_out_of_range():
    ct = CycleType(np.array([2, 1]))
    assert ct[3] == 0 and ct.n == 4


@pytest.mark.parametrize("theta", [0.5, 2.0])
def test_ewens_mean_fixed_points(theta):
    g = RngStream(21).generator
    fp = np.array([count_fixed_points(sample_ewens_permutation(50, theta, g)) for _ in range(20000)])
    target = theta * 50 / (theta + 49)
    assert abs(fp.mean() - target) < 4 * fp.std() / math.sqrt(fp.size)


def test_ewens_identity_probability_n3():
    g = RngStream(22).generator
    N = 30000
    hits = sum(count_fixed_points(sample_ewens_permutation(3, 2.0, g)) == 3 for _ in range(N))
    assert abs(hits / N - 1 / 3) < 4 * math.sqrt((1 / 3) * (2 / 3) / N)


def test_hand_composition_and_fixed_points():
    p = Permutation(np.array([1, 2, 0]))
    q = Permutation(np.array([0, 2, 1]))
    assert compose(p, q).image.tolist() == [1, 0, 2]
    assert compose(q, p).image.tolist() == [2, 1, 0]
    assert count_fixed_points(Permutation(np.array([1, 0, 2]))) == 1
    assert count_fixed_points(n_cycle(6)) == 0
    assert sample_uniform_permutation(1, 0) == identity(1)

"""Independent reference computations used by the tests.

Nothing here imports the numba kernels or the Newton recursion; each
oracle takes a different route to the same quantity.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import sympy


def dense_from_images(images) -> np.ndarray:
    images = np.asarray(images)
    d, n = images.shape
    M = np.zeros((n, n), dtype=object)
    for q in range(d):
        for i in range(n):
            M[i, images[q, i]] += 1
    return M


def dense_trace_power(images, k: int) -> int:
    M = dense_from_images(images)
    P = np.identity(M.shape[0], dtype=object)
    for _ in range(k):
        P = P.dot(M)
    return int(sum(P[i, i] for i in range(M.shape[0])))


def closed_walks_bruteforce(images, k: int) -> int:
    """Count words (q_1..q_k) and start vertices i with pi_{q_k}...pi_{q_1}(i) = i."""
    images = np.asarray(images)
    d, n = images.shape
    total = 0
    for word in itertools.product(range(d), repeat=k):
        for i in range(n):
            j = i
            for q in word:
                j = images[q, j]
            total += j == i
    return total


def simple_cycles_bruteforce(images, ell: int) -> int:
    """Directed simple cycles of length ell in the graph with edge set {i -> j : A_ij = 1}.

    Enumerates ordered vertex tuples with distinct entries and divides by
    the ell rotations of each cycle.
    """
    M = dense_from_images(images)
    n = M.shape[0]
    count = 0
    for tup in itertools.permutations(range(n), ell):
        if all(M[tup[t], tup[(t + 1) % ell]] == 1 for t in range(ell)):
            count += 1
    assert count % ell == 0
    return count // ell


def sympy_secular(images) -> list[int]:
    """Coefficients of det(I - zA) in z from a sympy determinant."""
    M = sympy.Matrix(dense_from_images(images).tolist())
    z = sympy.symbols("z")
    p = sympy.Poly((sympy.eye(M.shape[0]) - z * M).det(), z)
    coeffs = p.all_coeffs()[::-1]
    coeffs += [0] * (M.shape[0] + 1 - len(coeffs))
    return [int(c) for c in coeffs]


def enumerate_S_n(n: int):
    return itertools.permutations(range(n))


def fixed_point_counts(n: int) -> list[Fraction]:
    """Law of the number of fixed points under the uniform measure, by enumeration."""
    tally = [0] * (n + 1)
    for p in enumerate_S_n(n):
        tally[sum(p[i] == i for i in range(n))] += 1
    tot = math.factorial(n)
    return [Fraction(c, tot) for c in tally]


def ewens_probability(cycle_counts: dict, n: int, theta: Fraction) -> Fraction:
    """Ewens sampling formula for a cycle type {length: count}."""
    rising = Fraction(1)
    for i in range(n):
        rising *= theta + i
    num = Fraction(math.factorial(n))
    for j, a in cycle_counts.items():
        num *= Fraction(theta) ** a / (Fraction(j) ** a * math.factorial(a))
    return num / rising


def cycle_type_of(p) -> dict:
    n = len(p)
    seen = [False] * n
    out: dict = {}
    for s in range(n):
        if seen[s]:
            continue
        m, j = 0, s
        while not seen[j]:
            seen[j] = True
            j = p[j]
            m += 1
        out[m] = out.get(m, 0) + 1
    return out


def poisson_central_moment_fft(lam: float, k: int, m: int = 64, radius: float = 0.5) -> float:
    """k-th central moment of Poisson(lam) from the MGF exp(lam(e^t - 1 - t)).

    Taylor coefficients are read off with a trapezoidal Cauchy integral
    on a circle of the given radius, then multiplied by k!.
    """
    t = radius * np.exp(2j * np.pi * np.arange(m) / m)
    f = np.exp(lam * (np.exp(t) - 1 - t))
    c = np.fft.fft(f) / m
    return float((c[k] / radius**k).real * math.factorial(k))


def derangement_count_bruteforce(m: int) -> int:
    return sum(all(p[i] != i for i in range(m)) for p in enumerate_S_n(m))

"""Secular coefficients of det(I - zA) and the rescaled characteristic polynomial.

Sign convention: ``Delta_k`` is the coefficient of ``z^k`` in
``det(I - zA)``, so ``Delta_k = (-1)^k e_k`` where ``e_k`` is the sum of
the k x k principal minors (the coefficient of ``z^k`` in ``det(I + zA)``).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor

from .digraph import (
    DEFAULT_BUDGET,
    DENSE_LIMIT,
    PermSum,
    TraceVector,
    exact_power_sums,
    materialize_dense,
    sample_perm_sum,
    trace_power,
    trace_vector,
)
from .errors import InvalidArgument, ResourceLimit
from .reports import mean_report
from .rng import RngLike, as_generator

MINOR_SUM_LIMIT = 12
EXACT_ENUMERATION_LIMIT = 8
PAIR_CHECK_LIMIT = 6


@dataclass(frozen=True)
class SecularSeries:
    """``delta[k]`` for ``k = 0..K``; Python ints when exact, floats otherwise."""

    delta: tuple
    n: Optional[int] = None
    d: Optional[int] = None
    exact: bool = True

    @property
    def K(self) -> int:
        return len(self.delta) - 1

    def evaluate(self, z: complex) -> complex:
        """Truncated ``sum_k Delta_k z^k``."""
        acc = 0j
        for c in reversed(self.delta):
            acc = acc * z + float(c)
        return acc

    def rescaled(self, z: complex) -> complex:
        """``evaluate(z / sqrt(d)) / sqrt(d)``."""
        if self.d is None:
            raise InvalidArgument("rescaling needs d")
        s = math.sqrt(self.d)
        return self.evaluate(z / s) / s


def _power_sum_list(power_sums) -> list:
    if isinstance(power_sums, TraceVector):
        return list(power_sums.values)
    return list(power_sums)


def newton_secular(power_sums, K: int, n: Optional[int] = None, d: Optional[int] = None) -> SecularSeries:
    """Coefficients of ``det(I - zA)`` up to ``z^K`` from ``p_j = tr(A^j)``.

    Uses ``k Delta_k = -sum_{j=1..k} p_j Delta_{k-j}``. Integer input is
    processed in exact integer arithmetic at any K: the float recurrence
    loses about ``k log10(sqrt d)`` digits by degree k, which is fatal well
    before ``K = 64``. Float input uses compensated summation.
    """
    p = _power_sum_list(power_sums)
    if K < 0 or K > len(p):
        raise InvalidArgument(f"K={K} needs {K} power sums, {len(p)} available")
    exact = all(isinstance(x, (int, np.integer)) for x in p[:K])
    delta: list = [1]
    if exact:
        p = [int(x) for x in p[:K]]
        for k in range(1, K + 1):
            num = -sum(p[j - 1] * delta[k - j] for j in range(1, k + 1))
            q, rem = divmod(num, k)
            if rem:
                raise InvalidArgument("power sums are not those of an integer matrix")
            delta.append(q)
    else:
        p = [float(x) for x in p[:K]]
        delta = [1.0]
        for k in range(1, K + 1):
            delta.append(-math.fsum(p[j - 1] * delta[k - j] for j in range(1, k + 1)) / k)
    return SecularSeries(tuple(delta), n=n, d=d, exact=exact)


def secular_series(A: PermSum, K: Optional[int] = None) -> SecularSeries:
    """Exact ``Delta_0..Delta_K`` of a sampled A (K defaults to n)."""
    K = A.n if K is None else K
    return newton_secular(exact_power_sums(A, K), K, n=A.n, d=A.d)


def bareiss_det(M) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    a = [[int(x) for x in row] for row in M]
    m = len(a)
    if m == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(m - 1):
        if a[k][k] == 0:
            for i in range(k + 1, m):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, m):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, m):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[m - 1][m - 1]


def secular_coeff_direct(A_dense, k: int, limit: int = MINOR_SUM_LIMIT) -> int:
    """Sum of all k x k principal minors (coefficient of ``z^k`` in ``det(I + zA)``)."""
    M = np.asarray(A_dense)
    n = M.shape[0]
    if n > limit:
        raise ResourceLimit(f"principal-minor expansion limited to n <= {limit}, got {n}")
    if not 0 <= k <= n:
        raise InvalidArgument(f"k must lie in 0..{n}")
    total = 0
    for I in itertools.combinations(range(n), k):
        total += bareiss_det(M[np.ix_(I, I)])
    return total


def log_det_lu(M: np.ndarray) -> tuple[float, complex]:
    """``(log|det M|, det M / |det M|)`` from one partial-pivoting LU.

    A singular matrix gives ``(-inf, 0)``.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(M, check_finite=False)
    u = np.diag(lu)
    if np.any(u == 0):
        return -math.inf, 0j
    log_abs = float(np.sum(np.log(np.abs(u))))
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    if np.iscomplexobj(u):
        phase = complex(np.exp(1j * np.sum(np.angle(u))))
    else:
        phase = complex((-1) ** int(np.count_nonzero(u < 0)))
    if swaps % 2:
        phase = -phase
    return log_abs, phase


def rescaled_charpoly_log(A: PermSum, z: complex, limit: int = DENSE_LIMIT) -> tuple[float, complex]:
    """``(log|chi|, chi/|chi|)`` for ``chi = det(I - zA/sqrt d) / sqrt d``."""
    M = -(complex(z) / math.sqrt(A.d)) * materialize_dense(A, limit).astype(complex)
    M[np.diag_indices_from(M)] += 1.0
    log_abs, phase = log_det_lu(M)
    return log_abs - 0.5 * math.log(A.d), phase


def rescaled_charpoly_eval(A: PermSum, z: complex, limit: int = DENSE_LIMIT) -> complex:
    log_abs, phase = rescaled_charpoly_log(A, z, limit)
    if log_abs == -math.inf:
        return 0j
    return phase * math.exp(log_abs)


def log_charpoly_coeff(A: PermSum, k: int, budget: int = DEFAULT_BUDGET) -> float:
    """``(-1)^(k+1)/k * (tr(A^k) - d^k) / d^(k/2)``."""
    tr = trace_power(A, k, budget)
    return (-1) ** (k + 1) / k * (tr - A.d**k) / A.d ** (k / 2)


# ----------------------------------------------------------------------------
# moment identities


@dataclass
class SecularCheckReport:
    """Rows of ``{quantity, k, target, estimate, ...}`` plus an overall flag.

    Quantities refer to the principal-minor sums ``e_k`` (the coefficients
    of ``det(I + zA)``), for which ``E e_1 = E tr(A)``.
    """

    mode: str
    n: int
    d: int
    trials: int
    rows: list = field(default_factory=list)
    passed: bool = True


def _perm_minor_sums(image: Sequence[int]) -> list[int]:
    n = len(image)
    seen = [False] * n
    lengths = []
    for s in range(n):
        if not seen[s]:
            length, i = 0, s
            while not seen[i]:
                seen[i] = True
                i = image[i]
                length += 1
            lengths.append(length)
    traces = [sum(l for l in lengths if k % l == 0) for k in range(1, n + 1)]
    delta = newton_secular(traces, n).delta
    return [(-1) ** k * delta[k] for k in range(n + 1)]


def _exact_pair_check(n: int) -> tuple[int, Fraction]:
    """Max ``|E det A(I) det A(J)|`` over equal-size pairs with ``|I & J| <= k-2``."""
    subsets = [I for k in range(2, n + 1) for I in itertools.combinations(range(n), k)]
    rows = []
    for image in itertools.permutations(range(n)):
        P = np.zeros((n, n), dtype=np.int64)
        P[np.arange(n), image] = 1
        rows.append([bareiss_det(P[np.ix_(I, I)]) for I in subsets])
    D = np.array(rows, dtype=np.int64)
    gram = D.T @ D
    total = math.factorial(n)
    checked = 0
    worst = Fraction(0)
    for a, I in enumerate(subsets):
        for b, J in enumerate(subsets):
            k = len(I)
            if len(J) != k or len(set(I) & set(J)) > k - 2:
                continue
            checked += 1
            worst = max(worst, abs(Fraction(int(gram[a, b]), total)))
    return checked, worst


def exact_secular_moments(n: int) -> tuple[list[Fraction], list[Fraction]]:
    """``E e_k`` and ``E e_k^2`` for one uniform permutation, by full enumeration of S_n."""
    if n > EXACT_ENUMERATION_LIMIT:
        raise ResourceLimit(f"exact enumeration limited to n <= {EXACT_ENUMERATION_LIMIT}")
    s1 = [0] * (n + 1)
    s2 = [0] * (n + 1)
    for image in itertools.permutations(range(n)):
        e = _perm_minor_sums(image)
        for k in range(1, n + 1):
            s1[k] += e[k]
            s2[k] += e[k] * e[k]
    total = math.factorial(n)
    return [Fraction(s, total) for s in s1], [Fraction(s, total) for s in s2]


def mean_secular_checks(n: int, d: int, trials: int = 0, rng: RngLike = None,
                        k_max: Optional[int] = None) -> SecularCheckReport:
    """First and second moments of the secular coefficients.

    With ``d = 1`` and ``n <= 8`` everything is computed exactly over S_n:
    ``E e_1 = 1``, ``E e_k = 0`` for k >= 2, ``E e_k^2 = 2`` for k < n and
    ``E e_n^2 = 1``; for ``n <= 6`` the vanishing of
    ``E det A(I) det A(J)`` when ``|I & J| <= k - 2`` is checked too.
    Otherwise the means are estimated from ``trials`` samples, together
    with the second moments (which have targets only when ``d = 1``).
    """
    if n < 1 or d < 1:
        raise InvalidArgument("n and d must be positive")
    if d == 1 and n <= EXACT_ENUMERATION_LIMIT:
        means, seconds = exact_secular_moments(n)
        rep = SecularCheckReport("exact", n, d, math.factorial(n))
        for k in range(1, n + 1):
            target = Fraction(1 if k == 1 else 0)
            rep.rows.append(dict(quantity="mean", k=k, target=target, estimate=means[k],
                                 pass_=means[k] == target))
            target2 = Fraction(2 if k < n else 1)
            rep.rows.append(dict(quantity="second_moment", k=k, target=target2, estimate=seconds[k],
                                 pass_=seconds[k] == target2))
        if n <= PAIR_CHECK_LIMIT:
            checked, worst = _exact_pair_check(n)
            rep.rows.append(dict(quantity="pair_vanishing", k=None, target=Fraction(0), estimate=worst,
                                 pairs=checked, pass_=worst == 0))
        rep.passed = all(r["pass_"] for r in rep.rows)
        return rep

    if trials < 2:
        raise InvalidArgument("Monte Carlo mode needs trials >= 2")
    k_max = min(n, 4) if k_max is None else min(k_max, n)
    gen = as_generator(rng)
    E = np.empty((trials, k_max))
    for t in range(trials):
        A = sample_perm_sum(n, d, gen)
        delta = newton_secular(trace_vector(A, k_max), k_max).delta
        E[t] = [(-1) ** k * delta[k] for k in range(1, k_max + 1)]
    rep = SecularCheckReport("monte-carlo", n, d, trials)
    for k in range(1, k_max + 1):
        m = mean_report(f"E e_{k}", d if k == 1 else 0, E[:, k - 1])
        rep.rows.append(dict(quantity="mean", k=k, **_mrow(m)))
        sq = E[:, k - 1] ** 2
        if d == 1:
            s = mean_report(f"E e_{k}^2", 2 if k < n else 1, sq)
            rep.rows.append(dict(quantity="second_moment", k=k, **_mrow(s)))
        else:
            rep.rows.append(dict(quantity="second_moment", k=k, target=None, estimate=float(sq.mean()),
                                 std_error=float(sq.std(ddof=1) / math.sqrt(trials)), z_score=None,
                                 pass_=True))
    rep.passed = all(r["pass_"] for r in rep.rows)
    return rep


def _mrow(m) -> dict:
    return dict(target=m.target, estimate=m.estimate, std_error=m.std_error, z_score=m.z_score, pass_=m.pass_)


# ----------------------------------------------------------------------------
# second-moment tightness bound


def second_moment_bound(k: int, n: int, d: int) -> float:
    """Upper bound on ``E Delta_k^2`` from the diagonal and near-diagonal minor pairs.

    ``2 d^k sum_l C(d,l) (d/n)^l (k)_l + k d^(k+1) sum_l C(d,l) (d/n)^l (k-1)_l``.
    """
    a = sum(math.comb(d, l) * (d / n) ** l * math.perm(k, l) for l in range(d + 1))
    b = sum(math.comb(d, l) * (d / n) ** l * math.perm(k - 1, l) for l in range(d + 1)) if k >= 1 else 0.0
    return 2 * d**k * a + k * d ** (k + 1) * b


def _weighted_bound_term(k: int, n: int, d: int, r: float) -> float:
    # r^k / d^(k+1) * second_moment_bound, without forming d^k
    a = sum(math.comb(d, l) * (d / n) ** l * math.perm(k, l) for l in range(d + 1))
    b = sum(math.comb(d, l) * (d / n) ** l * math.perm(k - 1, l) for l in range(d + 1))
    return r**k * (2 * a / d + k * b)


def tail_cutoff(n: int, d: int, r: float, tol: float = 1e-6) -> tuple[int, float]:
    """Smallest K whose bound on ``sum_{k>K} r^k E Delta_k^2 / d^(k+1)`` is below ``tol``."""
    kmax = n
    terms = []
    for k in range(1, kmax + 1):
        t = _weighted_bound_term(k, n, d, r)
        terms.append(t)
        if t < tol * 1e-6 and k > 2 * d + 10:
            break
    tails = np.cumsum(terms[::-1])[::-1]  # tails[i] = sum_{k >= i+1}
    for K in range(1, len(terms) + 1):
        tail = float(tails[K]) if K < len(terms) else 0.0
        if tail < tol:
            return K, tail
    return len(terms), 0.0


@dataclass
class TightnessReport:
    n: int
    d: int
    r: float
    trials: int
    K: int
    tail_bound: float
    zeroth_term: float
    estimate: float
    std_error: float
    bound: float
    passed: bool


def tightness_bound_check(n: int, d: int, r: float, trials: int, rng: RngLike = None,
                          tol: float = 1e-6) -> TightnessReport:
    """Monte Carlo ``sum_{1<=k<=K} r^k E Delta_k^2 / d^(k+1)`` against ``(2/d + r)/(1 - r - r d^2/n)^2``.

    K is set by :func:`tail_cutoff`, so the dropped tail is provably below
    ``tol``. The ``k = 0`` term equals ``1/d`` and is reported separately.
    """
    if not 0 < r < 1:
        raise InvalidArgument(f"r must lie in (0, 1), got {r}")
    if n < 2 or d < 1:
        raise InvalidArgument("need n >= 2 and d >= 1")
    if not d < math.sqrt(n * (1 - r) / r):
        raise InvalidArgument(f"requires d < sqrt(n(1-r)/r) = {math.sqrt(n * (1 - r) / r):.4g}, got d={d}")
    if trials < 2:
        raise InvalidArgument("trials must be >= 2")
    K, tail = tail_cutoff(n, d, r, tol)
    K = min(K, n)
    gen = as_generator(rng)
    sums = np.empty(trials)
    weights = [r**k / d ** (k + 1) for k in range(K + 1)]
    for t in range(trials):
        A = sample_perm_sum(n, d, gen)
        delta = newton_secular(exact_power_sums(A, K), K).delta
        sums[t] = math.fsum(weights[k] * float(delta[k]) ** 2 for k in range(1, K + 1))
    m = mean_report("tightness", 0.0, sums)
    bound = (2 / d + r) / (1 - r - r * d * d / n) ** 2
    return TightnessReport(n, d, r, trials, K, tail, 1 / d, m.estimate, m.std_error, bound,
                           bool(m.estimate <= bound + 4 * m.std_error))

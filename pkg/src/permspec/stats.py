"""Statistical checks: factorial moments, Poisson fit, Poisson central moments,
and the trace / cycle-count limit laws (uniform and Ewens)."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import chi2

from .digraph import cycle_counts, divisors, sample_perm_sum, trace_decomposition, trace_vector
from .errors import InvalidArgument
from .poisson import sample_poisson
from .reports import (
    MomentReport,
    all_pass,
    batch_mean_report,
    correlation_report,
    covariance_report,
    mean_report,
    moment_report,
    skewness_report,
    variance_report,
)
from .rng import RngLike, RngStream, as_generator, run_trials

MAX_CENTRAL_MOMENT = 20


def falling_factorial(x, r: int):
    """``x (x-1) ... (x-r+1)``; the empty product is 1."""
    if r < 0:
        raise InvalidArgument(f"r must be >= 0, got {r}")
    out = 1
    for i in range(r):
        out = out * (x - i)
    return out


def gaussian_moment(k: int) -> int:
    """``m_k = (2k)! / (2^k k!)``, the 2k-th moment of a standard normal."""
    return math.factorial(2 * k) // (2**k * math.factorial(k))


@functools.lru_cache(maxsize=None)
def central_moment_polynomial(k: int) -> tuple:
    """Coefficients (in powers of lambda) of the k-th central moment of Poisson(lambda).

    ``mu_k / k! = [z^k] exp(lambda g(z))`` with ``g(z) = e^z - 1 - z``;
    differentiating gives ``j h_j = lambda sum_{m=2..j} m g_m h_{j-m}``.
    """
    if not 0 <= k <= MAX_CENTRAL_MOMENT:
        raise InvalidArgument(f"central moments supported for 0 <= k <= {MAX_CENTRAL_MOMENT}")
    g = [Fraction(0), Fraction(0)] + [Fraction(1, math.factorial(m)) for m in range(2, k + 1)]
    h: list[list[Fraction]] = [[Fraction(1)]]
    for j in range(1, k + 1):
        poly = [Fraction(0)] * (j // 2 + 1)
        for m in range(2, j + 1):
            for p, c in enumerate(h[j - m]):
                poly[p + 1] += m * g[m] * c / j
        h.append(poly)
    return tuple(math.factorial(k) * c for c in h[k])


def poisson_central_moment(lam: float, k: int):
    """``E (X - lam)^k`` for X ~ Poisson(lam); exact when ``lam`` is a Fraction or int."""
    if not lam > 0:
        raise InvalidArgument(f"lambda must be > 0, got {lam}")
    coeffs = central_moment_polynomial(k)
    if isinstance(lam, (int, Fraction)):
        return sum(c * Fraction(lam) ** p for p, c in enumerate(coeffs))
    return math.fsum(float(c) * lam**p for p, c in enumerate(coeffs))


def standardized_central_moment(lam: float, k: int) -> float:
    """``mu_k(lam) / lam^(k/2)`` evaluated without overflow for large lambda."""
    coeffs = central_moment_polynomial(k)
    return math.fsum(float(c) * lam ** (p - k / 2) for p, c in enumerate(coeffs) if c)


# ----------------------------------------------------------------------------
# Poisson goodness of fit


@dataclass(frozen=True)
class GofReport:
    n_samples: int
    lam: float
    tv: float
    chi2: float
    dof: int
    p_value: float


def poisson_pmf(k, lam: float):
    k = np.asarray(k)
    return np.exp(k * math.log(lam) - lam - gammaln(k + 1))


def poisson_gof(samples: Sequence[int], lam: float) -> GofReport:
    """Total variation to Poisson(lam) plus a chi-square test with pooled bins.

    TV is ``(1/2) sum_k |p_emp(k) - p(k)|`` over every k, counting the
    Poisson mass outside the sampled range. Bins are merged from both ends
    until each expected count is at least 5.
    """
    x = np.asarray(samples, dtype=np.int64)
    N = x.size
    if N < 100:
        raise InvalidArgument(f"poisson_gof needs >= 100 samples, got {N}")
    if not lam > 0:
        raise InvalidArgument("lambda must be > 0")
    top = int(max(x.max(), lam + 20 * math.sqrt(lam) + 20))
    ks = np.arange(top + 1)
    p = poisson_pmf(ks, lam)
    emp = np.bincount(x, minlength=top + 1)[: top + 1] / N
    tv = 0.5 * (float(np.abs(emp - p).sum()) + max(0.0, 1.0 - float(p.sum())))
    obs = emp * N
    exp = p * N
    exp[-1] += max(0.0, N - exp.sum())
    bins_o, bins_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and bins_e:
        bins_o[-1] += acc_o
        bins_e[-1] += acc_e
    bo, be = np.array(bins_o), np.array(bins_e)
    stat = float(np.sum((bo - be) ** 2 / be)) if be.size else 0.0
    dof = max(be.size - 1, 1)
    return GofReport(N, float(lam), tv, stat, dof, float(chi2.sf(stat, dof)))


# ----------------------------------------------------------------------------
# exact laws for one uniform permutation


def fixed_point_law_enumerated(n: int) -> list[Fraction]:
    """``P(#fix = j)`` by listing all of S_n."""
    counts = [0] * (n + 1)
    for image in itertools.permutations(range(n)):
        counts[sum(1 for i, v in enumerate(image) if i == v)] += 1
    total = math.factorial(n)
    return [Fraction(c, total) for c in counts]


def derangements(m: int) -> int:
    a, b = 1, 0  # D_0, D_1
    if m == 0:
        return 1
    for i in range(2, m + 1):
        a, b = b, (i - 1) * (a + b)
    return b


def fixed_point_law_derangement(n: int) -> list[Fraction]:
    """``P(#fix = j) = C(n, j) D_{n-j} / n!``."""
    total = math.factorial(n)
    return [Fraction(math.comb(n, j) * derangements(n - j), total) for j in range(n + 1)]


# ----------------------------------------------------------------------------
# Poisson CLT in moments


@dataclass
class CltRow:
    lam: float
    k: int
    analytic: float
    target: float
    sampled: Optional[MomentReport] = None


@dataclass
class CltReport:
    rows: list = field(default_factory=list)
    approaching: bool = True


def poisson_clt_moment_check(lambda_list: Sequence[float], k_max: int, samples: int = 0,
                             rng: RngLike = None) -> CltReport:
    """Standardized central moments ``mu_k(lam)/lam^(k/2)`` against Gaussian moments.

    The analytic column comes from :func:`central_moment_polynomial`; with
    ``samples > 0`` each entry is also estimated from exact Poisson draws
    and compared (as a z-score) with the analytic value.
    """
    lams = list(lambda_list)
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise InvalidArgument("lambda_list must be increasing")
    gen = as_generator(rng)
    rep = CltReport()
    for lam in lams:
        draws = sample_poisson(lam, samples, gen) if samples else None
        for k in range(1, k_max + 1):
            target = float(gaussian_moment(k // 2)) if k % 2 == 0 else 0.0
            analytic = standardized_central_moment(lam, k)
            row = CltRow(lam, k, analytic, target)
            if draws is not None:
                vals = ((draws - lam) / math.sqrt(lam)) ** k
                row.sampled = mean_report(f"mu_{k}/lam^{k / 2:g} at lam={lam:g}", analytic, vals)
            rep.rows.append(row)
    for k in range(1, k_max + 1):
        errs = [abs(r.analytic - r.target) for r in rep.rows if r.k == k]
        if any(b > a + 1e-15 for a, b in zip(errs, errs[1:])):
            rep.approaching = False
    return rep


# ----------------------------------------------------------------------------
# trace and cycle limit laws


def limit_trace_mean(k: int, mu) -> float:
    """``E sum_{l | k} l Lambda_l`` where ``E Lambda_l = mu(l)``."""
    return sum(l * mu(l) for l in divisors(k))


def limit_trace_cov(j: int, k: int, mu) -> float:
    """``Cov(sum_{l|j} l Lambda_l, sum_{l|k} l Lambda_l) = sum_{l | gcd} l^2 mu(l)``."""
    return sum(l * l * mu(l) for l in divisors(math.gcd(j, k)))


def uniform_params(d: int):
    return lambda l: d**l / l


def ewens_params(d: int, theta: float):
    """Limit cycle means ``(d^l + d (theta - 1)) / l``."""
    return lambda l: (d**l + d * (theta - 1)) / l


def _traces_trial(stream: RngStream, n: int, d: int, k_max: int, theta: Optional[float]):
    A = sample_perm_sum(n, d, stream.generator, theta)
    return trace_vector(A, k_max).values


def _cycles_trial(stream: RngStream, n: int, d: int, ell_max: int, k_max: int, theta: Optional[float]):
    A = sample_perm_sum(n, d, stream.generator, theta)
    Q = cycle_counts(A, ell_max).Q
    tr = trace_vector(A, k_max).values if k_max else ()
    return Q, tr


def collect_traces(n: int, d: int, k_max: int, trials: int, seed: int,
                   theta: Optional[float] = None, threads: int = 1) -> np.ndarray:
    """``(trials, k_max)`` array of exact ``tr(A^k)`` values (as floats)."""
    fn = functools.partial(_traces_trial, n=n, d=d, k_max=k_max, theta=theta)
    return np.array(run_trials(fn, trials, seed, threads), dtype=float)


def collect_cycles(n: int, d: int, ell_max: int, trials: int, seed: int, k_max: int = 0,
                   theta: Optional[float] = None, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Cycle counts ``Q_1..Q_ell_max`` (and optionally traces) per trial."""
    fn = functools.partial(_cycles_trial, n=n, d=d, ell_max=ell_max, k_max=k_max, theta=theta)
    res = run_trials(fn, trials, seed, threads)
    Q = np.array([r[0] for r in res], dtype=float)
    T = np.array([r[1] for r in res], dtype=float).reshape(trials, k_max)
    return Q, T


@dataclass
class LimitReport:
    """Moment comparisons plus optional Poisson fit of the first statistic."""

    n: int
    d: int
    trials: int
    reports: list = field(default_factory=list)
    gof: Optional[GofReport] = None
    extra: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all_pass(self.reports)


def trace_moment_reports(T: np.ndarray, mu, label: str = "tr") -> list[MomentReport]:
    """Means, variances and pairwise covariances of ``tr(A^k)`` against the Poisson limit."""
    k_max = T.shape[1]
    out = []
    for k in range(1, k_max + 1):
        out.append(mean_report(f"E {label}(A^{k})", limit_trace_mean(k, mu), T[:, k - 1]))
    for k in range(1, k_max + 1):
        out.append(variance_report(f"Var {label}(A^{k})", limit_trace_cov(k, k, mu), T[:, k - 1]))
    for j, k in itertools.combinations(range(1, k_max + 1), 2):
        out.append(covariance_report(f"Cov {label}(A^{j}),{label}(A^{k})", limit_trace_cov(j, k, mu),
                                     T[:, j - 1], T[:, k - 1]))
    return out


def trace_limit_test_fixed_d(n: int, d: int, k_max: int, trials: int, seed: int,
                             threads: int = 1) -> LimitReport:
    """Traces of A at fixed d against ``(sum_{l | k} l Lambda_l)_k`` with ``Lambda_l ~ Poisson(d^l/l)``.

    Also reports the Poisson(d) fit of ``tr(A)``.
    """
    if k_max < 1 or k_max > 5:
        raise InvalidArgument("k_max must lie in 1..5")
    T = collect_traces(n, d, k_max, trials, seed, threads=threads)
    rep = LimitReport(n, d, trials, trace_moment_reports(T, uniform_params(d)))
    if trials >= 100:
        rep.gof = poisson_gof(T[:, 0].astype(np.int64), d)
    return rep


def cycle_limit_test(n: int, d: int, ell_max: int, trials: int, seed: int,
                     theta: Optional[float] = None, threads: int = 1) -> LimitReport:
    """Cycle counts ``Q_l`` against independent Poisson laws.

    Reports ``E Q_l`` and the second factorial moment ``E (Q_l)_2`` (SE by
    20 batch means) against ``mu_l`` and ``mu_l^2``, where
    ``mu_l = d^l/l`` (uniform) or ``(d^l + d(theta - 1))/l`` (Ewens),
    the correlation of ``Q_1`` and ``Q_2``, and the Poisson fit of ``Q_1``.
    """
    mu = uniform_params(d) if theta is None else ewens_params(d, theta)
    Q, _ = collect_cycles(n, d, ell_max, trials, seed, theta=theta, threads=threads)
    rep = LimitReport(n, d, trials)
    for l in range(1, ell_max + 1):
        rep.reports.append(mean_report(f"E Q_{l}", mu(l), Q[:, l - 1]))
    for l in range(1, ell_max + 1):
        rep.reports.append(batch_mean_report(f"E (Q_{l})_2", mu(l) ** 2, falling_factorial(Q[:, l - 1], 2)))
    if ell_max >= 2:
        rep.reports.append(correlation_report("corr(Q_1, Q_2)", Q[:, 0], Q[:, 1]))
    if trials >= 100:
        rep.gof = poisson_gof(Q[:, 0].astype(np.int64), mu(1))
    return rep


def growing_d_targets(d: int, k: int) -> dict:
    """Limits for ``(tr(A^k) - d^k) / d^(k/2)``: as d grows, and at this finite d."""
    mu = uniform_params(d)
    return dict(
        mean=1.0 if k % 2 == 0 else 0.0,
        var=float(k),
        finite_mean=(limit_trace_mean(k, mu) - d**k) / d ** (k / 2),
        finite_var=limit_trace_cov(k, k, mu) / d**k,
    )


def trace_limit_test_growing_d(n: int, d: int, k_max: int, trials: int, seed: int,
                               threads: int = 1) -> LimitReport:
    """Standardized traces ``(tr(A^k) - d^k)/d^(k/2)`` against ``sqrt(k) N_k + 1{k even}``.

    Checks mean, variance and skewness of each k and the pairwise
    correlations. ``extra`` repeats mean and variance against the
    Poisson-limit values at the given finite d, which differ from the
    growing-d targets by ``O(d^(-1/2))`` for odd k >= 3.
    """
    if d**k_max > n / 10:
        raise InvalidArgument(f"need d^k_max <= n/10, got {d}^{k_max} > {n}/10")
    T = collect_traces(n, d, k_max, trials, seed, threads=threads)
    S = np.stack([(T[:, k - 1] - d**k) / d ** (k / 2) for k in range(1, k_max + 1)], axis=1)
    rep = LimitReport(n, d, trials)
    for k in range(1, k_max + 1):
        tg = growing_d_targets(d, k)
        rep.reports.append(mean_report(f"mean std tr(A^{k})", tg["mean"], S[:, k - 1]))
        rep.reports.append(variance_report(f"var std tr(A^{k})", tg["var"], S[:, k - 1]))
        rep.reports.append(skewness_report(f"skew std tr(A^{k})", 0.0, S[:, k - 1]))
        rep.extra.append(mean_report(f"mean std tr(A^{k}) [finite d]", tg["finite_mean"], S[:, k - 1]))
        rep.extra.append(variance_report(f"var std tr(A^{k}) [finite d]", tg["finite_var"], S[:, k - 1]))
    for j, k in itertools.combinations(range(1, k_max + 1), 2):
        rep.reports.append(correlation_report(f"corr std tr(A^{j}),tr(A^{k})", S[:, j - 1], S[:, k - 1]))
    return rep


def ewens_trace_limit_test(n: int, d: int, theta: float, k_max: int, trials: int, seed: int,
                           ell_max: Optional[int] = None, threads: int = 1) -> LimitReport:
    """Ewens(theta) version: trace means ``sum_{l|k} l mu_l`` and cycle means ``mu_l``
    with ``mu_l = (d^l + d(theta - 1))/l``."""
    if not theta > 0:
        raise InvalidArgument("theta must be > 0")
    ell_max = k_max if ell_max is None else ell_max
    mu = ewens_params(d, theta)
    Q, T = collect_cycles(n, d, ell_max, trials, seed, k_max=k_max, theta=theta, threads=threads)
    rep = LimitReport(n, d, trials)
    for k in range(1, k_max + 1):
        rep.reports.append(mean_report(f"E tr(A^{k})", limit_trace_mean(k, mu), T[:, k - 1]))
    for l in range(1, ell_max + 1):
        rep.reports.append(mean_report(f"E Q_{l}", mu(l), Q[:, l - 1]))
    return rep


# ----------------------------------------------------------------------------
# residual trend


def _residual_trial(stream: RngStream, n: int, d: int, k_max: int):
    A = sample_perm_sum(n, d, stream.generator)
    out = []
    for k in range(1, k_max + 1):
        dec = trace_decomposition(A, k)
        out.append(dec.residual)
    return out


@dataclass
class ResidualTrend:
    d: int
    k_max: int
    n_list: list
    mean_residual: dict
    std_error: dict
    decreasing: bool


def residual_trend(n_list: Sequence[int], d: int, k_max: int, trials: int, seed: int,
                   threads: int = 1) -> ResidualTrend:
    """Mean of ``sum_{k <= k_max} (tr(A^k) - T_k)`` for each n in ``n_list``.

    ``decreasing`` is set when the means strictly decrease along the list.
    """
    means, ses = {}, {}
    for i, n in enumerate(n_list):
        fn = functools.partial(_residual_trial, n=n, d=d, k_max=k_max)
        R = np.array(run_trials(fn, trials, seed, threads, offset=i * trials), dtype=float)
        tot = R.sum(axis=1)
        means[n] = float(tot.mean())
        ses[n] = float(tot.std(ddof=1) / math.sqrt(trials))
    ns = list(n_list)
    dec = all(means[b] < means[a] for a, b in zip(ns, ns[1:]))
    return ResidualTrend(d, k_max, ns, means, ses, dec)


def factorial_moment_report(values, r: int, target: float, name: str = "") -> MomentReport:
    """``E (X)_r`` with a 20-batch-means standard error."""
    x = np.asarray(values, dtype=float)
    return batch_mean_report(name or f"E (X)_{r}", target, falling_factorial(x, r))


__all__ = [
    "MomentReport",
    "moment_report",
    "falling_factorial",
    "gaussian_moment",
    "central_moment_polynomial",
    "poisson_central_moment",
    "standardized_central_moment",
    "poisson_gof",
    "GofReport",
    "poisson_clt_moment_check",
    "trace_limit_test_fixed_d",
    "trace_limit_test_growing_d",
    "ewens_trace_limit_test",
    "cycle_limit_test",
    "residual_trend",
    "fixed_point_law_enumerated",
    "fixed_point_law_derangement",
    "factorial_moment_report",
]

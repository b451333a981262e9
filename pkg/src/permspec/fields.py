"""Random analytic fields Y_d, X_d, Upsilon_d, X_inf and the two limit laws.

All four fields are power series with zero constant term and real
coefficients. ``coeffs[..., k-1]`` holds the coefficient of ``z^k``.
Writing ``s_l = (Lambda_l - d^l/l) / sqrt(d^l/l)`` for the standardized
Poisson draws,

* X_d:  ``c_k = s_k / sqrt(k)``
* Y_d:  ``c_k = (1/k) sum_{l | k} sqrt(l) s_l d^((l-k)/2)``
* Upsilon_d: the same sum restricted to ``l < k`` (so ``Y_d = X_d + Upsilon_d``)
* X_inf: ``c_k = N_k / sqrt(k)`` with i.i.d. standard normals.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidArgument
from .poisson import PoissonDraws, sample_poisson_coeffs
from .reports import MomentReport, moment_report
from .rng import RngLike, as_generator

KINDS = ("Y_d", "X_d", "Upsilon_d", "X_inf")
GUARD_RADIUS = 0.99


def default_truncation(r: float) -> int:
    """``max(64, ceil(log(1e-12) / log r))`` for evaluation radius ``r``."""
    if not 0 < r < 1:
        return 64
    return max(64, math.ceil(math.log(1e-12) / math.log(r)))


@dataclass(frozen=True)
class FieldSample:
    kind: str
    d: Optional[int]
    L: int
    coeffs: np.ndarray
    approximate: bool = False

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-1]


def _divisor_lists(L: int) -> list[list[int]]:
    divs: list[list[int]] = [[] for _ in range(L + 1)]
    for l in range(1, L + 1):
        for k in range(2 * l, L + 1, l):
            divs[k].append(l)
    return divs


def coefficients_from_draws(draws: PoissonDraws, centered: bool = True) -> dict[str, np.ndarray]:
    """Y_d, X_d and Upsilon_d coefficient arrays sharing one set of Poisson draws.

    With ``centered=False`` the Y_d series uses the raw counts ``Lambda_l``
    (the extra deterministic part ``sum_{l | k} d^l / (k d^(k/2))``).
    """
    d, L = draws.d, draws.L
    s = draws.standardized
    k = np.arange(1, L + 1)
    X = s / np.sqrt(k)
    U = np.zeros_like(s)
    logd = math.log(d)
    divs = _divisor_lists(L)
    for kk in range(2, L + 1):
        for l in divs[kk]:
            U[..., kk - 1] += (math.sqrt(l) * math.exp(0.5 * (l - kk) * logd)) * s[..., l - 1]
        U[..., kk - 1] /= kk
    Y = X + U
    if not centered:
        shift = np.array([sum(math.exp((l - kk / 2) * logd) for l in divs[kk] + [kk]) / kk
                          for kk in range(1, L + 1)])
        Y = Y + shift
    return {"Y_d": Y, "X_d": X, "Upsilon_d": U}


def sample_field(kind: str, d: Optional[int], L: int, rng: RngLike,
                 size: Optional[int] = None, centered: bool = True) -> FieldSample:
    """Truncated coefficients of one field (or a batch of ``size`` fields)."""
    if kind not in KINDS:
        raise InvalidArgument(f"kind must be one of {KINDS}, got {kind!r}")
    if L < 1:
        raise InvalidArgument(f"L must be >= 1, got {L}")
    gen = as_generator(rng)
    if kind == "X_inf":
        shape = (L,) if size is None else (size, L)
        return FieldSample(kind, None, L, gen.standard_normal(shape) / np.sqrt(np.arange(1, L + 1)))
    if d is None or d < 1:
        raise InvalidArgument(f"{kind} needs a finite d >= 1")
    draws = sample_poisson_coeffs(d, L, gen, size)
    coeffs = coefficients_from_draws(draws, centered)[kind]
    return FieldSample(kind, d, L, coeffs, bool(draws.approximate.any()))


def sample_coupled_fields(d: int, L: int, rng: RngLike, size: Optional[int] = None) -> dict[str, FieldSample]:
    """Y_d, X_d and Upsilon_d built from the same Poisson draws."""
    draws = sample_poisson_coeffs(d, L, rng, size)
    approx = bool(draws.approximate.any())
    return {kind: FieldSample(kind, d, L, c, approx)
            for kind, c in coefficients_from_draws(draws).items()}


def _check_domain(z) -> np.ndarray:
    za = np.asarray(z, dtype=complex)
    if np.any(np.abs(za) > GUARD_RADIUS):
        raise DomainError(f"|z| must be <= {GUARD_RADIUS}")
    return za


def eval_coeffs(coeffs: np.ndarray, z) -> np.ndarray:
    """``sum_k coeffs[..., k-1] z^k`` for an array of points; output shape batch + z.shape."""
    za = np.asarray(z, dtype=complex)
    flat = za.reshape(-1)
    acc = np.zeros(coeffs.shape[:-1] + flat.shape, dtype=complex)
    for k in range(coeffs.shape[-1] - 1, -1, -1):
        acc = (acc + coeffs[..., k, None]) * flat
    return acc.reshape(coeffs.shape[:-1] + za.shape)


def eval_field(f: FieldSample, z, with_bound: bool = False):
    """Evaluate the truncated series at ``z`` (scalar or array, ``|z| <= 0.99``).

    With ``with_bound`` also returns ``max|c_k| |z|^(L+1) / (1 - |z|)``, the
    geometric majorant of the dropped tail built from the largest retained
    coefficient.
    """
    za = _check_domain(z)
    val = eval_coeffs(f.coeffs, za)
    if np.ndim(z) == 0 and not f.batch_shape:
        val = complex(val)
    if not with_bound:
        return val
    cmax = np.max(np.abs(f.coeffs), axis=-1)
    r = np.abs(za)
    bound = np.multiply.outer(cmax, r ** (f.L + 1) / (1 - r))
    if np.ndim(z) == 0 and not f.batch_shape:
        bound = float(bound)
    return val, bound


# ----------------------------------------------------------------------------
# exponential moment of -Y_d


def _product_truncation(z: complex) -> int:
    a = abs(z)
    if a == 0:
        return 1
    # the l-th log factor is at most |z|^(2l)/(l(1-|z|^2)) once the series form kicks in
    return max(1, math.ceil(math.log(1e-16 * (1 - a * a)) / (2 * math.log(a))))


def log_exp_moment_Yd(z: complex, d: int, L: Optional[int] = None) -> complex:
    """``log E exp(-Y_d(z)) = -sum_l (d^l/l) log f_l(z/sqrt d)``, ``f_l(w) = (1-w^l) e^(w^l)``."""
    z = complex(z)
    if abs(z) > GUARD_RADIUS:
        raise DomainError(f"|z| must be <= {GUARD_RADIUS}")
    if d < 1:
        raise InvalidArgument("d must be >= 1")
    L = _product_truncation(z) if L is None else L
    w = z / math.sqrt(d)
    total = 0j
    for l in range(1, L + 1):
        u = w**l
        if abs(u) > 1e-3:
            total -= (d**l / l) * (cmath.log(1 - u) + u)
        else:
            # -lam log f = lam sum_{m>=2} u^m/m ; lam u^m = z^(lm) d^(l(1-m/2)) / l
            zl = z**l
            term_sum = 0j
            m = 2
            while True:
                t = zl**m * d ** (l * (1 - m / 2)) / (l * m)
                term_sum += t
                if abs(t) < 1e-18 * max(1.0, abs(term_sum)) or m > 200:
                    break
                m += 1
            total += term_sum
    return total


def exp_moment_Yd(z: complex, d: int, L: Optional[int] = None) -> complex:
    """``E exp(-Y_d(z))`` as the inverse of the infinite product, summed in log form."""
    return cmath.exp(log_exp_moment_Yd(z, d, L))


def log_exp_moment_Yd_series(z: complex, d: int) -> complex:
    """``sum_k z^k/(k d^(k/2)) sum_{l | k, l < k} d^l``, the power-series form of the same log."""
    z = complex(z)
    if abs(z) > GUARD_RADIUS:
        raise DomainError(f"|z| must be <= {GUARD_RADIUS}")
    a = abs(z)
    if a == 0:
        return 0j
    K = math.ceil(math.log(1e-17) / math.log(a)) + 2
    total = 0j
    logd = math.log(d)
    for k in range(2, K + 1):
        inner = sum(math.exp((l - k / 2) * logd) for l in range(1, k // 2 + 1) if k % l == 0)
        total += z**k * inner / k
    return total


def exp_moment_Yd_series(z: complex, d: int) -> complex:
    return cmath.exp(log_exp_moment_Yd_series(z, d))


# ----------------------------------------------------------------------------
# limit laws


@dataclass
class LimitLawFunction:
    """A sampled limit function, callable on ``|z| <= 0.99``."""

    regime: str
    d: Optional[int]
    field: FieldSample

    def __call__(self, z):
        za = _check_domain(z)
        scalar = np.ndim(z) == 0
        flat = za.reshape(-1)
        F = eval_coeffs(self.field.coeffs, flat)
        if self.regime == "fixed_d":
            norm = np.array([exp_moment_Yd(complex(x), self.d) for x in flat])
            out = (flat - 1 / math.sqrt(self.d)) * np.exp(-F) / norm
        else:
            out = flat * np.sqrt(1 - flat**2) * np.exp(F)
        out = out.reshape(self.field.batch_shape + za.shape)
        return complex(out) if scalar and not self.field.batch_shape else out


def limit_law_sample(regime: str, d: Optional[int], L: int, rng: RngLike,
                     size: Optional[int] = None) -> LimitLawFunction:
    """``fixed_d``: ``(z - 1/sqrt d) e^{-Y_d(z)} / E e^{-Y_d(z)}``; ``growing_d``: ``z sqrt(1-z^2) e^{X_inf(z)}``."""
    if regime == "fixed_d":
        if d is None or d < 1:
            raise InvalidArgument("fixed_d needs a finite d >= 1")
        return LimitLawFunction(regime, d, sample_field("Y_d", d, L, rng, size))
    if regime == "growing_d":
        return LimitLawFunction(regime, None, sample_field("X_inf", None, L, rng, size))
    raise InvalidArgument(f"regime must be fixed_d or growing_d, got {regime!r}")


# ----------------------------------------------------------------------------
# covariance structure


def log_kernel(z: complex, w: complex) -> complex:
    """``log(1/(1 - zw))``, the common kernel of X_d and X_inf."""
    return -cmath.log(1 - complex(z) * complex(w))


def Yd_kernel(z: complex, w: complex, d: int) -> complex:
    """Exact ``E[Y_d(z) Y_d(w)] = sum_l (d^l/l) log(1-(z/sqrt d)^l) log(1-(w/sqrt d)^l)``."""
    a, b = complex(z) / math.sqrt(d), complex(w) / math.sqrt(d)
    total = 0j
    for l in range(1, 100000):
        al, bl = a**l, b**l
        t = (d**l / l) * cmath.log(1 - al) * cmath.log(1 - bl) if abs(al * bl) > 1e-300 else 0j
        total += t
        if abs(t) < 1e-18 and l > 2:
            break
    return total


@dataclass
class CovarianceRow:
    z: complex
    w: complex
    target: complex
    estimate: complex
    std_error_re: float
    std_error_im: float
    z_score_re: float
    z_score_im: float
    passed: bool
    correction: Optional[complex] = None


def covariance_check(kind: str, d: Optional[int], pairs: Sequence[tuple], samples: int,
                     rng: RngLike, L: Optional[int] = None) -> list[CovarianceRow]:
    """Empirical ``E[f(z) f(w)]`` against the log kernel.

    For Y_d the target is the exact kernel of Y_d and ``correction``
    records its distance from the log kernel.
    """
    if kind not in ("X_d", "X_inf", "Y_d"):
        raise InvalidArgument(f"kind must be X_d, X_inf or Y_d, got {kind!r}")
    pts = [(complex(z), complex(w)) for z, w in pairs]
    if any(abs(z) > 0.9 or abs(w) > 0.9 for z, w in pts):
        raise DomainError("covariance pairs must lie in |z| <= 0.9")
    L = default_truncation(0.9) if L is None else L
    f = sample_field(kind, d, L, rng, size=samples)
    rows = []
    for z, w in pts:
        fz = eval_coeffs(f.coeffs, z)
        fw = eval_coeffs(f.coeffs, w)
        prod = fz * fw
        est = complex(prod.mean())
        se_re = float(prod.real.std(ddof=1) / math.sqrt(samples))
        se_im = float(prod.imag.std(ddof=1) / math.sqrt(samples))
        base = log_kernel(z, w)
        target = Yd_kernel(z, w, d) if kind == "Y_d" else base
        zr = _z(est.real, target.real, se_re)
        zi = _z(est.imag, target.imag, se_im)
        rows.append(CovarianceRow(z, w, target, est, se_re, se_im, zr, zi,
                                  abs(zr) <= 4 and abs(zi) <= 4,
                                  target - base if kind == "Y_d" else None))
    return rows


def _z(est: float, target: float, se: float) -> float:
    if se > 0:
        return (est - target) / se
    return 0.0 if abs(est - target) < 1e-12 else math.inf


# ----------------------------------------------------------------------------
# d -> infinity


def circle_mesh(r: float, m: int = 64) -> np.ndarray:
    return r * np.exp(2j * math.pi * np.arange(m) / m)


def upsilon_bound(d: int, r: float) -> float:
    """``(r^2/2) / (d^(1/4) - r)^2``, valid when ``d^(1/4) > r``."""
    return (r * r / 2) / (d**0.25 - r) ** 2


@dataclass
class FieldConvergenceRow:
    d: int
    upsilon_sup_sq: MomentReport
    upsilon_bound: float
    below_bound: bool
    skewness_X1: float
    excess_kurtosis_X1: float
    gaussian_distance: float


@dataclass
class FieldConvergenceReport:
    r: float
    rows: list = field(default_factory=list)
    upsilon_decreasing: bool = True
    distance_decreasing: bool = True


def field_convergence_d(d_list: Sequence[int], L: Optional[int], samples: int, rng: RngLike,
                        r: float = 0.9, mesh: int = 64) -> FieldConvergenceReport:
    """``E sup_{|z|=r} |Upsilon_d|^2`` and the non-Gaussianity of X_d as d grows.

    The sup is a maximum over ``mesh`` equispaced points of the circle of
    radius r (the maximum modulus sits on the boundary). The distance to
    Gaussian is ``|skew| + |excess kurtosis|`` of the first X_d
    coefficient, estimated from the samples.
    """
    ds = list(d_list)
    if any(b <= a for a, b in zip(ds, ds[1:])):
        raise InvalidArgument("d_list must be strictly increasing")
    L = default_truncation(r) if L is None else L
    gen = as_generator(rng)
    pts = circle_mesh(r, mesh)
    rep = FieldConvergenceReport(r)
    for d in ds:
        F = sample_coupled_fields(d, L, gen, size=samples)
        ups = eval_coeffs(F["Upsilon_d"].coeffs, pts)
        sup2 = np.max(np.abs(ups) ** 2, axis=-1)
        bound = upsilon_bound(d, r) if d**0.25 > r else math.inf
        m = moment_report(f"E sup|Upsilon_{d}|^2", bound, float(sup2.mean()),
                          float(sup2.std(ddof=1) / math.sqrt(samples)), samples)
        x1 = F["X_d"].coeffs[:, 0]
        c = x1 - x1.mean()
        v = float(np.mean(c**2))
        skew = float(np.mean(c**3)) / v**1.5
        kurt = float(np.mean(c**4)) / v**2 - 3
        rep.rows.append(FieldConvergenceRow(d, m, bound, m.estimate <= bound + 4 * m.std_error,
                                            skew, kurt, abs(skew) + abs(kurt)))
    for a, b in zip(rep.rows, rep.rows[1:]):
        if b.upsilon_sup_sq.estimate > a.upsilon_sup_sq.estimate + 4 * math.hypot(
                a.upsilon_sup_sq.std_error, b.upsilon_sup_sq.std_error):
            rep.upsilon_decreasing = False
        if b.gaussian_distance > a.gaussian_distance:
            rep.distance_decreasing = False
    return rep


def exact_gaussian_distance(d: int) -> float:
    """``|skew| + |excess kurtosis|`` of the first X_d coefficient: ``d^(-1/2) + 1/d``."""
    return d**-0.5 + 1 / d


def uncentered_d1_sup(L: int, rng: RngLike, r: float = 0.9, mesh: int = 64) -> float:
    """Sup over the r-circle of one uncentered d = 1 series ``sum z^k/k sum_{l|k} l Lambda_l``."""
    f = sample_field("Y_d", 1, L, rng, centered=False)
    return float(np.max(np.abs(eval_coeffs(f.coeffs, circle_mesh(r, mesh)))))


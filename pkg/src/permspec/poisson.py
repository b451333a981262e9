"""Poisson variates over a very wide range of means.

* ``lam < 10``: inversion against a tabulated CDF.
* ``10 <= lam <= 1e6``: Hormann's transformed rejection with squeeze (PTRS).
* ``lam > 1e6``: ``round(lam + sqrt(lam) N)``, flagged as approximate.

Draws for huge means are also available in standardized form
``(Lambda - lam) / sqrt(lam)``, which stays meaningful when ``lam``
exceeds the float integer range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InvalidArgument
from .rng import RngLike, as_generator

INVERSION_MAX = 10.0
EXACT_MAX = 1e6
_FLOAT_EXACT = 2.0**52


def _inversion(lam: float, size: int, gen: np.random.Generator) -> np.ndarray:
    kmax = int(lam + 12 * math.sqrt(lam) + 30)
    k = np.arange(kmax + 1)
    pmf = np.exp(k * math.log(lam) - lam - gammaln(k + 1))
    cdf = np.cumsum(pmf)
    u = gen.random(size)
    out = np.searchsorted(cdf, u, side="right")
    return np.minimum(out, kmax).astype(np.int64)


def _ptrs(lam: float, size: int, gen: np.random.Generator) -> np.ndarray:
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    log_invalpha = math.log(1.1239 + 1.1328 / (b - 3.4))
    vr = 0.9277 - 3.6224 / (b - 2)
    out = np.empty(size, dtype=np.int64)
    todo = np.arange(size)
    while todo.size:
        m = todo.size
        U = gen.random(m) - 0.5
        V = gen.random(m)
        us = 0.5 - np.abs(U)
        k = np.floor((2 * a / us + b) * U + lam + 0.43)
        fast = (us >= 0.07) & (V <= vr)
        reject = (k < 0) | ((us < 0.013) & (V > us))
        kk = np.maximum(k, 0)
        with np.errstate(divide="ignore"):
            slow = (~fast & ~reject) & (
                np.log(V) + log_invalpha - np.log(a / (us * us) + b)
                <= -lam + kk * loglam - gammaln(kk + 1)
            )
        ok = fast | slow
        out[todo[ok]] = k[ok].astype(np.int64)
        todo = todo[~ok]
    return out


def sample_poisson(lam: float, size: int, rng: RngLike) -> np.ndarray:
    """``size`` Poisson(lam) integers; exact up to ``lam = 1e6``."""
    if not lam >= 0:
        raise InvalidArgument(f"lambda must be >= 0, got {lam}")
    gen = as_generator(rng)
    if lam == 0:
        return np.zeros(size, dtype=np.int64)
    if lam < INVERSION_MAX:
        return _inversion(lam, size, gen)
    if lam <= EXACT_MAX:
        return _ptrs(lam, size, gen)
    if lam > 2.0**62:
        raise InvalidArgument("integer draws unavailable above 2^62; use standardized draws")
    x = np.floor(lam + math.sqrt(lam) * gen.standard_normal(size) + 0.5)
    return np.maximum(x, 0).astype(np.int64)


def sample_poisson_standardized(log_lam: float, size: int, rng: RngLike) -> tuple[np.ndarray, bool]:
    """``(Lambda - lam)/sqrt(lam)`` for ``lam = exp(log_lam)``, plus an approximation flag."""
    gen = as_generator(rng)
    lam = math.exp(log_lam) if log_lam < 700 else math.inf
    if lam <= EXACT_MAX:
        x = sample_poisson(lam, size, gen)
        return (x - lam) / math.sqrt(lam), False
    n = gen.standard_normal(size)
    if lam < _FLOAT_EXACT:
        slam = math.sqrt(lam)
        return (np.floor(lam + slam * n + 0.5) - lam) / slam, True
    # rounding moves the value by less than 1/sqrt(lam) < 2^-26 in these units
    return n, True


@dataclass(frozen=True)
class PoissonDraws:
    """Independent ``Lambda_l ~ Poisson(d^l / l)`` for ``l = 1..L``.

    ``standardized[..., l-1] = (Lambda_l - lam_l) / sqrt(lam_l)``; a leading
    batch axis is present when several samples were drawn together.
    ``approximate[l-1]`` marks means above 1e6 drawn by rounded normal.
    """

    d: int
    L: int
    log_lam: np.ndarray
    standardized: np.ndarray
    approximate: np.ndarray

    @property
    def lam(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_lam)

    @property
    def values(self) -> np.ndarray:
        """Integer counts ``Lambda_l`` (approximate where flagged); needs every mean below 2^62."""
        if self.log_lam.max() >= 62 * math.log(2):
            raise InvalidArgument("integer counts unavailable for means above 2^62")
        lam = self.lam
        return np.floor(lam + np.sqrt(lam) * self.standardized + 0.5).astype(np.int64)


def poisson_log_means(d: int, L: int) -> np.ndarray:
    """``log(d^l / l)`` for ``l = 1..L``."""
    l = np.arange(1, L + 1)
    return l * math.log(d) - np.log(l)


def sample_poisson_coeffs(d: int, L: int, rng: RngLike, size: int | None = None) -> PoissonDraws:
    if d < 1 or L < 1:
        raise InvalidArgument(f"need d >= 1 and L >= 1, got d={d}, L={L}")
    gen = as_generator(rng)
    m = 1 if size is None else int(size)
    log_lam = poisson_log_means(d, L)
    std = np.empty((m, L))
    approx = np.zeros(L, dtype=bool)
    for l in range(L):
        std[:, l], approx[l] = sample_poisson_standardized(float(log_lam[l]), m, gen)
    if size is None:
        std = std[0]
    return PoissonDraws(d=d, L=L, log_lam=log_lam, standardized=std, approximate=approx)

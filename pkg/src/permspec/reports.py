"""Small result records shared by the checking routines."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

Z_THRESHOLD = 4.0


@dataclass(frozen=True)
class MomentReport:
    """Estimate vs target with a z-score; ``pass_`` when ``|z| <= 4``."""

    name: str
    target: float
    estimate: float
    std_error: float
    n_samples: int
    z_score: float
    pass_: bool

    def as_dict(self) -> dict:
        return asdict(self)


def moment_report(name: str, target: float, estimate: float, std_error: float, n_samples: int) -> MomentReport:
    if std_error > 0:
        z = (estimate - target) / std_error
    else:
        z = 0.0 if math.isclose(estimate, target, rel_tol=1e-12, abs_tol=1e-12) else math.inf
    return MomentReport(name, float(target), float(estimate), float(std_error), int(n_samples),
                        float(z), bool(abs(z) <= Z_THRESHOLD))


def mean_report(name: str, target: float, values) -> MomentReport:
    """Sample mean with the usual ``s / sqrt(N)`` standard error."""
    x = np.asarray(values, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return moment_report(name, target, float(x.mean()), se, x.size)


def variance_report(name: str, target: float, values) -> MomentReport:
    """Sample variance; SE from the fourth central moment."""
    x = np.asarray(values, dtype=float)
    N = x.size
    c = x - x.mean()
    var = float(c @ c / (N - 1))
    m4 = float(np.mean(c**4))
    se = math.sqrt(max(m4 - var**2 * (N - 3) / (N - 1), 0.0) / N)
    return moment_report(name, target, var, se, N)


def batch_mean_report(name: str, target: float, values, batches: int = 20) -> MomentReport:
    """Mean with SE from ``batches`` equal batch means (robust to heavy tails)."""
    x = np.asarray(values, dtype=float)
    N = x.size
    b = min(batches, N)
    if b < 2:
        return moment_report(name, target, float(x.mean()), 0.0, N)
    means = np.array([chunk.mean() for chunk in np.array_split(x, b)])
    se = float(means.std(ddof=1) / math.sqrt(b))
    return moment_report(name, target, float(x.mean()), se, N)


def correlation_report(name: str, x, y, target: float = 0.0) -> MomentReport:
    """Pearson correlation; SE by the delta method on standardized products."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    N = x.size
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return moment_report(name, target, 0.0, 0.0, N)
    u = (x - x.mean()) / sx
    v = (y - y.mean()) / sy
    rho = float(np.mean(u * v))
    # influence function of the correlation coefficient
    infl = u * v - rho * (u**2 + v**2) / 2
    se = float(infl.std(ddof=1) / math.sqrt(N))
    return moment_report(name, target, rho, se, N)


def covariance_report(name: str, target: float, x, y) -> MomentReport:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    N = x.size
    prod = (x - x.mean()) * (y - y.mean())
    cov = float(prod.sum() / (N - 1))
    se = float(prod.std(ddof=1) / math.sqrt(N))
    return moment_report(name, target, cov, se, N)


def all_pass(reports) -> bool:
    return all(r.pass_ for r in reports)


@dataclass(frozen=True)
class Interval:
    low: float
    high: float


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> Interval:
    if trials <= 0:
        return Interval(0.0, 1.0)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return Interval(max(0.0, centre - half), min(1.0, centre + half))


def skewness_report(name: str, target: float, values) -> MomentReport:
    """Sample skewness with a delta-method SE."""
    x = np.asarray(values, dtype=float)
    N = x.size
    c = x - x.mean()
    s2 = float(np.mean(c**2))
    g1 = float(np.mean(c**3)) / s2**1.5
    z = c / math.sqrt(s2)
    infl = z**3 - 3 * z - 1.5 * g1 * (z**2 - 1)
    se = float(infl.std(ddof=1) / math.sqrt(N))
    return moment_report(name, target, g1, se, N)


"""Eigenvalue-side tools: |lambda_2|, small dense spectra, the oriented
Kesten-McKay density and log-potential, log-potential fluctuations, IPR."""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.integrate
import scipy.linalg

from .digraph import DENSE_LIMIT, PermSum, apply, materialize_dense, sample_perm_sum
from .errors import InvalidArgument, NumericalFailure, ResourceLimit
from .reports import Interval, wilson_interval
from .rng import RngLike, RngStream, as_generator, run_trials
from .secular import log_det_lu

SPECTRUM_LIMIT = 2000
FLAG_DISTANCE = 1e-6
RESIDUAL_FACTOR = 10.0


@dataclass(frozen=True)
class GapEstimate:
    lambda2_modulus: float
    iterations: int
    residual: float
    converged: bool
    method: str


def _growth_estimate(log_growth: list, window: int) -> float:
    return math.exp(sum(log_growth[-window:]) / min(window, len(log_growth)))


def second_eigenvalue_modulus(A: PermSum, tol: float = 1e-7, max_iter: int = 3000,
                              rng: RngLike = None, block: Optional[int] = None,
                              window: int = 20) -> GapEstimate:
    """Spectral radius of A on the invariant subspace ``{v : sum v = 0}``.

    Block subspace iteration: each sweep applies A, removes column means
    and re-orthonormalizes by QR. Two estimates are tracked:

    * the largest Ritz-value modulus of the compressed operator
      (``method='ritz'``), accurate once the block has aligned with the
      dominant invariant subspace;
    * the geometric mean of the norm growth of the leading column over the
      last ``window`` sweeps (``2 * window`` if successive growth factors
      alternate), which is plain power iteration (``method='growth'``).

    The Ritz estimate is returned as soon as it changes by less than
    ``tol`` (relative) over ``window`` sweeps and the leading Ritz pair has
    relative residual below ``10 * tol``. The residual gate matters when
    the spectrum is clustered, where the Ritz value can stall well away
    from its limit. When that never happens, as for a single
    permutation (A orthogonal: the compressed matrix is frozen while the
    block just rotates), a settled growth estimate is returned instead. Otherwise the
    result carries ``converged=False``.
    """
    n, d = A.n, A.d
    if n < 2:
        raise InvalidArgument("n must be >= 2")
    p = min(n - 1, 24 if block is None else block)
    gen = as_generator(rng)
    V = gen.standard_normal((n, p))
    V -= V.mean(axis=0)
    V, _ = np.linalg.qr(V)
    ritz: list[float] = []
    log_growth: list[float] = []
    growth: list[float] = []
    for it in range(1, max_iter + 1):
        W = apply(A, V)
        W -= W.mean(axis=0)
        H = V.T @ W
        theta, Y = np.linalg.eig(H)
        top = int(np.argmax(np.abs(theta)))
        ritz.append(float(abs(theta[top])))
        # residual of the leading Ritz pair; stays large if the block is not (nearly) invariant
        res_vec = W @ Y[:, top] - theta[top] * (V @ Y[:, top])
        pair_res = float(np.linalg.norm(res_vec)) / max(abs(theta[top]), 1e-300)
        nrm = float(np.linalg.norm(W[:, 0]))
        if nrm == 0.0:
            return GapEstimate(0.0, it, 0.0, True, "growth")
        log_growth.append(math.log(nrm))
        w = window
        if len(log_growth) >= 2 * window:
            steps = np.diff(log_growth[-window:])
            if np.all(steps[1:] * steps[:-1] < 0):
                w = 2 * window
        growth.append(_growth_estimate(log_growth, w))
        if it > window:
            rel = abs(ritz[-1] - ritz[-1 - window]) / max(ritz[-1], 1e-300)
            if rel < tol and pair_res < RESIDUAL_FACTOR * tol:
                return GapEstimate(min(ritz[-1], float(d)), it, rel, True, "ritz")
        V, _ = np.linalg.qr(W)
    rel_r = abs(ritz[-1] - ritz[-1 - window]) / max(ritz[-1], 1e-300) if max_iter > window else math.inf
    if len(growth) > window:
        rel_g = abs(growth[-1] - growth[-1 - window]) / max(growth[-1], 1e-300)
        if rel_g < tol:
            return GapEstimate(min(growth[-1], float(d)), max_iter, rel_g, True, "growth")
    return GapEstimate(min(ritz[-1], float(d)), max_iter, rel_r, False, "ritz")


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None


def full_spectrum_small(A: PermSum, want_vectors: bool = False,
                        limit: int = SPECTRUM_LIMIT) -> SpectrumResult:
    """All eigenvalues of A, sorted by decreasing modulus (ties by argument).

    Uses LAPACK ``geev``: balancing, Hessenberg reduction and the Francis
    double-shift QR; eigenvectors come back with unit 2-norm.
    """
    if A.n > limit:
        raise ResourceLimit(f"n={A.n} exceeds the dense eigensolver limit {limit}")
    M = materialize_dense(A).astype(float)
    try:
        if want_vectors:
            w, v = scipy.linalg.eig(M, right=True, check_finite=False)
        else:
            w = scipy.linalg.eigvals(M, check_finite=False)
            v = None
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"QR iteration failed: {exc}") from exc
    order = np.lexsort((np.angle(w), -np.abs(w)))
    return SpectrumResult(w[order], None if v is None else v[:, order])


def second_modulus_dense(A: PermSum) -> float:
    """``|lambda_2|`` from the dense spectrum, with one copy of d removed."""
    w = full_spectrum_small(A).eigenvalues
    i = int(np.argmin(np.abs(w - A.d)))
    return float(np.max(np.abs(np.delete(w, i)))) if w.size > 1 else 0.0


# ----------------------------------------------------------------------------
# oriented Kesten-McKay law


def _check_d(d: int) -> None:
    if d < 2:
        raise InvalidArgument(f"d must be >= 2, got {d}")


def okm_density(z, d: int):
    """``d^2 (d-1) / pi * 1{|z| < sqrt d} / (d^2 - |z|^2)^2``."""
    _check_d(d)
    r2 = np.abs(np.asarray(z, dtype=complex)) ** 2
    out = np.where(r2 < d, d * d * (d - 1) / math.pi / (d * d - np.minimum(r2, d)) ** 2, 0.0)
    return float(out) if out.ndim == 0 else out


def okm_mass(d: int) -> float:
    """Total mass of the density by adaptive radial quadrature."""
    _check_d(d)
    val, _ = scipy.integrate.quad(lambda r: 2 * math.pi * r * okm_density(r, d), 0.0, math.sqrt(d),
                                  epsabs=1e-13, epsrel=1e-13)
    return val


def okm_alpha(d: int) -> float:
    return (d - 1) * math.log(math.sqrt(1 - 1 / d)) + (d - 0.5) * math.log(d)


def okm_logpotential(z, d: int):
    """``U_d(z)``: ``log|z|`` outside the disk of radius sqrt d, else
    ``-(d-1) log sqrt(d^2 - |z|^2) + alpha_d``."""
    _check_d(d)
    r = np.abs(np.asarray(z, dtype=complex))
    inside = r <= math.sqrt(d)
    with np.errstate(divide="ignore"):
        outer = np.log(np.where(inside, 1.0, r))
    inner = -(d - 1) * 0.5 * np.log(d * d - np.where(inside, r * r, 0.0)) + okm_alpha(d)
    out = np.where(inside, inner, outer)
    return float(out) if out.ndim == 0 else out


@dataclass
class OkmField:
    """Fluctuation field ``psi`` on an ``m x m`` grid; flagged points hold NaN."""

    d: int
    n: int
    points: np.ndarray
    psi: np.ndarray
    flag: np.ndarray
    method: str = "lu"


def square_grid(half_width: float, m: int) -> np.ndarray:
    if m <= 0:
        return np.zeros((0, 0), dtype=complex)
    x = np.linspace(-half_width, half_width, m)
    return x[None, :] + 1j * x[:, None]


def fluctuation_field(A: PermSum, window: float, resolution: int, method: str = "auto",
                      limit: int = DENSE_LIMIT) -> OkmField:
    """``psi(z) = log|det(zI - A)| - n U_d(z)`` on ``[-w, w]^2``.

    ``method='lu'`` factors ``zI - A`` at every point; ``'eig'`` computes
    the spectrum once and sums ``log|z - lambda_i|``; ``'auto'`` uses LU
    for grids of at most 400 points. Points within 1e-6 of an eigenvalue
    (or with a vanishing LU pivot) are flagged and set to NaN.
    """
    if A.n > limit:
        raise ResourceLimit(f"n={A.n} exceeds dense limit {limit}")
    if method not in ("auto", "lu", "eig"):
        raise InvalidArgument(f"method must be auto, lu or eig, got {method!r}")
    pts = square_grid(window, resolution)
    if pts.size == 0:
        return OkmField(A.d, A.n, pts, np.zeros(pts.shape), np.zeros(pts.shape, dtype=bool), method)
    if method == "auto":
        method = "lu" if pts.size <= 400 else "eig"
    flat = pts.reshape(-1)
    logdet = np.empty(flat.size)
    flag = np.zeros(flat.size, dtype=bool)
    if method == "eig":
        lam = full_spectrum_small(A, limit=limit).eigenvalues
        for s in range(0, flat.size, 256):
            dist = np.abs(flat[s:s + 256, None] - lam[None, :])
            flag[s:s + 256] = dist.min(axis=1) < FLAG_DISTANCE
            with np.errstate(divide="ignore"):
                logdet[s:s + 256] = np.log(dist).sum(axis=1)
    else:
        M = materialize_dense(A, limit).astype(complex)
        eye = np.eye(A.n)
        for i, z in enumerate(flat):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, _ = scipy.linalg.lu_factor(z * eye - M, check_finite=False)
            piv = np.abs(np.diag(lu))
            if piv.min() < FLAG_DISTANCE:
                flag[i] = True
                logdet[i] = -math.inf
            else:
                logdet[i] = float(np.log(piv).sum())
    psi = logdet - A.n * okm_logpotential(flat, A.d)
    psi[flag] = np.nan
    return OkmField(A.d, A.n, pts, psi.reshape(pts.shape), flag.reshape(pts.shape), method)


def log_abs_det_shift(A: PermSum, z: complex) -> float:
    """``log|det(zI - A)|`` by LU."""
    M = -materialize_dense(A).astype(complex)
    M[np.diag_indices_from(M)] += z
    return log_det_lu(M)[0]


def ipr(v) -> float:
    """Inverse participation ratio ``||v||_2^4 / (n ||v||_4^4)``."""
    a = np.abs(np.asarray(v, dtype=complex).ravel())
    if a.size == 0 or not np.any(a):
        raise InvalidArgument("IPR of a zero vector is undefined")
    a = a / a.max()
    s2 = float(np.sum(a * a))
    s4 = float(np.sum(a**4))
    return s2 * s2 / (a.size * s4)


# ----------------------------------------------------------------------------
# spectral gap experiments


@dataclass
class GapReport:
    n: int
    d: int
    eps: float
    regime: str
    threshold: float
    trials: int
    lambda2: list = field(default_factory=list)
    exceeded: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    frequency: float = 0.0
    interval: Interval = Interval(0.0, 1.0)


def growing_degree(n: int) -> int:
    """Desk-scale growth rule ``d = floor(n^(1/4))``."""
    d = int(math.floor(n**0.25))
    while (d + 1) ** 4 <= n:
        d += 1
    while d**4 > n:
        d -= 1
    return max(d, 1)


def _gap_trial(stream: RngStream, n: int, d: int, method: str, tol: float, max_iter: int):
    gen = stream.generator
    A = sample_perm_sum(n, d, gen)
    if method == "dense":
        return second_modulus_dense(A), True
    est = second_eigenvalue_modulus(A, tol=tol, max_iter=max_iter, rng=gen)
    return est.lambda2_modulus, est.converged


def spectral_gap_experiment(n: int, d: Optional[int], eps: float, trials: int, seed: int,
                            growing: bool = False, method: str = "iterative", tol: float = 1e-6,
                            max_iter: int = 3000, threads: int = 1) -> GapReport:
    """Frequency of ``|lambda_2| > sqrt(d) + eps`` (fixed d) or ``> sqrt(d)(1 + eps)``
    (growing d, with ``d = floor(n^(1/4))`` when d is None), with a 95% Wilson interval."""
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    if method not in ("iterative", "dense"):
        raise InvalidArgument(f"method must be iterative or dense, got {method!r}")
    if growing and d is None:
        d = growing_degree(n)
    if d is None or d < 1:
        raise InvalidArgument("d must be >= 1")
    threshold = math.sqrt(d) * (1 + eps) if growing else math.sqrt(d) + eps
    fn = functools.partial(_gap_trial, n=n, d=d, method=method, tol=tol, max_iter=max_iter)
    results = run_trials(fn, trials, seed, threads)
    rep = GapReport(n, d, eps, "growing_d" if growing else "fixed_d", threshold, trials)
    rep.lambda2 = [r[0] for r in results]
    rep.converged = [r[1] for r in results]
    rep.exceeded = [x > threshold for x in rep.lambda2]
    k = sum(rep.exceeded)
    rep.frequency = k / trials
    rep.interval = wilson_interval(k, trials)
    return rep

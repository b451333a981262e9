"""The matrix A = P_1 + ... + P_d kept implicitly as d permutations.

Entry ``(i, j)`` of A counts the permutations sending ``i`` to ``j``; the
matrix is materialized only on request.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidArgument, ResourceLimit
from .rng import RngLike, as_generator
from .sampling import Permutation, sample_ewens_permutation, sample_uniform_permutation

DEFAULT_BUDGET = 10**9
DENSE_LIMIT = 4000


@dataclass(frozen=True, eq=False)
class PermSum:
    perms: tuple
    images: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        perms = tuple(self.perms)
        if not perms:
            raise InvalidArgument("need at least one permutation")
        n = perms[0].n
        if any(p.n != n for p in perms):
            raise InvalidArgument("permutations must share the same size")
        images = np.stack([p.image for p in perms])
        images.setflags(write=False)
        object.__setattr__(self, "perms", perms)
        object.__setattr__(self, "images", images)

    @property
    def n(self) -> int:
        return int(self.images.shape[1])

    @property
    def d(self) -> int:
        return int(self.images.shape[0])

    @classmethod
    def from_images(cls, images) -> "PermSum":
        return cls(tuple(Permutation(row) for row in np.atleast_2d(images)))

    def _inverse_rows(self) -> np.ndarray:
        # inv[i, q] = pi_q^{-1}(i), row-major so the trace kernel reads contiguously
        cached = self.__dict__.get("_inv")
        if cached is None:
            inv = np.empty((self.n, self.d), dtype=np.int64)
            for q in range(self.d):
                inv[self.images[q], q] = np.arange(self.n)
            object.__setattr__(self, "_inv", inv)
            cached = inv
        return cached


@dataclass(frozen=True)
class TraceVector:
    """Exact ``tr(A^1) .. tr(A^k_max)`` as Python integers."""

    values: tuple

    @property
    def k_max(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> int:
        if not 1 <= k <= len(self.values):
            raise InvalidArgument(f"trace of power {k} not available (k_max={self.k_max})")
        return self.values[k - 1]


@dataclass(frozen=True)
class CycleCounts:
    """``Q[l-1]`` counts oriented simple l-cycles whose edges all have entry 1."""

    Q: tuple

    @property
    def ell_max(self) -> int:
        return len(self.Q)

    def __getitem__(self, ell: int) -> int:
        return self.Q[ell - 1]


@dataclass(frozen=True)
class TraceDecomposition:
    k: int
    trace: int
    T_k: int
    residual: int


def sample_perm_sum(n: int, d: int, rng: RngLike, theta: Optional[float] = None) -> PermSum:
    """Sum of ``d`` independent permutations, uniform or Ewens(theta)."""
    if d < 1:
        raise InvalidArgument(f"d must be >= 1, got {d}")
    gen = as_generator(rng)
    if theta is None:
        perms = [sample_uniform_permutation(n, gen) for _ in range(d)]
    else:
        perms = [sample_ewens_permutation(n, theta, gen) for _ in range(d)]
    return PermSum(tuple(perms))


def _check_index(A: PermSum, i: int, name: str) -> None:
    if not 0 <= i < A.n:
        raise InvalidArgument(f"{name}={i} out of range for n={A.n}")


def entry(A: PermSum, i: int, j: int) -> int:
    _check_index(A, i, "i")
    _check_index(A, j, "j")
    return int(np.count_nonzero(A.images[:, i] == j))


def apply(A: PermSum, v: np.ndarray) -> np.ndarray:
    """``A @ v`` for a vector or an ``(n, p)`` block, summing over q in order."""
    v = np.asarray(v)
    if v.shape[0] != A.n or v.ndim > 2:
        raise InvalidArgument(f"expected leading dimension {A.n}, got shape {v.shape}")
    out = v[A.images[0]].copy()
    for q in range(1, A.d):
        out += v[A.images[q]]
    return out


def is_simple(A: PermSum) -> bool:
    """True when every entry of A is 0 or 1."""
    if A.d == 1:
        return True
    s = np.sort(A.images, axis=0)
    return bool(np.all(s[1:] != s[:-1]))


def materialize_dense(A: PermSum, limit: int = DENSE_LIMIT) -> np.ndarray:
    if A.n > limit:
        raise ResourceLimit(f"n={A.n} exceeds dense limit {limit}")
    M = np.zeros((A.n, A.n), dtype=np.int64)
    rows = np.arange(A.n)
    for q in range(A.d):
        M[rows, A.images[q]] += 1
    return M


def _check_budget(work: int, budget: int, what: str) -> None:
    if work > budget:
        raise ResourceLimit(f"{what} needs ~{work:.3g} steps, over the work budget {budget:.3g}")


def trace_vector(A: PermSum, k_max: int, budget: int = DEFAULT_BUDGET) -> TraceVector:
    """Exact ``tr(A^k)`` for ``k <= k_max`` by enumerating words over ``[d]``.

    All powers come out of one depth-first pass, at a cost of about
    ``d^k_max * n`` steps.
    """
    if k_max < 1:
        raise InvalidArgument(f"k must be >= 1, got {k_max}")
    _check_budget(A.d**k_max * A.n * k_max, budget, f"trace of A^{k_max}")
    out = _kernels.trace_counts(A.images, A._inverse_rows(), k_max)
    return TraceVector(tuple(int(x) for x in out))


def trace_power(A: PermSum, k: int, budget: int = DEFAULT_BUDGET) -> int:
    return trace_vector(A, k, budget)[k]


def exact_power_sums(A: PermSum, K: int, limit: int = DENSE_LIMIT) -> TraceVector:
    """Exact ``tr(A^k)`` for ``k <= K`` by repeated dense products.

    Works for large K where word enumeration is hopeless. Entries are
    kept in int64 while they provably fit and in Python integers after.
    """
    if K < 1:
        raise InvalidArgument(f"K must be >= 1, got {K}")
    if A.n > limit:
        raise ResourceLimit(f"n={A.n} exceeds dense limit {limit}")
    n, d = A.n, A.d
    M = np.eye(n, dtype=np.int64)
    diag = np.arange(n)
    traces = []
    for k in range(1, K + 1):
        if M.dtype != object and d**k >= 2**62:
            M = M.astype(object)
        nxt = M[A.images[0]]
        for q in range(1, d):
            nxt = nxt + M[A.images[q]]
        M = nxt
        traces.append(int(sum(M[diag, diag].tolist())))
    return TraceVector(tuple(traces))


def cycle_counts(A: PermSum, ell_max: int, budget: int = DEFAULT_BUDGET) -> CycleCounts:
    """``Q_l`` for ``l <= ell_max``: oriented simple cycles with all entries 1.

    An edge ``i -> j`` carrying multiplicity 2 or more never belongs to a
    counted cycle. Each cycle is found once, starting from its smallest
    vertex.
    """
    if ell_max < 1:
        raise InvalidArgument(f"ell must be >= 1, got {ell_max}")
    _check_budget(A.n * A.d**ell_max, budget, f"cycle count up to length {ell_max}")
    nbr, deg = _kernels.simple_out_neighbours(A.images)
    out = _kernels.cycle_counts(nbr, deg, ell_max)
    return CycleCounts(tuple(int(x) for x in out))


def cycle_count(A: PermSum, ell: int, budget: int = DEFAULT_BUDGET) -> int:
    return cycle_counts(A, ell, budget)[ell]


def divisors(k: int) -> list[int]:
    return [l for l in range(1, k + 1) if k % l == 0]


def cycle_weighted_sum(Q: Sequence[int], k: int) -> int:
    """``T_k = sum over l | k of l * Q_l``; ``Q[l-1]`` must exist for all l | k."""
    return sum(l * Q[l - 1] for l in divisors(k))


def trace_decomposition(A: PermSum, k: int, budget: int = DEFAULT_BUDGET) -> TraceDecomposition:
    tr = trace_power(A, k, budget)
    Q = cycle_counts(A, k, budget).Q
    T = cycle_weighted_sum(Q, k)
    return TraceDecomposition(k=k, trace=tr, T_k=T, residual=tr - T)

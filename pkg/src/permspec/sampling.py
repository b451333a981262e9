"""Random permutations (uniform and Ewens) and their cycle structure.

Permutations are stored 0-based as image arrays, ``image[i] = pi(i)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidArgument
from .rng import RngLike, as_generator


@dataclass(frozen=True, eq=False)
class Permutation:
    image: np.ndarray

    def __post_init__(self):
        img = np.ascontiguousarray(self.image, dtype=np.int64)
        if img.ndim != 1 or img.size == 0:
            raise InvalidArgument("permutation image must be a non-empty 1-d array")
        check = np.zeros(img.size, dtype=bool)
        if img.min() < 0 or img.max() >= img.size:
            raise InvalidArgument("permutation image out of range")
        check[img] = True
        if not check.all():
            raise InvalidArgument("permutation image is not a bijection")
        img.setflags(write=False)
        object.__setattr__(self, "image", img)

    @property
    def n(self) -> int:
        return int(self.image.size)

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.image, other.image)

    def __hash__(self):
        return hash(self.image.tobytes())

    def __call__(self, i):
        return self.image[i]

    def __repr__(self):
        return f"Permutation({self.image.tolist()})" if self.n <= 16 else f"Permutation(n={self.n})"


@dataclass(frozen=True)
class CycleType:
    """``counts[k-1]`` is the number of k-cycles, k = 1..n."""

    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(np.dot(np.arange(1, self.counts.size + 1), self.counts))

    def __getitem__(self, k: int) -> int:
        return int(self.counts[k - 1]) if 1 <= k <= self.counts.size else 0

    @property
    def cycles(self) -> int:
        return int(self.counts.sum())


def identity(n: int) -> Permutation:
    return Permutation(np.arange(n))


def n_cycle(n: int) -> Permutation:
    """The cycle 0 -> 1 -> ... -> n-1 -> 0."""
    return Permutation(np.roll(np.arange(n), -1))


def sample_uniform_permutation(n: int, rng: RngLike) -> Permutation:
    """Uniform element of S_n.

    NumPy's ``Generator.permutation`` runs a Fisher-Yates shuffle with
    ``n - 1`` bounded draws, each obtained by masked rejection.
    """
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    return Permutation(as_generator(rng).permutation(n))


def sample_ewens_permutation(n: int, theta: float, rng: RngLike) -> Permutation:
    """Ewens(theta) permutation via the Chinese-restaurant process.

    Element ``i`` (0-based) opens a new cycle with probability
    ``theta / (theta + i)``, else it is placed after a uniform earlier
    element. The resulting law is ``theta^cyc / (theta)_n rising``.
    """
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    if not theta > 0:
        raise InvalidArgument(f"theta must be > 0, got {theta}")
    gen = as_generator(rng)
    i = np.arange(n)
    u = gen.random(n)
    new_table = u * (theta + i) < theta
    anchor = np.zeros(n, dtype=np.int64)
    if n > 1:
        anchor[1:] = gen.integers(0, i[1:])
    return Permutation(_kernels.crp_insert(new_table, anchor))


def cycle_type(p: Permutation) -> CycleType:
    return CycleType(_kernels.cycle_lengths(p.image)[1:])


def compose(p: Permutation, q: Permutation) -> Permutation:
    """``p o q``: apply ``q`` first."""
    if p.n != q.n:
        raise InvalidArgument(f"size mismatch: {p.n} vs {q.n}")
    return Permutation(p.image[q.image])


def inverse(p: Permutation) -> Permutation:
    inv = np.empty_like(p.image)
    inv[p.image] = np.arange(p.n)
    return Permutation(inv)


def count_fixed_points(p: Permutation) -> int:
    return int(np.count_nonzero(p.image == np.arange(p.n)))

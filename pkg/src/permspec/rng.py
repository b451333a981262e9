"""Reproducible random streams and the per-trial runner.

Every Monte Carlo trial gets its own stream keyed by ``(seed, trial_index)``.
Streams are built with NumPy's ``SeedSequence`` spawn keys feeding a
``PCG64`` bit generator, so results never depend on how trials are
distributed over workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar, Union

import numpy as np

ALGORITHM = "PCG64 seeded by SeedSequence(entropy=seed, spawn_key=(stream_id,))"
ALGORITHM_VERSION = f"numpy-{np.__version__}"

_MASK64 = (1 << 64) - 1

T = TypeVar("T")


class RngStream:
    """A stateful random stream identified by ``(seed, stream_id)``.

    Two streams built from the same pair produce bit-identical sequences.
    """

    __slots__ = ("seed", "stream_id", "generator")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


RngLike = Union[RngStream, np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return RngStream(0).generator
    return RngStream(int(rng)).generator


def default_seed() -> int:
    return int(os.environ.get("PERMSPEC_SEED", "0"))


def run_trials(
    fn: Callable[[RngStream], T],
    trials: int,
    seed: int,
    threads: int = 1,
    offset: int = 0,
) -> list[T]:
    """Evaluate ``fn(RngStream(seed, offset + t))`` for ``t < trials``.

    Results come back ordered by trial index whatever ``threads`` is.
    ``fn`` must be picklable when ``threads > 1``.
    """
    ids: Sequence[int] = range(offset, offset + trials)
    if threads <= 1 or trials <= 1:
        return [fn(RngStream(seed, t)) for t in ids]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunk = max(1, trials // (4 * threads))
        return list(pool.map(_call, [fn] * trials, [seed] * trials, ids, chunksize=chunk))


def _call(fn, seed, t):
    return fn(RngStream(seed, t))

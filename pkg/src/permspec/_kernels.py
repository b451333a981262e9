"""Compiled inner loops (numba). Array-in, array-out; no randomness here."""

import numpy as np
from numba import njit


@njit(cache=True)
def cycle_lengths(image):
    n = image.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    counts = np.zeros(n + 1, dtype=np.int64)
    for s in range(n):
        if seen[s]:
            continue
        length = 0
        i = s
        while not seen[i]:
            seen[i] = True
            i = image[i]
            length += 1
        counts[length] += 1
    return counts


@njit(cache=True)
def crp_insert(new_table, anchor):
    """Chinese-restaurant construction of a permutation.

    Element ``i`` opens a new cycle when ``new_table[i]``; otherwise it is
    inserted right after ``anchor[i] < i`` in that element's cycle.
    """
    n = new_table.shape[0]
    image = np.empty(n, dtype=np.int64)
    for i in range(n):
        if new_table[i]:
            image[i] = i
        else:
            j = anchor[i]
            image[i] = image[j]
            image[j] = i
    return image


@njit(cache=True)
def trace_counts(images, inv_rows, kmax):
    """``out[m-1] = tr(A^m)`` for ``m <= kmax``.

    Words ``q_1..q_m`` over ``[d]`` are enumerated depth first while the
    running composite ``pi_{q_m} o ... o pi_{q_1}`` is kept per depth.
    Level ``m + 1`` is tallied from a depth-``m`` composite ``c`` as
    ``sum_i #{q : pi_q^{-1}(i) = c(i)}`` using the row-major inverse table.
    """
    d, n = images.shape
    out = np.zeros(kmax, dtype=np.int64)
    s = 0
    for i in range(n):
        for r in range(d):
            if inv_rows[i, r] == i:
                s += 1
    out[0] = s
    if kmax == 1:
        return out
    comp = np.empty((kmax - 1, n), dtype=np.int64)
    letters = np.zeros(kmax - 1, dtype=np.int64)
    m = 1
    while m > 0:
        q = letters[m - 1]
        if q == d:
            m -= 1
            if m > 0:
                letters[m - 1] += 1
            continue
        if m == 1:
            for i in range(n):
                comp[0, i] = images[q, i]
        else:
            for i in range(n):
                comp[m - 1, i] = images[q, comp[m - 2, i]]
        s = 0
        for i in range(n):
            ci = comp[m - 1, i]
            for r in range(d):
                if inv_rows[i, r] == ci:
                    s += 1
        out[m] += s
        if m < kmax - 1:
            m += 1
            letters[m - 1] = 0
        else:
            letters[m - 1] += 1
    return out


@njit(cache=True)
def simple_out_neighbours(images):
    """Per vertex, the targets ``j`` with entry exactly 1 (padded with -1)."""
    d, n = images.shape
    nbr = np.full((n, d), -1, dtype=np.int64)
    deg = np.zeros(n, dtype=np.int64)
    for u in range(n):
        for q in range(d):
            j = images[q, u]
            mult = 0
            for r in range(d):
                if images[r, u] == j:
                    mult += 1
            if mult == 1:
                nbr[u, deg[u]] = j
                deg[u] += 1
    return nbr, deg


@njit(cache=True)
def cycle_counts(nbr, deg, lmax):
    """``out[l-1] = Q_l`` for ``l <= lmax``.

    Each class of oriented simple cycles is reached once, from its smallest
    vertex, by a DFS restricted to larger labels.
    """
    n = nbr.shape[0]
    out = np.zeros(lmax + 1, dtype=np.int64)
    onpath = np.zeros(n, dtype=np.bool_)
    path = np.empty(lmax, dtype=np.int64)
    idx = np.empty(lmax, dtype=np.int64)
    for s in range(n):
        path[0] = s
        idx[0] = 0
        onpath[s] = True
        depth = 1
        while depth > 0:
            u = path[depth - 1]
            if idx[depth - 1] < deg[u]:
                j = nbr[u, idx[depth - 1]]
                idx[depth - 1] += 1
                if j == s:
                    out[depth] += 1
                elif j > s and depth < lmax and not onpath[j]:
                    path[depth] = j
                    idx[depth] = 0
                    onpath[j] = True
                    depth += 1
            else:
                onpath[u] = False
                depth -= 1
    return out[1:]

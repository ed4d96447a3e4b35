"""numba kernels for exhaustive enumeration of binary leaf-labeled trees.

A binary tree on leaves 0..n-1 is encoded by its insertion choices: start
from the cherry (0, 1) under internal node n, then for k = 2..n-1 insert
leaf k above one of the 2k-1 existing nodes.  ``choice[k]`` < k means leaf
``choice[k]``; otherwise internal node ``n + choice[k] - k``.  Every tree is
produced exactly once, (2n-3)!! trees in total.
"""
from __future__ import annotations

import numba as nb
import numpy as np


def subset_totals(w: np.ndarray) -> np.ndarray:
    """``tot[mask]`` = total pair weight inside the leaf set ``mask``."""
    n = w.shape[0]
    tot = np.zeros(1 << n)
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        add = 0.0
        m = rest
        while m:
            j = (m & -m).bit_length() - 1
            add += w[low, j]
            m &= m - 1
        tot[mask] = tot[rest] + add
    return tot


@nb.njit(cache=True)
def _popcount_table(size):
    pc = np.zeros(size, dtype=np.int64)
    for m in range(1, size):
        pc[m] = pc[m >> 1] + (m & 1)
    return pc


@nb.njit(cache=True)
def enumerate_best(n, tot_s, tot_d, coef_s, coef_d, tol):
    """Scan all binary trees; return (best value, best choices, tree count).

    Node value at an internal node v with child leaf sets A, B and
    s = |A| + |B| is ``coef_s * cross_s(A, B) * (n - s) + coef_d * cross_d(A, B) * s``.
    The first tree (in enumeration order) beating the incumbent by more than
    ``tol`` wins, so ties resolve to the earliest tree.
    """
    m = 2 * n - 1
    parent = -np.ones(m, dtype=np.int64)
    left = -np.ones(m, dtype=np.int64)
    right = -np.ones(m, dtype=np.int64)
    mask = np.zeros(m, dtype=np.int64)
    pc = _popcount_table(1 << n)
    choice = np.zeros(n, dtype=np.int64)
    best_choice = np.zeros(n, dtype=np.int64)
    for i in range(n):
        mask[i] = 1 << i
    # cherry (0, 1) under node n
    root = n
    left[n] = 0
    right[n] = 1
    parent[0] = n
    parent[1] = n
    mask[n] = 3
    best = -np.inf
    count = 0
    if n == 2:
        a = mask[0]
        b = mask[1]
        ab = a | b
        s = pc[ab]
        v = coef_s * (tot_s[ab] - tot_s[a] - tot_s[b]) * (n - s) \
            + coef_d * (tot_d[ab] - tot_d[a] - tot_d[b]) * s
        return v, best_choice, 1
    k = 2
    choice[2] = -1
    roots = np.zeros(n + 1, dtype=np.int64)
    roots[2] = root
    while k >= 2:
        # undo the previous insertion at level k, if any
        if choice[k] >= 0:
            y = n + k - 1
            x = left[y]
            p = parent[y]
            parent[x] = p
            if p >= 0:
                if left[p] == y:
                    left[p] = x
                else:
                    right[p] = x
            bit = 1 << k
            q = p
            while q >= 0:
                mask[q] &= ~bit
                q = parent[q]
            parent[y] = -1
            left[y] = -1
            right[y] = -1
            parent[k] = -1
            root = roots[k]
        choice[k] += 1
        if choice[k] >= 2 * k - 1:
            choice[k] = -1
            k -= 1
            continue
        c = choice[k]
        x = c if c < k else n + c - k
        y = n + k - 1
        p = parent[x]
        parent[y] = p
        if p >= 0:
            if left[p] == x:
                left[p] = y
            else:
                right[p] = y
        else:
            root = y
        left[y] = x
        right[y] = k
        parent[x] = y
        parent[k] = y
        bit = 1 << k
        mask[y] = mask[x] | bit
        q = p
        while q >= 0:
            mask[q] |= bit
            q = parent[q]
        if k == n - 1:
            count += 1
            total = 0.0
            for v in range(n, 2 * n - 1):
                a = mask[left[v]]
                b = mask[right[v]]
                ab = mask[v]
                s = pc[ab]
                total += coef_s * (tot_s[ab] - tot_s[a] - tot_s[b]) * (n - s) \
                    + coef_d * (tot_d[ab] - tot_d[a] - tot_d[b]) * s
            if total > best + tol:
                best = total
                best_choice[:] = choice
        else:
            roots[k + 1] = root
            k += 1
            choice[k] = -1
    return best, best_choice, count


@nb.njit(cache=True)
def subset_dp(n, tot_s, tot_d, coef_s, coef_d):
    """Optimal value over all binary trees by dynamic programming on leaf sets.

    ``best[S] = max over splits (A, S\\A) of best[A] + best[S\\A] + value of
    the split``; O(3^n).  Returns the value table and the chosen split per set.
    """
    size = 1 << n
    pc = _popcount_table(size)
    best = np.zeros(size)
    split = np.zeros(size, dtype=np.int64)
    for S in range(1, size):
        if pc[S] < 2:
            continue
        low = S & -S
        s = pc[S]
        top = -np.inf
        arg = 0
        # A ranges over subsets containing the lowest bit, excluding S itself
        rest = S ^ low
        sub = rest
        while True:
            A = sub | low
            if A != S:
                B = S ^ A
                val = best[A] + best[B] \
                    + coef_s * (tot_s[S] - tot_s[A] - tot_s[B]) * (n - s) \
                    + coef_d * (tot_d[S] - tot_d[A] - tot_d[B]) * s
                if val > top:
                    top = val
                    arg = A
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best[S] = top
        split[S] = arg
    return best, split

"""Slow, obviously-correct reference computations used only by the tests.

Trees here are nested tuples of ints; nothing in this file touches the
package's tree arena, LCA tables or kernels.
"""
from __future__ import annotations

import itertools

import numpy as np


def leaves_of(t) -> list[int]:
    if isinstance(t, int):
        return [t]
    return [x for c in t for x in leaves_of(c)]


def all_binary_trees(labels):
    """Every binary tree on ``labels``; splits keep the smallest label on the left."""
    labels = sorted(labels)
    if len(labels) == 1:
        yield labels[0]
        return
    first, rest = labels[0], labels[1:]
    for r in range(0, len(rest)):
        for picked in itertools.combinations(rest, r):
            left = [first, *picked]
            right = [x for x in rest if x not in picked]
            for a in all_binary_trees(left):
                for b in all_binary_trees(right):
                    yield (a, b)


def pair_sizes(t, n: int) -> np.ndarray:
    """|T_ij| by walking every internal node and marking pairs it separates."""
    out = np.zeros((n, n), dtype=np.int64)

    def rec(node):
        if isinstance(node, int):
            return [node]
        parts = [rec(c) for c in node]
        total = sum(len(p) for p in parts)
        for a, b in itertools.combinations(range(len(parts)), 2):
            for i in parts[a]:
                for j in parts[b]:
                    out[i, j] = out[j, i] = total
        return [x for p in parts for x in p]

    rec(t)
    return out


def child_sizes(t, n: int) -> np.ndarray:
    """``c[i, j]`` = leaves in the LCA child holding i, for the extended dissimilarity."""
    out = np.zeros((n, n), dtype=np.int64)

    def rec(node):
        if isinstance(node, int):
            return [node]
        parts = [rec(c) for c in node]
        for a, b in itertools.permutations(range(len(parts)), 2):
            for i in parts[a]:
                for j in parts[b]:
                    out[i, j] = len(parts[a])
        return [x for p in parts for x in p]

    rec(t)
    return out


def revenue(ws: np.ndarray, t) -> float:
    n = ws.shape[0]
    s = pair_sizes(t, n)
    return sum(ws[i, j] * (n - s[i, j]) for i in range(n) for j in range(i + 1, n))


def dissimilarity(wd: np.ndarray, t) -> float:
    n = wd.shape[0]
    c = child_sizes(t, n)
    return sum(wd[i, j] * (c[i, j] + c[j, i]) for i in range(n) for j in range(i + 1, n))


def optimum(ws: np.ndarray, wd: np.ndarray, objective: str) -> float:
    n = ws.shape[0]
    best = -np.inf
    for t in all_binary_trees(range(n)):
        v = 0.0
        if objective in ("rev", "hcc"):
            v += revenue(ws, t)
        if objective in ("dis", "hcc"):
            v += dissimilarity(wd, t)
        best = max(best, v)
    return best


def assignment_stats(w: np.ndarray, labels, k: int):
    """Bucket sizes and k x k bucket weights by summing over explicit pairs."""
    n = len(labels)
    sizes = np.zeros(k)
    W = np.zeros((k, k))
    for i in range(n):
        sizes[labels[i]] += 1
        for j in range(i + 1, n):
            a, b = labels[i], labels[j]
            W[a, b] += w[i, j]
            if a != b:
                W[b, a] += w[i, j]
    return sizes, W


def feasible_by_enumeration(w, alpha, beta, eps_err, slack=1e-9) -> bool:
    n, k = w.shape[0], len(alpha)
    for labels in itertools.product(range(k), repeat=n):
        sizes, W = assignment_stats(w, labels, k)
        if (np.all(np.abs(sizes - alpha) <= eps_err * n + slack)
                and np.all(np.abs(W - beta) <= eps_err * n * n + slack)):
            return True
    return False


def double_factorial(m: int) -> int:
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out

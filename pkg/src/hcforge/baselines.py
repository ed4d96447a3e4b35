"""Reference algorithms and ground-truth oracles.

average linkage, random trees, exhaustive enumeration of binary
leaf-labeled trees and the exact optimum for small n.
"""
from __future__ import annotations

import logging
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .core import HcError, HcTree, Instance, NodeKind, evaluate
from .treeio import canonical

log = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 10

_COEFS = {"rev": (1.0, 0.0), "dis": (0.0, 1.0), "hcc": (1.0, 1.0)}


class GuardError(HcError):
    """Raised when an exhaustive oracle is asked for an instance beyond its guard."""


# ---------------------------------------------------------------------------
# Average linkage
# ---------------------------------------------------------------------------

def average_linkage(inst: Instance, channel: str = "sim") -> HcTree:
    """Agglomerative average-linkage tree.

    On the ``sim`` channel the two clusters with the largest average
    inter-cluster similarity merge; on ``dis`` the two with the smallest
    average dissimilarity merge.  Cluster ids are singletons 0..n-1 then
    n, n+1, ... in creation order; ties go to the lexicographically smallest
    pair of ids.
    """
    w = inst.channel(channel)
    n = inst.n
    if n == 1:
        return HcTree.from_nested(0)
    sign = 1.0 if channel == "sim" else -1.0
    sums = w.astype(np.float64).copy()
    sizes = np.ones(n)
    ids = list(range(n))
    nested: list = list(range(n))
    next_id = n
    while len(ids) > 1:
        m = len(ids)
        avg = sign * sums / np.outer(sizes, sizes)
        iu = np.triu_indices(m, 1)
        vals = avg[iu]
        top = vals.max()
        scale = max(1.0, abs(top))
        k = int(np.flatnonzero(vals >= top - 1e-12 * scale)[0])
        a, b = int(iu[0][k]), int(iu[1][k])
        merged_row = sums[a] + sums[b]
        keep = [t for t in range(m) if t not in (a, b)]
        new_sums = np.zeros((m - 1, m - 1))
        new_sums[:m - 2, :m - 2] = sums[np.ix_(keep, keep)]
        new_sums[m - 2, :m - 2] = merged_row[keep]
        new_sums[:m - 2, m - 2] = merged_row[keep]
        sums = new_sums
        sizes = np.append(sizes[keep], sizes[a] + sizes[b])
        merged = (nested[a], nested[b])
        nested = [nested[t] for t in keep] + [merged]
        ids = [ids[t] for t in keep] + [next_id]
        next_id += 1
    return HcTree.from_nested(nested[0])


# ---------------------------------------------------------------------------
# Random trees
# ---------------------------------------------------------------------------

def tree_from_insertions(n: int, choice: Sequence[int]) -> HcTree:
    """Decode the insertion encoding used by the enumeration kernel."""
    if n == 1:
        return HcTree.from_nested(0)
    tree = HcTree()
    for i in range(n):
        tree.add_node(NodeKind.LEAF, label=i)
    for _ in range(n - 1):
        tree.add_node(NodeKind.INTERNAL)
    tree.children[n] = [0, 1]
    tree.parent[0] = tree.parent[1] = n
    tree.root = n
    for k in range(2, n):
        c = int(choice[k])
        if not 0 <= c < 2 * k - 1:
            raise ValueError(f"insertion choice {c} out of range at step {k}")
        x = c if c < k else n + c - k
        y = n + k - 1
        p = tree.parent[x]
        tree.parent[y] = p
        if p >= 0:
            kids = tree.children[p]
            kids[kids.index(x)] = y
        else:
            tree.root = y
        tree.children[y] = [x, k]
        tree.parent[x] = y
        tree.parent[k] = y
    return tree


def random_binary_tree(n: int, rng: np.random.Generator) -> HcTree:
    """Uniform over the (2n-3)!! binary leaf-labeled trees.

    Leaf k is inserted above a uniformly chosen node among the 2k-1
    present, which is the same as picking one of the 2k-2 edges or the
    spot above the root.
    """
    if n < 1:
        raise ValueError("n must be positive")
    choice = [0, 0] + [int(rng.integers(0, 2 * k - 1)) for k in range(2, n)]
    return tree_from_insertions(n, choice)


def random_multiway_tree(n: int, rng: np.random.Generator, p_merge: float = 0.35) -> HcTree:
    """Random binary tree with a random subset of internal edges contracted."""
    tree = random_binary_tree(n, rng)
    nested = _contract(tree, tree.root, rng, p_merge)
    return HcTree.from_nested(nested)


def _contract(tree: HcTree, v: int, rng, p_merge):
    if tree.kind[v] is NodeKind.LEAF:
        return tree.label[v]
    out = []
    for c in tree.children[v]:
        sub = _contract(tree, c, rng, p_merge)
        if isinstance(sub, tuple) and rng.random() < p_merge:
            out.extend(sub)
        else:
            out.append(sub)
    return tuple(out)


# ---------------------------------------------------------------------------
# Exhaustive enumeration and exact optima
# ---------------------------------------------------------------------------

def double_factorial_count(n: int) -> int:
    """Number of binary leaf-labeled rooted trees on n leaves, (2n-3)!!."""
    out = 1
    for k in range(3, 2 * n - 2, 2):
        out *= k
    return out


def enumerate_binary_trees(n: int) -> Iterator[HcTree]:
    """Yield every binary leaf-labeled tree on leaves 0..n-1 exactly once."""
    if n < 1:
        raise ValueError("n must be positive")
    if n <= 2:
        yield HcTree.from_nested(0 if n == 1 else (0, 1))
        return
    radices = [2 * k - 1 for k in range(2, n)]
    choice = [0] * len(radices)
    while True:
        yield tree_from_insertions(n, [0, 0] + choice)
        pos = len(choice) - 1
        while pos >= 0:
            choice[pos] += 1
            if choice[pos] < radices[pos]:
                break
            choice[pos] = 0
            pos -= 1
        if pos < 0:
            return


def _check_guard(n: int, max_n: int | None, force: bool) -> None:
    limit = BRUTE_FORCE_MAX_N if max_n is None else max_n
    if max_n is not None and max_n > BRUTE_FORCE_MAX_N and not force:
        raise GuardError(f"raising the brute-force guard above n={BRUTE_FORCE_MAX_N} "
                         "requires an explicit confirmation")
    if n > limit:
        raise GuardError(f"brute force refuses n={n} > {limit} "
                         f"({double_factorial_count(n)} trees)")


def brute_force_optimal(inst: Instance, objective: str, *, max_n: int | None = None,
                        force: bool = False) -> tuple[HcTree, float]:
    """Exhaustively scan all binary trees and return (argmax tree, value).

    Ties resolve to the first optimal tree in enumeration order.  The
    returned value is re-evaluated on the returned tree with the regular
    objective functions.
    """
    if objective not in _COEFS:
        raise ValueError(f"objective must be one of {sorted(_COEFS)}")
    n = inst.n
    _check_guard(n, max_n, force)
    if n == 1:
        return HcTree.from_nested(0), 0.0
    cs, cd = _COEFS[objective]
    tot_s = _kernels.subset_totals(inst.sim)
    tot_d = _kernels.subset_totals(inst.dis)
    scale = max(1.0, float(n) * (inst.total("sim") + inst.total("dis")))
    _, choice, count = _kernels.enumerate_best(n, tot_s, tot_d, cs, cd, 1e-9 * scale)
    log.debug("brute force scanned %d trees at n=%d", count, n)
    tree = tree_from_insertions(n, choice)
    return tree, evaluate(inst, tree, objective)


def optimal_value_dp(inst: Instance, objective: str) -> tuple[HcTree, float]:
    """Exact optimum by dynamic programming over leaf subsets, O(3^n).

    Independent of the enumeration oracle; used to cross-check it and for
    sizes where enumeration is out of reach (n up to about 16).
    """
    if objective not in _COEFS:
        raise ValueError(f"objective must be one of {sorted(_COEFS)}")
    n = inst.n
    if n > 18:
        raise GuardError(f"subset DP refuses n={n} > 18")
    if n == 1:
        return HcTree.from_nested(0), 0.0
    cs, cd = _COEFS[objective]
    tot_s = _kernels.subset_totals(inst.sim)
    tot_d = _kernels.subset_totals(inst.dis)
    best, split = _kernels.subset_dp(n, tot_s, tot_d, cs, cd)

    def build(S: int):
        if S & (S - 1) == 0:
            return S.bit_length() - 1
        A = int(split[S])
        return (build(A), build(S ^ A))

    full = (1 << n) - 1
    tree = HcTree.from_nested(build(full))
    return tree, float(best[full])


def optimal_tree_key(inst: Instance, tree: HcTree, objective: str) -> tuple[float, str]:
    """Sort key used by deterministic argmax folds: value desc, then canonical text."""
    return (-evaluate(inst, tree, objective), canonical(tree))

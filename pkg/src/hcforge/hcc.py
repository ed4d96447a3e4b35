"""Worst-case HCC algorithms: greedy caterpillar, Max-Uncut Bisection seeding
and their probability-p combination."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import HcError, HcTree, Instance, caterpillar, eval_hcc, graft, relabel

#: Default mixing probability 1 - (1/3)/0.585 (about 0.4302).
DEFAULT_P = 1.0 - (1.0 / 3.0) / 0.585

EXACT_MUB_MAX_N = 20


@dataclass
class GreedyScores:
    """Per-round scores; ``sim_part + dis_part == scores``."""

    alive: np.ndarray
    sim_part: np.ndarray
    dis_part: np.ndarray

    @property
    def scores(self) -> np.ndarray:
        return self.sim_part + self.dis_part


def greedy_scores(inst: Instance, alive) -> GreedyScores:
    """Scores of the surviving vertices, computed from scratch.

    For m = |alive|: every similarity pair (i, j) takes (m-2)/2 * w from i and
    j and gives w to every other vertex; every dissimilarity pair gives
    m/2 * w to i and j and takes w from every other vertex.
    """
    alive = np.asarray(alive, dtype=np.intp)
    m = len(alive)
    ws = inst.sim[np.ix_(alive, alive)]
    wd = inst.dis[np.ix_(alive, alive)]
    deg_s = ws.sum(axis=1)
    deg_d = wd.sum(axis=1)
    tot_s = deg_s.sum() / 2.0
    tot_d = deg_d.sum() / 2.0
    sim_part = (tot_s - deg_s) - (m - 2) / 2.0 * deg_s
    dis_part = -(tot_d - deg_d) + m / 2.0 * deg_d
    return GreedyScores(alive, sim_part, dis_part)


def greedy_caterpillar(inst: Instance, trace: list | None = None) -> HcTree:
    """Repeatedly remove the max-score vertex; nest removals into a caterpillar.

    Ties go to the smallest vertex id.  When ``trace`` is a list, the
    :class:`GreedyScores` of every round is appended to it.
    """
    n = inst.n
    if n < 2:
        raise HcError("greedy caterpillar needs n >= 2")
    alive = list(range(n))
    order: list[int] = []
    while len(alive) > 2:
        sc = greedy_scores(inst, alive)
        if trace is not None:
            trace.append(sc)
        s = sc.scores
        top = s.max()
        tol = 1e-12 * max(1.0, float(np.abs(s).max()))
        pick = int(np.flatnonzero(s >= top - tol)[0])
        order.append(alive.pop(pick))
    order.extend(alive)
    return caterpillar(order)


def greedy_floor(inst: Instance) -> float:
    """(n-2)/3 * sum w^s + 2n/3 * sum w^d, the greedy guarantee."""
    n = inst.n
    return (n - 2) / 3.0 * inst.total("sim") + 2.0 * n / 3.0 * inst.total("dis")


# ---------------------------------------------------------------------------
# Max-Uncut Bisection
# ---------------------------------------------------------------------------

@dataclass
class Bisection:
    left: list[int]
    right: list[int]
    uncut_weight: float = field(default=0.0)


def uncut_weight(w: np.ndarray, left, right) -> float:
    left = np.asarray(left, dtype=np.intp)
    right = np.asarray(right, dtype=np.intp)
    return float(np.triu(w[np.ix_(left, left)], 1).sum()
                 + np.triu(w[np.ix_(right, right)], 1).sum())


def _exact_mub(w: np.ndarray) -> Bisection:
    n = w.shape[0]
    if n > EXACT_MUB_MAX_N:
        raise HcError(f"exact Max-Uncut Bisection refuses n={n} > {EXACT_MUB_MAX_N}")
    half = n // 2
    best_val, best_left = -math.inf, None
    # left side has floor(n/2) points; for even n fix vertex 0 on the left to
    # skip mirrored bisections
    pool = range(1, n) if n % 2 == 0 else range(n)
    take = half - 1 if n % 2 == 0 else half
    combos = itertools.combinations(pool, take)
    chunk = 4096
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        idx = np.array(block, dtype=np.intp).reshape(len(block), take)
        x = np.zeros((len(block), n))
        rows = np.repeat(np.arange(len(block)), take)
        x[rows, idx.ravel()] = 1.0
        if n % 2 == 0:
            x[:, 0] = 1.0
        inside = 0.5 * np.einsum("bi,ij,bj->b", x, w, x)
        y = 1.0 - x
        outside = 0.5 * np.einsum("bi,ij,bj->b", y, w, y)
        val = inside + outside
        k = int(np.argmax(val))
        if val[k] > best_val + 1e-12:
            best_val = float(val[k])
            best_left = np.flatnonzero(x[k]).tolist()
    left = best_left if best_left is not None else []
    right = [v for v in range(n) if v not in set(left)]
    return Bisection(left, right, uncut_weight(w, left, right))


def _local_search_mub(w: np.ndarray, rng: np.random.Generator, restarts: int) -> Bisection:
    n = w.shape[0]
    half = n // 2
    best: Bisection | None = None
    for _ in range(max(1, restarts)):
        perm = rng.permutation(n)
        side = np.zeros(n, dtype=bool)  # True = left
        side[perm[:half]] = True
        while True:
            # gain of swapping u (left) with v (right):
            # (w_u,L' - w_u,R) + (w_v,R' - w_v,L) changes; compute directly
            to_l = w[:, side].sum(axis=1)
            to_r = w[:, ~side].sum(axis=1)
            L = np.flatnonzero(side)
            R = np.flatnonzero(~side)
            if len(L) == 0 or len(R) == 0:
                break
            # moving u: L -> R changes uncut by to_r[u] - to_l[u]
            gu = to_r[L] - to_l[L]
            gv = to_l[R] - to_r[R]
            gain = gu[:, None] + gv[None, :] - 2.0 * w[np.ix_(L, R)]
            k = int(np.argmax(gain))
            i, j = divmod(k, len(R))
            if gain[i, j] <= 1e-12:
                break
            side[L[i]] = False
            side[R[j]] = True
        left = np.flatnonzero(side).tolist()
        right = np.flatnonzero(~side).tolist()
        cand = Bisection(left, right, uncut_weight(w, left, right))
        if best is None or cand.uncut_weight > best.uncut_weight + 1e-12:
            best = cand
    return best


def max_uncut_bisection(inst: Instance, backend: str = "exact",
                        rng: np.random.Generator | None = None,
                        restarts: int = 8) -> Bisection:
    """Balanced bipartition maximizing the similarity weight left uncut.

    ``exact`` enumerates all bisections (n <= 20); ``localSearch`` runs
    best-improvement pair swaps from ``restarts`` seeded balanced starts.
    For odd n the sides differ in size by one.
    """
    w = inst.sim
    if inst.n == 1:
        return Bisection([0], [], 0.0)
    if backend == "exact":
        return _exact_mub(w)
    if backend == "localSearch":
        return _local_search_mub(w, rng if rng is not None else np.random.default_rng(0),
                                 restarts)
    raise ValueError(f"unknown Max-Uncut Bisection backend {backend!r}")


def _side_tree(inst: Instance, side: list[int]) -> HcTree:
    if len(side) == 1:
        return HcTree.from_nested(side[0])
    sub = greedy_caterpillar(inst.restrict(side))
    return relabel(sub, side)


def mub_then_greedy(inst: Instance, backend: str = "exact",
                    rng: np.random.Generator | None = None) -> HcTree:
    """Root split by Max-Uncut Bisection, greedy caterpillar on each side."""
    if inst.n < 2:
        raise HcError("MUB-seeded greedy needs n >= 2")
    b = max_uncut_bisection(inst, backend, rng)
    return graft([_side_tree(inst, b.left), _side_tree(inst, b.right)])


def combined_hcc(inst: Instance, p: float = DEFAULT_P, mode: str = "bestOfBoth",
                 rng: np.random.Generator | None = None,
                 backend: str = "exact") -> HcTree:
    """Greedy with probability p, otherwise MUB-seeded greedy.

    ``bestOfBoth`` runs both and keeps the higher HCC value (greedy on ties);
    ``randomized`` flips one seeded coin.
    """
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = rng if rng is not None else np.random.default_rng(0)
    if mode == "randomized":
        if rng.random() < p:
            return greedy_caterpillar(inst)
        return mub_then_greedy(inst, backend, rng)
    if mode != "bestOfBoth":
        raise ValueError(f"unknown mode {mode!r}")
    t1 = greedy_caterpillar(inst)
    t2 = mub_then_greedy(inst, backend, rng)
    return t2 if eval_hcc(inst, t2).hcc > eval_hcc(inst, t1).hcc else t1

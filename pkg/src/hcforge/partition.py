"""Graph-partition oracle: find an assignment of points to k buckets whose
sizes and bucket-pair weights match targets up to additive tolerances.

Three interchangeable backends share one output contract.  ``exact``
enumerates every assignment and is sound and complete; ``localSearch`` and
``sampleExtend`` are seeded heuristics that may miss feasible targets but
never report an assignment that fails verification.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import BudgetExceeded, HcError, Instance

EXACT_BUDGET = 4 ** 14
_CHUNK = 1 << 14


class PartitionError(HcError):
    pass


@dataclass(frozen=True)
class PartitionTarget:
    """Target sizes ``alpha`` (length k) and symmetric bucket-pair weights
    ``beta``; ``beta[i, i]`` is the weight inside bucket i and ``beta[i, j]``
    the weight crossing between buckets i and j."""

    alpha: np.ndarray
    beta: np.ndarray
    eps_err: float
    delta: float = 0.1
    channel: str = "sim"

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.float64).ravel()
        b = np.asarray(self.beta, dtype=np.float64)
        k = len(a)
        if k == 0:
            raise PartitionError("target needs at least one bucket")
        if b.shape != (k, k):
            raise PartitionError(f"beta must be {k}x{k}, got {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise PartitionError("targets must be finite")
        if a.min() < 0 or b.min() < 0:
            raise PartitionError("targets must be nonnegative")
        if not np.allclose(b, b.T):
            raise PartitionError("beta must be symmetric")
        if not 0 <= self.eps_err < 1:
            raise PartitionError(f"eps_err must lie in [0, 1), got {self.eps_err}")
        if not 0 < self.delta < 1:
            raise PartitionError(f"delta must lie in (0, 1), got {self.delta}")
        if self.channel not in ("sim", "dis"):
            raise PartitionError(f"unknown channel {self.channel!r}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", 0.5 * (b + b.T))

    @property
    def k(self) -> int:
        return len(self.alpha)


class Verdict(enum.Enum):
    FOUND = "Found"
    INFEASIBLE = "Infeasible"


@dataclass
class Deviations:
    size: np.ndarray     # |actual size - alpha|, per bucket
    weight: np.ndarray   # |actual weight - beta|, k x k

    def within(self, target: PartitionTarget, n: int) -> bool:
        return within_tolerance(self, target, n)


@dataclass
class PartitionResult:
    verdict: Verdict
    assignment: np.ndarray | None = None
    deviations: Deviations | None = None
    backend: str = ""
    evaluated: int = field(default=0)

    @property
    def found(self) -> bool:
        return self.verdict is Verdict.FOUND


def bucket_weights(w: np.ndarray, assignment: np.ndarray, k: int) -> np.ndarray:
    """k x k matrix: diagonal = weight inside each bucket, off-diagonal =
    weight crossing each bucket pair."""
    onehot = np.zeros((len(assignment), k))
    onehot[np.arange(len(assignment)), assignment] = 1.0
    B = onehot.T @ w @ onehot
    B[np.diag_indices(k)] *= 0.5
    return B


def verify_partition(inst: Instance, assignment, target: PartitionTarget) -> Deviations:
    a = np.asarray(assignment)
    if a.shape != (inst.n,):
        raise PartitionError(f"assignment must give a bucket for each of the {inst.n} points")
    if a.size and (a.min() < 0 or a.max() >= target.k):
        raise PartitionError("assignment uses a bucket id outside 0..k-1")
    a = a.astype(np.intp)
    sizes = np.bincount(a, minlength=target.k).astype(np.float64)
    W = bucket_weights(inst.channel(target.channel), a, target.k)
    return Deviations(np.abs(sizes - target.alpha), np.abs(W - target.beta))


def _slack(bound: float) -> float:
    return 1e-12 * max(1.0, bound)


def within_tolerance(dev: Deviations, target: PartitionTarget, n: int) -> bool:
    sb = target.eps_err * n
    wb = target.eps_err * n * n
    return bool(np.all(dev.size <= sb + _slack(sb)) and np.all(dev.weight <= wb + _slack(wb)))


def penalty(sizes: np.ndarray, W: np.ndarray, target: PartitionTarget, n: int) -> np.ndarray:
    """Zero exactly on contract-satisfying statistics.  Broadcasts over
    leading batch axes of ``sizes`` (..., k) and ``W`` (..., k, k)."""
    sb = target.eps_err * n
    wb = target.eps_err * n * n
    ps = np.maximum(0.0, np.abs(sizes - target.alpha) - sb - _slack(sb)).sum(-1) / n
    iu = np.triu_indices(target.k)
    dw = np.abs(W[..., iu[0], iu[1]] - target.beta[iu]) - wb - _slack(wb)
    return ps + np.maximum(0.0, dw).sum(-1) / (n * n)


def _deviation_score(sizes, W, target: PartitionTarget, n: int) -> np.ndarray:
    iu = np.triu_indices(target.k)
    return (np.abs(sizes - target.alpha).sum(-1) / n
            + np.abs(W[..., iu[0], iu[1]] - target.beta[iu]).sum(-1) / (n * n))


# ---------------------------------------------------------------------------
# exact
# ---------------------------------------------------------------------------

class AssignmentTable:
    """Statistics of every assignment of n points to k buckets, in
    lexicographic order of the assignment vector.

    Built once per (instance, k, channel) and reused across targets; the
    grid driver asks thousands of targets of the same table.
    """

    def __init__(self, inst: Instance, k: int, channel: str = "sim",
                 budget: int = EXACT_BUDGET):
        n = inst.n
        total = k ** n
        if total > budget:
            raise BudgetExceeded(f"exact partition search needs {total} assignments "
                                 f"(k={k}, n={n}), budget is {budget}")
        self.n, self.k, self.channel, self.count = n, k, channel, total
        self._w = inst.channel(channel)
        self._cache: tuple[np.ndarray, np.ndarray] | None = None
        if total <= 1 << 20:
            self._cache = self._compute(0, total)

    def _codes(self, start: int, stop: int) -> np.ndarray:
        idx = np.arange(start, stop, dtype=np.int64)
        digits = np.empty((len(idx), self.n), dtype=np.intp)
        for pos in range(self.n - 1, -1, -1):
            digits[:, pos] = idx % self.k
            idx //= self.k
        return digits

    def _compute(self, start: int, stop: int):
        a = self._codes(start, stop)
        onehot = np.zeros((len(a), self.n, self.k))
        rows = np.repeat(np.arange(len(a)), self.n)
        onehot[rows, np.tile(np.arange(self.n), len(a)), a.ravel()] = 1.0
        B = np.einsum("bik,ij,bjl->bkl", onehot, self._w, onehot, optimize=True)
        d = np.arange(self.k)
        B[:, d, d] *= 0.5
        return onehot.sum(axis=1), B

    def blocks(self):
        if self._cache is not None:
            yield 0, self._cache[0], self._cache[1]
            return
        for start in range(0, self.count, _CHUNK):
            stop = min(self.count, start + _CHUNK)
            sizes, W = self._compute(start, stop)
            yield start, sizes, W

    def assignment(self, index: int) -> np.ndarray:
        return self._codes(index, index + 1)[0]

    def solve(self, target: PartitionTarget) -> PartitionResult:
        """Smallest total normalized deviation among satisfying assignments;
        ties go to the lexicographically first assignment."""
        if target.k != self.k or target.channel != self.channel:
            raise PartitionError("target does not match this assignment table")
        best_score, best_idx = math.inf, -1
        for start, sizes, W in self.blocks():
            ok = penalty(sizes, W, target, self.n) == 0.0
            if not ok.any():
                continue
            score = np.where(ok, _deviation_score(sizes, W, target, self.n), math.inf)
            j = int(np.argmin(score))
            if score[j] < best_score:
                best_score, best_idx = float(score[j]), start + j
        if best_idx < 0:
            return PartitionResult(Verdict.INFEASIBLE, backend="exact", evaluated=self.count)
        return PartitionResult(Verdict.FOUND, self.assignment(best_idx), backend="exact",
                               evaluated=self.count)


# ---------------------------------------------------------------------------
# local search
# ---------------------------------------------------------------------------

class _State:
    """Assignment plus incremental statistics.

    ``A[v, c]`` is the weight from v into bucket c and ``G = M^T w M`` the
    full bucket Gram matrix (its diagonal is twice the inside weight).
    """

    def __init__(self, w: np.ndarray, assign: np.ndarray, k: int):
        self.w, self.k = w, k
        self.assign = assign.copy()
        n = len(assign)
        onehot = np.zeros((n, k))
        onehot[np.arange(n), assign] = 1.0
        self.A = w @ onehot
        self.G = onehot.T @ self.A
        self.sizes = onehot.sum(axis=0)

    def stats(self, G=None):
        G = self.G if G is None else G
        W = G.copy()
        d = np.arange(self.k)
        W[..., d, d] *= 0.5
        return W

    def move(self, v: int, b: int) -> None:
        a = int(self.assign[v])
        d = np.zeros(self.k)
        d[b] += 1.0
        d[a] -= 1.0
        self.G += np.outer(d, self.A[v]) + np.outer(self.A[v], d)
        self.A[:, b] += self.w[:, v]
        self.A[:, a] -= self.w[:, v]
        self.sizes[a] -= 1
        self.sizes[b] += 1
        self.assign[v] = b


def _best_move(st: _State, target: PartitionTarget, n: int):
    """Lowest-penalty single move or swap; ties go to moves first, then by index."""
    k = st.k
    eye = np.eye(k)
    a = st.assign
    # single moves: d = e_b - e_a for every (v, b)
    D = eye[None, :, :] - eye[a][:, None, :]                   # (n, k, k): [v, b, :]
    Av = st.A[:, None, :]                                       # (n, 1, k)
    G1 = (st.G[None, None] + D[..., :, None] * Av[..., None, :]
          + Av[..., :, None] * D[..., None, :])
    S1 = st.sizes[None, None, :] + D
    p1 = penalty(S1, st.stats(G1), target, n)
    p1[np.arange(n), a] = math.inf
    best = (float(p1.min()), "move", np.unravel_index(int(np.argmin(p1)), p1.shape))
    if k > 1 and n <= 200:
        # swaps (v, u) with a[v] != a[u]
        d1 = eye[a][None, :, :] - eye[a][:, None, :]            # (n, n, k): v -> bucket of u
        Av = st.A[:, None, :]
        Au = st.A[None, :, :] + st.w[:, :, None] * d1           # u's vector after v moved
        G2 = (st.G[None, None] + d1[..., :, None] * Av[..., None, :]
              + Av[..., :, None] * d1[..., None, :]
              - d1[..., :, None] * Au[..., None, :] - Au[..., :, None] * d1[..., None, :])
        p2 = penalty(np.broadcast_to(st.sizes, (n, n, k)), st.stats(G2), target, n)
        p2[a[:, None] == a[None, :]] = math.inf
        p2[np.tril_indices(n)] = math.inf
        j = int(np.argmin(p2))
        if p2.flat[j] < best[0]:
            best = (float(p2.flat[j]), "swap", np.unravel_index(j, p2.shape))
    return best


def _local_search_once(w, target, n, rng, start: np.ndarray | None = None):
    k = target.k
    if start is None:
        start = _random_start(target, n, rng)
    st = _State(w, start, k)
    cur = float(penalty(st.sizes, st.stats(), target, n))
    sideways = 0
    while cur > 0.0:
        val, kind, (x, y) = _best_move(st, target, n)
        if val > cur or not math.isfinite(val):
            break
        if val == cur:
            if sideways >= 2 * n:
                break
            sideways += 1
        if kind == "move":
            st.move(int(x), int(y))
        else:
            bu = int(st.assign[y])
            st.move(int(y), int(st.assign[x]))
            st.move(int(x), bu)
        cur = val
    return st.assign, cur


def _random_start(target: PartitionTarget, n: int, rng) -> np.ndarray:
    """Sizes rounded from alpha (largest remainders), then shuffled."""
    a = target.alpha * (n / target.alpha.sum()) if target.alpha.sum() > 0 else np.full(target.k, n / target.k)
    base = np.floor(a).astype(int)
    rest = n - base.sum()
    order = np.argsort(-(a - base), kind="stable")
    base[order[:rest]] += 1
    labels = np.repeat(np.arange(target.k), base)
    return labels[rng.permutation(n)].astype(np.intp)


def restarts_for(delta: float) -> int:
    return max(1, math.ceil(math.log(1.0 / delta)))


# ---------------------------------------------------------------------------
# sample and extend
# ---------------------------------------------------------------------------

SAMPLE_ASSIGNMENTS = 256


def _extend(w, target, n, sample, sample_assign, order, rng):
    """Place the remaining points one by one where the scaled penalty grows least."""
    k = target.k
    assign = np.full(n, -1, dtype=np.intp)
    assign[sample] = sample_assign
    placed = list(sample)
    onehot = np.zeros((n, k))
    onehot[sample, sample_assign] = 1.0
    for v in order:
        m = len(placed) + 1
        t = m / n
        scaled = PartitionTarget(target.alpha * t, target.beta * t * t, target.eps_err,
                                 target.delta, target.channel)
        base_sizes = onehot.sum(axis=0)
        A = w[v] @ onehot
        G = onehot.T @ w @ onehot
        cand_sizes = base_sizes[None, :] + np.eye(k)
        E = np.eye(k)
        cand_G = G[None] + E[:, :, None] * A[None, None, :] + A[None, :, None] * E[:, None, :]
        d = np.arange(k)
        cand_W = cand_G.copy()
        cand_W[:, d, d] *= 0.5
        score = _deviation_score(cand_sizes, cand_W, scaled, n)
        b = int(np.argmin(score))
        assign[v] = b
        onehot[v, b] = 1.0
        placed.append(v)
    return assign


def _sample_extend(inst, target, rng) -> np.ndarray | None:
    n, k = inst.n, target.k
    w = inst.channel(target.channel)
    want = math.log(1.0 / target.delta) / max(target.eps_err, 1e-6) ** 2
    cap = int(math.floor(math.log(SAMPLE_ASSIGNMENTS) / math.log(k))) if k > 1 else n
    s = int(max(1, min(n, math.ceil(want), cap)))
    sample = np.sort(rng.choice(n, size=s, replace=False))
    rest = np.setdiff1d(np.arange(n), sample)
    order = rest[rng.permutation(len(rest))]
    best, best_pen = None, math.inf
    for combo in itertools.product(range(k), repeat=s):
        assign = _extend(w, target, n, sample, np.array(combo, dtype=np.intp), order, rng)
        sizes = np.bincount(assign, minlength=k).astype(float)
        pen = float(penalty(sizes, bucket_weights(w, assign, k), target, n))
        if pen < best_pen:
            best, best_pen = assign, pen
            if pen == 0.0:
                break
    return best


# ---------------------------------------------------------------------------
# front door
# ---------------------------------------------------------------------------

BACKENDS = ("exact", "localSearch", "sampleExtend")


def _finish(inst, assign, target, backend, evaluated=0) -> PartitionResult:
    if assign is None:
        return PartitionResult(Verdict.INFEASIBLE, backend=backend, evaluated=evaluated)
    dev = verify_partition(inst, assign, target)
    if not within_tolerance(dev, target, inst.n):
        return PartitionResult(Verdict.INFEASIBLE, backend=backend, evaluated=evaluated)
    return PartitionResult(Verdict.FOUND, np.asarray(assign, dtype=np.intp), dev, backend,
                           evaluated)


def check_target(inst: Instance, target: PartitionTarget) -> None:
    total = float(target.alpha.sum())
    if abs(total - inst.n) > 1e-9 * max(1, inst.n):
        raise PartitionError(f"target sizes sum to {total}, expected n={inst.n}")


def solve_partition(inst: Instance, target: PartitionTarget, backend: str = "exact",
                    rng: np.random.Generator | None = None, *,
                    budget: int = EXACT_BUDGET,
                    table: AssignmentTable | None = None) -> PartitionResult:
    """Look for an assignment meeting ``target`` within its tolerances.

    A ``Found`` verdict always carries an assignment that passed
    :func:`verify_partition`.  ``delta`` sets the number of restarts of the
    heuristics and is ignored by ``exact``.
    """
    check_target(inst, target)
    if backend == "exact":
        table = table or AssignmentTable(inst, target.k, target.channel, budget)
        res = table.solve(target)
        return _finish(inst, res.assignment, target, "exact", res.evaluated)
    rng = rng if rng is not None else np.random.default_rng(0)
    if backend == "localSearch":
        w = inst.channel(target.channel)
        best, best_pen = None, math.inf
        for _ in range(restarts_for(target.delta)):
            assign, pen = _local_search_once(w, target, inst.n, rng)
            if pen < best_pen:
                best, best_pen = assign, pen
            if pen == 0.0:
                break
        return _finish(inst, best, target, backend)
    if backend == "sampleExtend":
        return _finish(inst, _sample_extend(inst, target, rng), target, backend)
    raise PartitionError(f"unknown partition backend {backend!r}; choose from {BACKENDS}")

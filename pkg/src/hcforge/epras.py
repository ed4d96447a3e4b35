"""Approximation-scheme drivers for Revenue, Dissimilarity and HCC±.

A driver enumerates small tree shapes ("sketches") whose leaves are bucket
slots, guesses bucket sizes alpha and bucket-pair weights beta on coarse
grids, asks the partition oracle for a matching assignment, and turns every
hit into a full tree.  The best full tree under the true objective wins.

Shapes are nested tuples: ``()`` is a bucket slot and an internal node is a
sorted tuple of at least two child shapes, so ``((), ((), ()))`` is a root
with one slot and a cherry of two slots.  Slots are numbered in preorder.
"""
from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .baselines import average_linkage
from .core import (BudgetExceeded, HcError, HcTree, Instance, NodeKind, binarize,
                   eval_hcc, evaluate, not_all_small, relabel)
from .partition import (EXACT_BUDGET, AssignmentTable, PartitionTarget,
                        bucket_weights, solve_partition)
from .sketch import comb_parts, split_bag
from .treeio import canonical

log = logging.getLogger(__name__)

SLOT: tuple = ()
DEFAULT_BUDGET = 10 ** 7


@dataclass
class EprasConfig:
    eps: float
    delta: float = 0.1
    rho: float = 0.5
    tau: float = 0.5
    backend: str = "exact"
    max_sketch_internal: int | None = None   # default 20 k
    max_buckets: int | None = None           # default k
    budget: int = DEFAULT_BUDGET
    exact_budget: int = EXACT_BUDGET
    comb_draws: int = 1                      # comb splits tried per hit
    include_baseline: bool = True            # average linkage competes in the final fold

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def k(self) -> int:
        return int(math.ceil(1.0 / self.eps - 1e-12))

    @property
    def eps_err(self) -> float:
        return self.eps ** 3

    @property
    def internal_cap(self) -> int:
        return 20 * self.k if self.max_sketch_internal is None else self.max_sketch_internal

    @property
    def bucket_cap(self) -> int:
        return self.k if self.max_buckets is None else self.max_buckets

    def as_dict(self) -> dict:
        return {"eps": self.eps, "delta": self.delta, "rho": self.rho, "tau": self.tau,
                "backend": self.backend, "k": self.k, "epsErr": self.eps_err,
                "maxSketchInternal": self.internal_cap, "maxBuckets": self.bucket_cap,
                "budget": self.budget, "combDraws": self.comb_draws,
                "includeBaseline": self.include_baseline}


# ---------------------------------------------------------------------------
# Shapes
# ---------------------------------------------------------------------------

def canonicalize(shape) -> tuple:
    if shape == SLOT:
        return SLOT
    return tuple(sorted(canonicalize(c) for c in shape))


def shape_slots(shape) -> int:
    return 1 if shape == SLOT else sum(shape_slots(c) for c in shape)


def shape_internal(shape) -> int:
    return 0 if shape == SLOT else 1 + sum(shape_internal(c) for c in shape)


@lru_cache(maxsize=None)
def _trees_with_leaves(m: int) -> tuple:
    """All canonical shapes with exactly m slots."""
    if m == 1:
        return (SLOT,)
    out = set()
    for parts in _forests(m, m - 1):
        out.add(tuple(sorted(parts)))
    return tuple(sorted(out))


def _forests(m: int, largest: int) -> Iterator[tuple]:
    """Multisets of >= 2 shapes with m slots in total (only when called for
    a root), each part holding at most ``largest`` slots."""
    # parts are generated with nonincreasing slot counts to avoid repeats
    def rec(remaining: int, cap: int, count: int):
        if remaining == 0:
            if count >= 2:
                yield ()
            return
        for size in range(min(cap, remaining), 0, -1):
            for t in _trees_with_leaves(size):
                for rest in rec(remaining - size, size, count + 1):
                    yield (t,) + rest

    yield from rec(m, largest, 0)


def enumerate_sketch_shapes(max_internal: int, max_buckets: int) -> Iterator[tuple]:
    """Every shape with at most ``max_internal`` internal nodes and at most
    ``max_buckets`` slots, once per isomorphism class, by slot count then
    canonical order.  The lone slot (one bucket, no internal node) comes first."""
    if max_internal < 1:
        raise ValueError("max_internal must be >= 1")
    for m in range(1, max_buckets + 1):
        for s in _trees_with_leaves(m):
            if shape_internal(s) <= max_internal:
                yield s


# ---------------------------------------------------------------------------
# Sketch estimates
# ---------------------------------------------------------------------------

def _slot_groups(shape):
    """For every internal node, the slot indices under each child."""
    groups = []
    counter = itertools.count()

    def rec(s) -> list[int]:
        if s == SLOT:
            return [next(counter)]
        kids = [rec(c) for c in s]
        groups.append(kids)
        return [x for k in kids for x in k]

    rec(shape)
    return groups


def _check_dims(shape, alpha, beta):
    b = shape_slots(shape)
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if alpha.shape != (b,) or beta.shape != (b, b):
        raise HcError(f"shape has {b} slots but alpha/beta have shapes "
                      f"{alpha.shape}/{beta.shape}")
    return alpha, beta


def eval_sketch_revenue(shape, alpha, beta) -> float:
    """Estimated revenue: each cross pair weight times the mass outside the
    subtree of the pair's LCA; bucket-internal weight times the mass outside
    the bucket itself (buckets sit under their own star node)."""
    alpha, beta = _check_dims(shape, alpha, beta)
    n = alpha.sum()
    total = float(np.dot(np.diag(beta), n - alpha))
    for kids in _slot_groups(shape):
        inside = sum(alpha[x] for k in kids for x in k)
        for a in range(len(kids)):
            for c in range(a + 1, len(kids)):
                for i in kids[a]:
                    for j in kids[c]:
                        total += beta[i, j] * (n - inside)
    return total


def eval_sketch_dissimilarity(shape, alpha, beta) -> float:
    """Estimated dissimilarity: each cross pair weight times the masses of the
    two LCA children holding the pair; bucket-internal weight counts 0."""
    alpha, beta = _check_dims(shape, alpha, beta)
    total = 0.0
    for kids in _slot_groups(shape):
        mass = [sum(alpha[x] for x in k) for k in kids]
        for a in range(len(kids)):
            for c in range(a + 1, len(kids)):
                for i in kids[a]:
                    for j in kids[c]:
                        total += beta[i, j] * (mass[a] + mass[c])
    return total


def sketch_error_bound(beta, size_dev, weight_dev, n: int) -> float:
    """Worst-case gap between an estimate on the targets and the same formula
    on the realized statistics: every bucket pair can be off by its weight
    deviation times at most n, plus its target weight times the total size
    deviation."""
    beta = np.asarray(beta, dtype=np.float64)
    iu = np.triu_indices(beta.shape[0])
    return float((np.asarray(weight_dev)[iu] * n).sum()
                 + beta[iu].sum() * float(np.sum(size_dev)))


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

def alpha_grid(n: int, eps: float, buckets: int) -> list[np.ndarray]:
    """Size vectors on the eps^2 n grid; the last bucket takes the residual
    and must be positive and at most 3 eps n + eps^2 n."""
    step = eps * eps * n
    top = int(math.floor(3.0 / eps + 1e-9))
    cap = 3 * eps * n + step + 1e-9 * n
    out = []
    for head in itertools.product(range(1, top + 1), repeat=buckets - 1):
        vec = np.array(head, dtype=np.float64) * step
        resid = n - vec.sum()
        if resid <= 1e-9 * n or resid > cap:
            continue
        out.append(np.append(vec, resid))
    return out


def beta_levels(n: int, eps: float) -> np.ndarray:
    return np.arange(int(math.floor(9.0 / eps + 1e-9)) + 1) * eps ** 3 * n * n


def candidate_count(cfg: EprasConfig, n: int) -> int:
    """Shapes x alpha grid x beta grid, before any pruning."""
    levels = len(beta_levels(n, cfg.eps))
    total = 0
    for s in enumerate_sketch_shapes(cfg.internal_cap, cfg.bucket_cap):
        b = shape_slots(s)
        total += len(alpha_grid(n, cfg.eps, b)) * levels ** (b * (b + 1) // 2)
    return total


# ---------------------------------------------------------------------------
# Materialization
# ---------------------------------------------------------------------------

def _refine(inst: Instance, members: list[int], channel: str) -> HcTree:
    sub = average_linkage(inst.restrict(members), channel)
    return relabel(sub, members)


def _graft_into(out: HcTree, src: HcTree, v: int, parent: int) -> None:
    node = out.add_node(src.kind[v], src.label[v], parent)
    for c in src.children[v]:
        _graft_into(out, src, c, node)


def _place_group(out: HcTree, parent: int, members: list[int], inst: Instance | None,
                 channel: str) -> None:
    """Attach ``members`` under ``parent``: a single leaf, a star, or (when an
    instance is given) the average-linkage tree of the group."""
    if len(members) == 1:
        out.add_node(NodeKind.LEAF, members[0], parent)
    elif inst is not None and len(members) > 2:
        sub = _refine(inst, members, channel)
        _graft_into(out, sub, sub.root, parent)
    else:
        aux = out.add_node(NodeKind.AUX, -1, parent)
        for x in members:
            out.add_node(NodeKind.LEAF, x, aux)


def materialize(shape, buckets: list[list[int]], objective: str, eps: float,
                rng: np.random.Generator | None = None, inst: Instance | None = None) -> HcTree:
    """Full tree for ``shape`` with the given bucket members.

    Revenue buckets become stars at their slots.  Dissimilarity buckets become
    combs: a chain of ceil(1/eps) links, each carrying one random part of the
    bucket.  With ``inst`` every star / comb part is replaced by the
    average-linkage tree of its members and the result is binarized; without
    it the raw multiway structure is returned.
    """
    if objective not in ("rev", "dis"):
        raise ValueError(f"objective must be rev or dis, got {objective!r}")
    channel = "sim" if objective == "rev" else "dis"
    q = comb_parts(eps)
    out = HcTree()
    slot_ids = iter(range(len(buckets)))

    def build(s, parent: int) -> None:
        if s != SLOT:
            node = out.add_node(NodeKind.INTERNAL, -1, parent)
            if parent < 0:
                out.root = node
            for c in s:
                build(c, node)
            return
        members = sorted(buckets[next(slot_ids)])
        if not members:
            return
        if objective == "rev" or len(members) == 1:
            holder = out.add_node(NodeKind.INTERNAL, -1, parent)
            if parent < 0:
                out.root = holder
            _place_group(out, holder, members, inst, channel)
            return
        cur = parent
        for part in split_bag(members, q, rng if rng is not None else np.random.default_rng(0)):
            link = out.add_node(NodeKind.INTERNAL, -1, cur)
            if cur < 0:
                out.root = link
            _place_group(out, link, part, inst, channel)
            cur = link

    build(shape, -1)
    tree = out.compact()
    return binarize(tree) if inst is not None else tree


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

@dataclass
class CandidateCheck:
    """Per-hit record: sketch estimate on the targets, the raw materialized
    tree's value, and the allowed gap."""

    shape: tuple
    estimate: float
    raw_value: float
    bound: float
    inside_weight: float


@dataclass
class EprasResult:
    tree: HcTree
    value: float
    baseline_value: float
    candidates_tried: int
    oracle_calls: int = 0
    hits: int = 0
    case_applied: str = ""
    checks: list[CandidateCheck] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    sketch_value: float = -math.inf    # best sketch candidate alone
    winner: str = "sketch"             # "sketch" or "baseline"

    def as_dict(self) -> dict:
        from .treeio import dumps_tree
        return {"tree": dumps_tree(self.tree), "value": self.value,
                "baselineValue": self.baseline_value,
                "candidatesTried": self.candidates_tried,
                "oracleCalls": self.oracle_calls, "hits": self.hits,
                "caseApplied": self.case_applied,
                "sketchValue": self.sketch_value if math.isfinite(self.sketch_value) else None,
                "winner": self.winner}


def _beta_feasible(beta: np.ndarray, alpha: np.ndarray, total: float, wmax: float,
                   tol_n: float, tol_w: float) -> bool:
    """Necessary conditions for any assignment to meet the target: the
    realized weights sum to the channel total, and no bucket pair can carry
    more than the pairs available to it."""
    b = len(alpha)
    iu = np.triu_indices(b)
    if abs(beta[iu].sum() - total) > len(iu[0]) * tol_w + 1e-9 * max(1.0, total):
        return False
    hi = alpha + tol_n
    cap = np.outer(hi, hi) * wmax
    cap[np.diag_indices(b)] = hi * np.maximum(hi - 1, 0) / 2 * wmax
    return bool(np.all(beta[iu] <= cap[iu] + tol_w + 1e-9))


def _hit_rng(base_seed: int, draw: int, shape, assignment: np.ndarray) -> np.random.Generator:
    key = [ord(c) for c in repr(shape)] + [int(x) for x in assignment]
    return np.random.default_rng([base_seed, draw, *key])


def _scheme(inst: Instance, cfg: EprasConfig, objective: str,
            rng: np.random.Generator | None, collect_checks: bool) -> EprasResult:
    n = inst.n
    channel = "sim" if objective == "rev" else "dis"
    rng = rng if rng is not None else np.random.default_rng(0)
    # comb splits are keyed by the hit itself so the same (shape, assignment)
    # always yields the same tree, whatever grid produced it
    base_seed = int(rng.integers(2 ** 63))
    w = inst.channel(channel)
    baseline = average_linkage(inst, channel)
    base_val = evaluate(inst, baseline, objective)
    if n < 2:
        return EprasResult(baseline, base_val, base_val, 0, config=cfg.as_dict())
    if not not_all_small(inst, cfg.rho, cfg.tau, channel):
        warnings.warn(f"instance fails the not-all-small test (rho={cfg.rho}, tau={cfg.tau}); "
                      "the approximation guarantee does not apply", RuntimeWarning, stacklevel=3)
    count = candidate_count(cfg, n)
    if count > cfg.budget:
        raise BudgetExceeded(f"{count} sketch candidates exceed the budget of {cfg.budget}; "
                             "use a larger eps or raise the budget")
    estimate = eval_sketch_revenue if objective == "rev" else eval_sketch_dissimilarity
    levels = beta_levels(n, cfg.eps)
    total = inst.total(channel)
    wmax = float(w.max()) if n > 1 else 0.0
    tol_n, tol_w = cfg.eps_err * n, cfg.eps_err * n * n

    best_tree, best_val, best_key = None, -math.inf, None
    calls = hits = 0
    checks: list[CandidateCheck] = []
    tables: dict[int, AssignmentTable] = {}
    seen: dict[tuple, float] = {}
    for shape in enumerate_sketch_shapes(cfg.internal_cap, cfg.bucket_cap):
        b = shape_slots(shape)
        iu = np.triu_indices(b)
        if cfg.backend == "exact" and b not in tables:
            tables[b] = AssignmentTable(inst, b, channel, cfg.exact_budget)
        for alpha in alpha_grid(n, cfg.eps, b):
            for combo in itertools.product(levels, repeat=len(iu[0])):
                beta = np.zeros((b, b))
                beta[iu] = combo
                beta = beta + np.triu(beta, 1).T
                if not _beta_feasible(beta, alpha, total, wmax, tol_n, tol_w):
                    continue
                target = PartitionTarget(alpha, beta, cfg.eps_err, cfg.delta, channel)
                calls += 1
                res = solve_partition(inst, target, cfg.backend, rng, table=tables.get(b))
                if not res.found:
                    continue
                hits += 1
                key = (shape, res.assignment.tobytes())
                buckets = [np.flatnonzero(res.assignment == s).tolist() for s in range(b)]
                if collect_checks:
                    raw = materialize(shape, buckets, objective, cfg.eps,
                                      _hit_rng(base_seed, 0, shape, res.assignment))
                    W = bucket_weights(w, res.assignment, b)
                    checks.append(CandidateCheck(
                        shape, estimate(shape, alpha, beta), evaluate(inst, raw, objective),
                        sketch_error_bound(beta, res.deviations.size, res.deviations.weight, n),
                        float(np.trace(W))))
                if key in seen:
                    continue
                draws = cfg.comb_draws if objective == "dis" else 1
                for draw in range(draws):
                    tree = materialize(shape, buckets, objective, cfg.eps,
                                       _hit_rng(base_seed, draw, shape, res.assignment), inst)
                    val = evaluate(inst, tree, objective)
                    ckey = canonical(tree)
                    if val > best_val or (val == best_val and ckey < best_key):
                        best_tree, best_val, best_key = tree, val, ckey
                seen[key] = best_val
    sketch_val = best_val
    winner = "sketch"
    if best_tree is None:
        log.warning("no sketch candidate was feasible; returning the average-linkage tree")
        best_tree, best_val, winner = baseline, base_val, "baseline"
    elif cfg.include_baseline and base_val > best_val:
        best_tree, best_val, winner = baseline, base_val, "baseline"
    log.info("%s scheme: %d candidates, %d oracle calls, %d hits, sketch %.6g, baseline %.6g",
             objective, count, calls, hits, sketch_val, base_val)
    return EprasResult(best_tree, best_val, base_val, count, calls, hits, objective,
                       checks, cfg.as_dict(), sketch_val, winner)


def revenue_epras(inst: Instance, cfg: EprasConfig, rng: np.random.Generator | None = None,
                  *, collect_checks: bool = False) -> EprasResult:
    """Revenue scheme: star buckets, true revenue picks the winner."""
    return _scheme(inst, cfg, "rev", rng, collect_checks)


def dissimilarity_epras(inst: Instance, cfg: EprasConfig, rng: np.random.Generator | None = None,
                        *, collect_checks: bool = False) -> EprasResult:
    """Dissimilarity scheme: comb buckets, true dissimilarity picks the winner."""
    return _scheme(inst, cfg, "dis", rng, collect_checks)


def hcc_pm(inst: Instance, cfg: EprasConfig, rng: np.random.Generator | None = None) -> EprasResult:
    """Run both schemes on a complementary instance and keep the tree with the
    larger HCC value.  ``case_applied`` names the heavier channel, the one
    the approximation argument leans on."""
    if not inst.is_complementary():
        raise HcError("HCC± needs w^d = 1 - w^s on every pair")
    rng = rng if rng is not None else np.random.default_rng(0)
    r_rev = revenue_epras(inst, cfg, rng)
    r_dis = dissimilarity_epras(inst, cfg, rng)
    v_rev = eval_hcc(inst, r_rev.tree).hcc
    v_dis = eval_hcc(inst, r_dis.tree).hcc
    best = r_dis if v_dis > v_rev else r_rev
    value = max(v_rev, v_dis)
    case = "dis" if inst.total("dis") >= inst.total("sim") else "rev"
    base = max(eval_hcc(inst, average_linkage(inst, "sim")).hcc,
               eval_hcc(inst, average_linkage(inst, "dis")).hcc)
    return EprasResult(best.tree, value, base, r_rev.candidates_tried + r_dis.candidates_tried,
                       r_rev.oracle_calls + r_dis.oracle_calls, r_rev.hits + r_dis.hits,
                       case, config=cfg.as_dict(), winner=best.winner)


def shift_instance(inst: Instance, shift_eps: float) -> Instance:
    w = np.minimum(1.0, inst.sim + shift_eps)
    np.fill_diagonal(w, 0.0)
    return Instance.similarity(w)


def metric_shift(inst: Instance, shift_eps: float, cfg: EprasConfig,
                 rng: np.random.Generator | None = None) -> EprasResult:
    """Raise every similarity by ``shift_eps`` (capped at 1), run the revenue
    scheme on the shifted instance and report revenue under the original
    weights.  The shifted instance is dense with rho = 1, tau = shift_eps."""
    if not 0 < shift_eps < 1:
        raise ValueError(f"shift must lie in (0, 1), got {shift_eps}")
    shifted = shift_instance(inst, shift_eps)
    scfg = EprasConfig(**{**cfg.__dict__, "rho": 1.0, "tau": shift_eps})
    res = revenue_epras(shifted, scfg, rng)
    value = evaluate(inst, res.tree, "rev")
    base = evaluate(inst, average_linkage(inst, "sim"), "rev")
    return EprasResult(res.tree, value, base, res.candidates_tried, res.oracle_calls,
                       res.hits, "shift", config={**scfg.as_dict(), "shift": shift_eps},
                       winner=res.winner)

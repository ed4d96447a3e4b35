"""Seeded property batteries with CSV reports.

Every trial of property ``p`` draws from ``default_rng([seed, p_index,
trial])`` so reports depend only on the master seed, never on worker count
or scheduling.  Rows are folded in property order.
"""
from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import hcc as hcc_mod
from .baselines import (average_linkage, brute_force_optimal, double_factorial_count,
                        enumerate_binary_trees, optimal_value_dp, random_binary_tree,
                        random_multiway_tree)
from .core import Instance, eval_dissimilarity, eval_hcc, eval_revenue, lca_size_table
from .generators import complement_instance, dasgupta_cost, hccpm_instance, random_instance
from .partition import PartitionTarget, bucket_weights, solve_partition, verify_partition, \
    within_tolerance
from .sketch import (build_edge_set_F, components, contract_to_K, degree_census,
                     find_balanced_edge, sketch_stats, split_sizes, to_rev_tree)

CSV_VERSION = 1
COLUMNS = ("property", "trials", "violations", "min_ratio", "mean_ratio")

# a check returns (violated, ratio or None)
Check = Callable[[np.random.Generator], tuple[bool, float | None]]


@dataclass
class Property:
    name: str
    trials: int
    check: Check


# ---------------------------------------------------------------------------
# lemma checks
# ---------------------------------------------------------------------------

def _balanced_edge(rng):
    n = int(rng.integers(3, 201))
    t = random_binary_tree(n, rng)
    a, b = split_sizes(t, find_balanced_edge(t))
    lo, hi = math.ceil(n / 3), (2 * n) // 3
    return not (lo <= min(a, b) and max(a, b) <= hi), None


def _f_set(rng):
    eps = (1 / 16, 1 / 24)[int(rng.integers(2))]
    n = int(rng.integers(48, 301))
    t = random_binary_tree(n, rng)
    sizes = [len(c) for c in components(t, build_edge_set_F(t, eps))]
    return not (min(sizes) >= eps * n - 1e-9 and max(sizes) <= 3 * eps * n + 1e-9), None


def _degree3(rng):
    n = int(rng.integers(2, 200))
    t = random_multiway_tree(n, rng, p_merge=float(rng.random()))
    v3, leaves = degree_census(t.edges())
    return v3 > leaves - 1, None


def _star_pair_bound(rng):
    n, eps = 60, 1 / 12
    t = random_binary_tree(n, rng)
    s = to_rev_tree(contract_to_K(t, eps))
    a = lca_size_table(t, n).sizes
    b = lca_size_table(s, n).sizes
    st = sketch_stats(s)
    bad = (np.any(b > a + 6 * eps * n + 1e-9) or st.internal_nodes > 20 / eps
           or st.max_children > 3 * eps * n + 1e-9)
    off = ~np.eye(n, dtype=bool)
    return bool(bad), float((b[off] - a[off]).max() / (6 * eps * n))


def _greedy_floor(rng):
    n = int(rng.integers(2, 41))
    inst = random_instance(n, float(rng.random()), False, rng)
    trace: list = []
    tree = hcc_mod.greedy_caterpillar(inst, trace)
    value = eval_hcc(inst, tree).hcc
    floor = hcc_mod.greedy_floor(inst)
    scale = max(1.0, float(np.abs(inst.sim).sum() + np.abs(inst.dis).sum()) * n)
    bad = value < floor - 1e-9 * scale
    for sc in trace:
        wd = inst.dis[np.ix_(sc.alive, sc.alive)].sum() / 2.0
        if abs(sc.sim_part.sum()) > 1e-9 * scale or abs(sc.dis_part.sum() - 2 * wd) > 1e-9 * scale:
            bad = True
        if sc.scores.max() < -1e-9 * scale:
            bad = True
    return bool(bad), (value / floor if floor > 0 else None)


def _al_floor(rng):
    n = int(rng.integers(2, 30))
    inst = random_instance(n, float(rng.random()), False, rng)
    rev = eval_revenue(inst, average_linkage(inst, "sim"))
    dis = eval_dissimilarity(inst, average_linkage(inst, "dis"))
    fr = (n - 2) / 3 * inst.total("sim")
    fd = 2 * (n - 2) / 3 * inst.total("dis")
    scale = 1e-9 * max(1.0, n * (inst.total("sim") + inst.total("dis")))
    return bool(rev < fr - scale or dis < fd - scale), (rev / fr if fr > 0 else None)


def _complement_identity(rng):
    n = 6
    w = np.triu(rng.random((n, n)), 1)
    inst = Instance.similarity(w + w.T)
    comp = complement_instance(inst)
    t = random_binary_tree(n, rng)
    lhs = dasgupta_cost(inst, t)
    rhs = (n ** 3 - n) / 3 - eval_dissimilarity(comp, t)
    return abs(lhs - rhs) > 1e-9, None


LEMMAS = [
    Property("balanced_edge", 1000, _balanced_edge),
    Property("f_set_components", 200, _f_set),
    Property("degree3_bound", 1000, _degree3),
    Property("star_pair_bound", 100, _star_pair_bound),
    Property("greedy_floor", 1000, _greedy_floor),
    Property("average_linkage_floor", 1000, _al_floor),
    Property("complement_identity", 500, _complement_identity),
]


# ---------------------------------------------------------------------------
# approximation checks (against brute force)
# ---------------------------------------------------------------------------

def _combined_hcc(rng):
    n = int(rng.integers(4, 10))
    inst = hccpm_instance(n, rng)
    value = eval_hcc(inst, hcc_mod.combined_hcc(inst, backend="exact")).hcc
    _, opt = brute_force_optimal(inst, "hcc")
    return value < 0.4767 * opt - 1e-9, (value / opt if opt > 0 else None)


def _greedy_vs_opt(rng):
    n = int(rng.integers(3, 9))
    inst = random_instance(n, 1.0, bool(rng.integers(2)), rng)
    value = eval_hcc(inst, hcc_mod.greedy_caterpillar(inst)).hcc
    _, opt = brute_force_optimal(inst, "hcc")
    return value > opt + 1e-9, (value / opt if opt > 0 else None)


def _al_rev_vs_opt(rng):
    n = int(rng.integers(3, 9))
    inst = random_instance(n, 1.0, False, rng)
    value = eval_revenue(inst, average_linkage(inst, "sim"))
    _, opt = brute_force_optimal(inst, "rev")
    return value > opt + 1e-9, (value / opt if opt > 0 else None)


APPROX = [
    Property("combined_hcc_0.4767", 60, _combined_hcc),
    Property("greedy_hcc_over_opt", 100, _greedy_vs_opt),
    Property("average_linkage_rev_over_opt", 100, _al_rev_vs_opt),
]


# ---------------------------------------------------------------------------
# oracle checks
# ---------------------------------------------------------------------------

def _clique_identity(rng):
    n = int(rng.integers(3, 7))
    w = np.ones((n, n)) - np.eye(n)
    inst = Instance(sim=w, dis=w)
    bad = False
    count = 0
    for t in enumerate_binary_trees(n):
        count += 1
        r = eval_hcc(inst, t)
        if 3 * r.dis != n ** 3 - n or 6 * r.rev != n ** 3 - 3 * n * n + 2 * n:
            bad = True
    return bad or count != double_factorial_count(n), None


def _brute_vs_dp(rng):
    n = int(rng.integers(2, 9))
    inst = random_instance(n, float(rng.random()), False, rng)
    obj = ("rev", "dis", "hcc")[int(rng.integers(3))]
    _, a = brute_force_optimal(inst, obj)
    _, b = optimal_value_dp(inst, obj)
    return abs(a - b) > 1e-9 * max(1.0, abs(a)), None


def _partition_soundness(rng):
    n = int(rng.integers(2, 9))
    k = int(rng.integers(1, 4))
    inst = random_instance(n, float(rng.random()), False, rng)
    labels = rng.integers(0, k, n)
    W = bucket_weights(inst.sim, labels, k)
    alpha = np.abs(np.bincount(labels, minlength=k) + rng.normal(0, 0.5, k))
    alpha = alpha * n / alpha.sum() if alpha.sum() > 0 else np.full(k, n / k)
    beta = np.abs(W + rng.normal(0, 0.3, (k, k)))
    target = PartitionTarget(alpha, (beta + beta.T) / 2, float(rng.choice([0.01, 0.05, 0.1])))
    backend = ("exact", "localSearch", "sampleExtend")[int(rng.integers(3))]
    res = solve_partition(inst, target, backend, rng)
    if res.found and not within_tolerance(verify_partition(inst, res.assignment, target),
                                          target, n):
        return True, None
    return False, None


ORACLES = [
    Property("clique_identities", 20, _clique_identity),
    Property("bruteforce_equals_dp", 100, _brute_vs_dp),
    Property("partition_soundness", 500, _partition_soundness),
]

SUITES = {"lemmas": LEMMAS, "approx": APPROX, "oracles": ORACLES}


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

@dataclass
class Row:
    property: str
    trials: int
    violations: int
    min_ratio: float | None
    mean_ratio: float | None


def workers() -> int:
    env = os.environ.get("HCFORGE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_property(prop: Property, index: int, seed: int, trials: int | None = None,
                 threads: int = 1) -> Row:
    count = prop.trials if trials is None else trials

    def one(t: int):
        return prop.check(np.random.default_rng([seed, index, t]))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(count)))
    else:
        results = [one(t) for t in range(count)]
    ratios = [r for _, r in results if r is not None]
    return Row(prop.name, count, sum(1 for bad, _ in results if bad),
               min(ratios) if ratios else None,
               float(np.mean(ratios)) if ratios else None)


def run_suite(suite: str, seed: int, scale: float = 1.0, threads: int | None = None) -> list[Row]:
    """Run every property of ``suite``; ``scale`` multiplies the trial counts."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    threads = workers() if threads is None else threads
    return [run_property(p, i, seed, max(1, int(round(p.trials * scale))), threads)
            for i, p in enumerate(SUITES[suite])]


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.9g}"


def to_csv(rows: list[Row], suite: str, seed: int, scale: float) -> str:
    buf = io.StringIO()
    buf.write(f"# hcforge-bench v{CSV_VERSION} suite={suite} seed={seed} scale={scale}\n")
    buf.write(",".join(COLUMNS) + "\n")
    for r in rows:
        buf.write(f"{r.property},{r.trials},{r.violations},{_fmt(r.min_ratio)},"
                  f"{_fmt(r.mean_ratio)}\n")
    return buf.getvalue()

import numpy as np
import pytest

from hcforge.core import BudgetExceeded, Instance
from hcforge.generators import random_instance
from hcforge.partition import (BACKENDS, AssignmentTable, PartitionError, PartitionTarget, Verdict,
                               bucket_weights, penalty, restarts_for, solve_partition,
                               verify_partition, within_tolerance)

import oracles


def clique(n):
    return Instance.similarity(np.ones((n, n)) - np.eye(n))


def target_of(inst, labels, k, eps_err=0.0, channel="sim"):
    sizes, W = oracles.assignment_stats(inst.channel(channel), labels, k)
    return PartitionTarget(sizes, W, eps_err, channel=channel)


def random_target(rng, n, k, eps_err, scale):
    alpha = np.abs(rng.normal(n / k, 1.0, k))
    alpha *= n / alpha.sum()
    b = rng.uniform(0, scale, (k, k))
    return PartitionTarget(alpha, b + b.T, eps_err)


# -- targets -----------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(alpha=[], beta=np.zeros((0, 0)), eps_err=0.1),
    dict(alpha=[1, 1], beta=np.zeros((3, 3)), eps_err=0.1),
    dict(alpha=[1, -1], beta=np.zeros((2, 2)), eps_err=0.1),
    dict(alpha=[1, 1], beta=[[0, 1], [2, 0]], eps_err=0.1),
    dict(alpha=[1, 1], beta=np.zeros((2, 2)), eps_err=1.0),
    dict(alpha=[1, 1], beta=np.zeros((2, 2)), eps_err=0.1, delta=0.0),
    dict(alpha=[1, 1], beta=np.zeros((2, 2)), eps_err=0.1, channel="both"),
    dict(alpha=[1, np.nan], beta=np.zeros((2, 2)), eps_err=0.1),
])
def test_malformed_targets(kwargs):
    with pytest.raises(PartitionError):
        PartitionTarget(**kwargs)


def test_alpha_must_sum_to_n():
    with pytest.raises(PartitionError):
        solve_partition(clique(4), PartitionTarget([2, 1], np.zeros((2, 2)), 0.1))


def test_unknown_backend():
    with pytest.raises(PartitionError):
        solve_partition(clique(4), PartitionTarget([4], [[6]], 0.1), "sdp")


def test_exact_budget():
    with pytest.raises(BudgetExceeded):
        solve_partition(clique(12), PartitionTarget([3] * 4, np.zeros((4, 4)), 0.1), budget=4 ** 11)


def test_restarts():
    assert restarts_for(0.1) == 3 and restarts_for(0.5) == 1 and restarts_for(1e-3) == 7


# -- spec examples -----------------------------------------------------------------

@pytest.mark.parametrize("backend", BACKENDS)
def test_single_bucket(backend):
    inst = random_instance(7, 0.8, False, np.random.default_rng(0))
    res = solve_partition(inst, PartitionTarget([7], [[inst.total("sim")]], 0.0), backend)
    assert res.found and np.all(res.assignment == 0)
    assert res.deviations.size.max() == 0 and res.deviations.weight.max() == pytest.approx(0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_clique_bisection_found(backend):
    res = solve_partition(clique(4), PartitionTarget([2, 2], [[1, 4], [4, 1]], 0.0), backend,
                          np.random.default_rng(0))
    assert res.verdict is Verdict.FOUND
    assert np.bincount(res.assignment).tolist() == [2, 2]


def test_clique_bisection_zero_cross_infeasible():
    res = solve_partition(clique(4), PartitionTarget([2, 2], [[1, 0], [0, 1]], 0.01))
    assert res.verdict is Verdict.INFEASIBLE and res.assignment is None


# -- verify_partition ---------------------------------------------------------------

def test_verify_exact_match_and_moved_point():
    inst = Instance.similarity(np.zeros((5, 5)))
    target = PartitionTarget([3, 2], np.zeros((2, 2)), 0.0)
    dev = verify_partition(inst, [0, 0, 0, 1, 1], target)
    assert dev.size.max() == 0 and dev.weight.max() == 0
    dev = verify_partition(inst, [0, 0, 1, 1, 1], target)
    assert dev.size.tolist() == [1, 1] and dev.weight.max() == 0
    assert not within_tolerance(dev, target, 5)


def test_verify_rejects_partial_assignments():
    inst = clique(3)
    target = PartitionTarget([2, 1], np.zeros((2, 2)), 0.1)
    with pytest.raises(PartitionError):
        verify_partition(inst, [0, 1], target)
    with pytest.raises(PartitionError):
        verify_partition(inst, [0, 1, 2], target)


@pytest.mark.parametrize("seed", range(10))
def test_verify_matches_recomputation(seed):
    rng = np.random.default_rng(seed)
    n, k = 8, 3
    inst = random_instance(n, 0.9, False, rng)
    labels = rng.integers(0, k, n)
    target = random_target(rng, n, k, 0.1, 3.0)
    sizes, W = oracles.assignment_stats(inst.sim, labels.tolist(), k)
    dev = verify_partition(inst, labels, target)
    assert np.allclose(dev.size, np.abs(sizes - target.alpha))
    assert np.allclose(dev.weight, np.abs(W - target.beta))
    assert np.allclose(bucket_weights(inst.sim, labels, k), W)


def test_penalty_zero_iff_within_tolerance():
    rng = np.random.default_rng(3)
    n, k = 7, 2
    inst = random_instance(n, 0.9, False, rng)
    for _ in range(200):
        labels = rng.integers(0, k, n)
        target = random_target(rng, n, k, float(rng.uniform(0, 0.2)), 4.0)
        sizes = np.bincount(labels, minlength=k).astype(float)
        W = bucket_weights(inst.sim, labels, k)
        dev = verify_partition(inst, labels, target)
        assert (penalty(sizes, W, target, n) == 0) == within_tolerance(dev, target, n)


# -- backends -------------------------------------------------------------------------

def test_exact_completeness_against_enumeration():
    rng = np.random.default_rng(4)
    for _ in range(120):
        n = int(rng.integers(2, 8))
        k = int(rng.integers(1, 4))
        inst = random_instance(n, 0.8, False, rng)
        if rng.random() < 0.5:
            target = target_of(inst, rng.integers(0, k, n).tolist(), k, float(rng.uniform(0, 0.05)))
        else:
            target = random_target(rng, n, k, float(rng.uniform(0, 0.1)), 2.0)
        res = solve_partition(inst, target)
        want = oracles.feasible_by_enumeration(inst.sim, target.alpha, target.beta, target.eps_err)
        assert res.found == want


def test_exact_dis_channel():
    rng = np.random.default_rng(5)
    inst = random_instance(6, 0.8, False, rng)
    labels = [0, 0, 1, 1, 2, 2]
    res = solve_partition(inst, target_of(inst, labels, 3, channel="dis"))
    assert res.found and within_tolerance(res.deviations, target_of(inst, labels, 3, channel="dis"), 6)


def test_table_reuse_gives_same_answer():
    rng = np.random.default_rng(6)
    inst = random_instance(8, 0.8, False, rng)
    table = AssignmentTable(inst, 2, "sim", 4 ** 14)
    for _ in range(20):
        target = target_of(inst, rng.integers(0, 2, 8).tolist(), 2, 0.02)
        a = solve_partition(inst, target, table=table)
        b = solve_partition(inst, target)
        assert a.found and b.found and np.array_equal(a.assignment, b.assignment)


@pytest.mark.parametrize("backend", ["localSearch", "sampleExtend"])
def test_heuristic_soundness(backend):
    rng = np.random.default_rng(7)
    for _ in range(150):
        n = int(rng.integers(3, 11))
        k = int(rng.integers(1, 4))
        inst = random_instance(n, 0.8, False, rng)
        if rng.random() < 0.5:
            target = target_of(inst, rng.integers(0, k, n).tolist(), k, float(rng.uniform(0, 0.1)))
        else:
            target = random_target(rng, n, k, float(rng.uniform(0, 0.1)), 3.0)
        res = solve_partition(inst, target, backend, rng)
        if res.found:
            assert within_tolerance(verify_partition(inst, res.assignment, target), target, n)
            assert solve_partition(inst, target).found


def test_heuristics_find_planted_partitions_often():
    rng = np.random.default_rng(8)
    hits = {"localSearch": 0, "sampleExtend": 0}
    for _ in range(40):
        n = 10
        inst = random_instance(n, 0.8, False, rng)
        target = target_of(inst, rng.integers(0, 2, n).tolist(), 2, 0.05)
        for b in hits:
            hits[b] += solve_partition(inst, target, b, np.random.default_rng(0)).found
    assert hits["localSearch"] >= 30 and hits["sampleExtend"] >= 30


def test_heuristics_deterministic_given_seed():
    rng = np.random.default_rng(9)
    inst = random_instance(10, 0.8, False, rng)
    target = target_of(inst, rng.integers(0, 3, 10).tolist(), 3, 0.03)
    for b in ("localSearch", "sampleExtend"):
        r1 = solve_partition(inst, target, b, np.random.default_rng(5))
        r2 = solve_partition(inst, target, b, np.random.default_rng(5))
        assert r1.verdict is r2.verdict
        if r1.found:
            assert np.array_equal(r1.assignment, r2.assignment)

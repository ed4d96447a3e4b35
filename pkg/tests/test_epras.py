import itertools

import numpy as np
import pytest

from hcforge.baselines import brute_force_optimal, optimal_value_dp
from hcforge.core import (BudgetExceeded, HcError, Instance, eval_dissimilarity, eval_hcc,
                          eval_revenue, validate)
from hcforge.generators import MetricConfig, covering_constant, linear_ramp, metric_instance, random_instance
from hcforge.epras import (SLOT, EprasConfig, alpha_grid, beta_levels, candidate_count, canonicalize,
                           dissimilarity_epras, enumerate_sketch_shapes, eval_sketch_dissimilarity,
                           eval_sketch_revenue, hcc_pm, materialize, metric_shift, revenue_epras,
                           shape_internal, shape_slots, shift_instance)

pytestmark = pytest.mark.filterwarnings("ignore:instance fails the not-all-small test")


def two_cliques(a, b):
    n = a + b
    w = np.zeros((n, n))
    w[:a, :a] = 1
    w[a:, a:] = 1
    np.fill_diagonal(w, 0)
    return w


# -- shapes ------------------------------------------------------------------------

def brute_shapes(m):
    """Unlabelled rooted trees with m leaves, every internal node of arity >= 2,
    built from all set partitions of labelled leaves and deduplicated."""
    def labelled(items):
        if len(items) == 1:
            yield SLOT
            return
        for blocks in set_partitions(items):
            if len(blocks) < 2:
                continue
            for kids in itertools.product(*(list(labelled(b)) for b in blocks)):
                yield tuple(kids)

    return {canonicalize(t) for t in labelled(tuple(range(m)))}


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [(first,) + part[i]] + part[i + 1:]
        yield [(first,)] + part


def test_shape_examples():
    assert list(enumerate_sketch_shapes(1, 2)) == [SLOT, (SLOT, SLOT)]
    assert [s for s in enumerate_sketch_shapes(1, 2) if shape_slots(s) == 2] == [(SLOT, SLOT)]
    with pytest.raises(ValueError):
        list(enumerate_sketch_shapes(0, 3))


@pytest.mark.parametrize("m", range(1, 7))
def test_shape_counts_match_brute_force(m):
    ours = [s for s in enumerate_sketch_shapes(10, m) if shape_slots(s) == m]
    assert len(ours) == len(set(ours))
    assert set(ours) == brute_shapes(m)


def test_shape_caps_and_idempotence():
    shapes = list(enumerate_sketch_shapes(2, 4))
    assert all(shape_internal(s) <= 2 and shape_slots(s) <= 4 for s in shapes)
    assert all(canonicalize(s) == s for s in shapes)
    cumulative = [sum(1 for s in enumerate_sketch_shapes(10, b)) for b in range(1, 7)]
    assert cumulative == [1, 2, 4, 9, 21, 54]


# -- sketch estimates --------------------------------------------------------------

# canonical order puts the lone slot first: slots 1 and 2 form the cherry
CHERRY = canonicalize(((SLOT, SLOT), SLOT))


def cherry_beta(x):
    beta = np.zeros((3, 3))
    beta[1, 2] = beta[2, 1] = x
    return beta


def test_revenue_estimate_examples():
    assert eval_sketch_revenue(SLOT, [5], [[3]]) == 0
    assert eval_sketch_revenue((SLOT, SLOT), [3, 3], [[0, 2], [2, 0]]) == 0
    assert eval_sketch_revenue(CHERRY, [2, 2, 2], cherry_beta(1)) == 2


def test_dissimilarity_estimate_examples():
    assert eval_sketch_dissimilarity(SLOT, [5], [[3]]) == 0
    assert eval_sketch_dissimilarity((SLOT, SLOT), [3, 3], [[0, 1], [1, 0]]) == 6
    assert eval_sketch_dissimilarity(CHERRY, [2, 2, 2], cherry_beta(1)) == 4


def test_estimates_match_materialized_trees():
    # lone slot {4,5}, cherry slots {0,1} and {2,3}; one unit pair across the cherry
    assert CHERRY == (SLOT, (SLOT, SLOT))
    w = np.zeros((6, 6))
    w[1, 2] = w[2, 1] = 1
    buckets = [[4, 5], [0, 1], [2, 3]]
    rev_tree = materialize(CHERRY, buckets, "rev", 0.5)
    assert validate(rev_tree, 6) == []
    assert eval_revenue(Instance.similarity(w), rev_tree) == 2
    dis_tree = materialize(CHERRY, buckets, "dis", 0.5, np.random.default_rng(0))
    assert eval_dissimilarity(Instance.dissimilarity(w), dis_tree) == 4


def test_estimate_dimension_mismatch():
    with pytest.raises(HcError):
        eval_sketch_revenue(CHERRY, [2, 2], np.zeros((2, 2)))
    with pytest.raises(HcError):
        eval_sketch_dissimilarity(CHERRY, [2, 2, 2], np.zeros((2, 2)))


def test_materialize_rejects_objective():
    with pytest.raises(ValueError):
        materialize(SLOT, [[0]], "hcc", 0.5)


# -- grids and config ----------------------------------------------------------------

def test_config_derived_values():
    cfg = EprasConfig(0.3)
    assert cfg.k == 4 and cfg.eps_err == pytest.approx(0.027) and cfg.internal_cap == 80
    assert EprasConfig(0.5).k == 2
    for bad in (0.0, 1.0, -1):
        with pytest.raises(ValueError):
            EprasConfig(bad)
    with pytest.raises(ValueError):
        EprasConfig(0.5, delta=1.0)


def test_alpha_grid():
    n, eps = 8, 0.5
    step = eps * eps * n
    for b in (1, 2, 3):
        for a in alpha_grid(n, eps, b):
            assert a.sum() == pytest.approx(n)
            assert np.allclose(a[:-1] / step, np.round(a[:-1] / step))
            assert 0 < a[-1] <= 3 * eps * n + step + 1e-9
    assert [a.tolist() for a in alpha_grid(n, eps, 2)] == [[2, 6], [4, 4], [6, 2]]


def test_beta_levels():
    lv = beta_levels(10, 0.5)
    assert len(lv) == 19 and lv[1] == pytest.approx(0.125 * 100) and lv[-1] == pytest.approx(9 * 0.25 * 100)


def test_budget_guard():
    inst = random_instance(8, 1.0, False, np.random.default_rng(0))
    cfg = EprasConfig(0.5, budget=10)
    assert candidate_count(cfg, 8) > 10
    with pytest.raises(BudgetExceeded):
        revenue_epras(inst, cfg)


# -- revenue scheme ----------------------------------------------------------------

def test_revenue_unit_clique_beats_floor():
    n = 8
    inst = Instance.similarity(np.ones((n, n)) - np.eye(n))
    res = revenue_epras(inst, EprasConfig(0.5))
    assert validate(res.tree, n) == []
    assert res.value >= (n - 2) / 3 * n * (n - 1) / 2 - 1e-9
    assert res.value == pytest.approx(eval_revenue(inst, res.tree))


def test_revenue_two_cliques_is_optimal():
    inst = Instance.similarity(two_cliques(4, 4))
    res = revenue_epras(inst, EprasConfig(0.5))
    _, opt = brute_force_optimal(inst, "rev")
    assert res.value == pytest.approx(opt) and res.winner == "sketch"


def test_revenue_zero_instance():
    res = revenue_epras(Instance.similarity(np.zeros((5, 5))), EprasConfig(0.5))
    assert res.value == 0 and validate(res.tree, 5) == []


def test_revenue_warns_on_sparse_instance():
    inst = Instance.similarity(np.zeros((5, 5)))
    with pytest.warns(RuntimeWarning, match="not-all-small"):
        revenue_epras(inst, EprasConfig(0.5))


def test_revenue_per_candidate_accounting():
    rng = np.random.default_rng(1)
    for seed in range(3):
        inst = random_instance(7, 1.0, False, rng)
        res = revenue_epras(inst, EprasConfig(0.5), np.random.default_rng(seed), collect_checks=True)
        assert res.checks
        for c in res.checks:
            assert abs(c.raw_value - c.estimate) <= c.bound + 1e-9


# -- dissimilarity scheme ----------------------------------------------------------

def test_dissimilarity_unit_clique_beats_floor():
    n = 6
    inst = Instance.dissimilarity(np.ones((n, n)) - np.eye(n))
    res = dissimilarity_epras(inst, EprasConfig(0.5))
    assert validate(res.tree, n) == []
    assert res.value >= 2 * (n - 2) / 3 * n * (n - 1) / 2 - 1e-9


def test_dissimilarity_single_edge_optimal():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = 1
    inst = Instance.dissimilarity(w)
    res = dissimilarity_epras(inst, EprasConfig(0.5))
    assert res.value == 4 == brute_force_optimal(inst, "dis")[1]


def test_dissimilarity_zero_instance():
    assert dissimilarity_epras(Instance.dissimilarity(np.zeros((4, 4))), EprasConfig(0.5)).value == 0


def test_dissimilarity_per_candidate_accounting():
    """The estimate drops within-bucket weight, so the realized tree may only
    exceed it by that weight times at most n."""
    rng = np.random.default_rng(2)
    for seed in range(3):
        inst = random_instance(7, 1.0, False, rng)
        res = dissimilarity_epras(inst, EprasConfig(0.5), np.random.default_rng(seed),
                                  collect_checks=True)
        assert res.checks
        for c in res.checks:
            assert c.raw_value >= c.estimate - c.bound - 1e-9
            assert c.raw_value <= c.estimate + c.bound + inst.n * c.inside_weight + 1e-9


def test_dissimilarity_two_cliques_is_optimal():
    inst = Instance.dissimilarity(two_cliques(4, 4))
    res = dissimilarity_epras(inst, EprasConfig(0.5))
    assert res.value == pytest.approx(brute_force_optimal(inst, "dis")[1])


def test_baseline_fold_can_be_disabled():
    inst = random_instance(7, 1.0, False, np.random.default_rng(3))
    on = dissimilarity_epras(inst, EprasConfig(0.5), np.random.default_rng(0))
    off = dissimilarity_epras(inst, EprasConfig(0.5, include_baseline=False), np.random.default_rng(0))
    assert off.winner == "sketch" and off.value == pytest.approx(off.sketch_value)
    assert on.value == pytest.approx(max(off.value, on.baseline_value))


def test_schemes_are_deterministic():
    inst = random_instance(7, 1.0, False, np.random.default_rng(4))
    for f in (revenue_epras, dissimilarity_epras):
        a = f(inst, EprasConfig(0.5), np.random.default_rng(9))
        b = f(inst, EprasConfig(0.5), np.random.default_rng(9))
        assert a.value == b.value and a.tree.to_nested() == b.tree.to_nested()


def test_result_json_keys():
    inst = random_instance(6, 1.0, False, np.random.default_rng(5))
    d = revenue_epras(inst, EprasConfig(0.5)).as_dict()
    assert {"tree", "value", "baselineValue", "candidatesTried", "caseApplied"} <= set(d)


@pytest.mark.xfail(strict=True, reason="alpha/beta grids for different eps are not nested, "
                   "so a smaller eps can miss the partition a larger one found")
def test_value_monotone_in_eps():
    # revenue, n=7, seed 10: 25.361 at eps=0.9 but 25.353 at eps=0.7
    inst = random_instance(7, 1.0, False, np.random.default_rng(10))
    vals = [revenue_epras(inst, EprasConfig(e, include_baseline=False), np.random.default_rng(0)).value
            for e in (0.9, 0.7, 0.5)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


# -- HCC± and metric shift -----------------------------------------------------------

def test_hcc_pm_rejects_non_complementary():
    with pytest.raises(HcError):
        hcc_pm(random_instance(5, 1.0, False, np.random.default_rng(0)), EprasConfig(0.5))


def test_hcc_pm_degenerate_channels():
    n = 6
    ones = np.ones((n, n)) - np.eye(n)
    sim_only = Instance(ones, np.zeros((n, n)))
    res = hcc_pm(sim_only, EprasConfig(0.5))
    assert res.case_applied == "rev"
    assert res.value == pytest.approx(revenue_epras(Instance.similarity(ones), EprasConfig(0.5)).value)
    dis_only = Instance(np.zeros((n, n)), ones)
    res = hcc_pm(dis_only, EprasConfig(0.5))
    assert res.case_applied == "dis"
    assert res.value == pytest.approx(dissimilarity_epras(Instance.dissimilarity(ones), EprasConfig(0.5)).value)


@pytest.mark.parametrize("seed", range(3))
def test_hcc_pm_near_optimal_n7(seed):
    inst = random_instance(7, 1.0, True, np.random.default_rng(seed))
    res = hcc_pm(inst, EprasConfig(0.5), np.random.default_rng(seed))
    _, opt = brute_force_optimal(inst, "hcc")
    assert res.value == pytest.approx(eval_hcc(inst, res.tree).hcc)
    assert res.value >= 0.95 * opt


def test_shift_instance():
    inst = Instance.similarity(np.full((4, 4), 0.9) - 0.9 * np.eye(4))
    s = shift_instance(inst, 0.5)
    off = ~np.eye(4, dtype=bool)
    assert np.all(s.sim[off] == 1) and np.all(np.diag(s.sim) == 0)


def test_metric_shift_unit_clique_matches_revenue():
    n = 6
    inst = Instance.similarity(np.ones((n, n)) - np.eye(n))
    a = metric_shift(inst, 0.3, EprasConfig(0.5))
    b = revenue_epras(inst, EprasConfig(0.5))
    assert a.value == pytest.approx(b.value)
    assert a.config["rho"] == 1.0 and a.config["tau"] == 0.3


def test_metric_shift_zero_weights():
    res = metric_shift(Instance.similarity(np.zeros((6, 6))), 0.5, EprasConfig(0.5))
    assert res.value == 0


def test_metric_shift_line_points():
    cfg = MetricConfig(points=np.linspace(0, 1, 12), similarity=linear_ramp, normalize=False,
                       doubling_dim=1, lipschitz=1)
    inst = metric_instance(cfg)
    res = metric_shift(inst, 0.25, EprasConfig(0.5))
    _, opt = optimal_value_dp(inst, "rev")
    c = covering_constant(cfg)
    assert res.value >= (1 - 0.25 * c) * opt
    # the constant makes the bound vacuous here; the achieved ratio is far better
    assert res.value >= 0.95 * opt


def test_metric_shift_rejects_bad_shift():
    with pytest.raises(ValueError):
        metric_shift(Instance.similarity(np.zeros((3, 3))), 1.0, EprasConfig(0.5))

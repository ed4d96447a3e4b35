"""Worst-case algorithms for the mixed objective.

The greedy caterpillar peels off the highest-scoring point each round; the
MUB-seeded variant first splits the points into two halves keeping as much
similarity inside as possible.  Mixing the two with p = 1 - (1/3)/0.585
guarantees 0.4767 of the optimum; keeping the better tree does at least as well.
"""
import numpy as np

from hcforge.baselines import brute_force_optimal
from hcforge.core import eval_hcc
from hcforge.generators import hccpm_instance
from hcforge.hcc import DEFAULT_P, combined_hcc, greedy_caterpillar, greedy_floor, mub_then_greedy

rng = np.random.default_rng(4)
print(f"mixing probability p = {DEFAULT_P:.4f}")
print(" n   greedy    MUB+greedy  best     floor     optimum   ratio")
for n in (5, 6, 7, 8, 9):
    inst = hccpm_instance(n, rng)
    g = eval_hcc(inst, greedy_caterpillar(inst)).hcc
    m = eval_hcc(inst, mub_then_greedy(inst)).hcc
    b = eval_hcc(inst, combined_hcc(inst)).hcc
    _, opt = brute_force_optimal(inst, "hcc")
    print(f"{n:2d} {g:9.3f} {m:11.3f} {b:8.3f} {greedy_floor(inst):9.3f} {opt:9.3f}   {b / opt:.3f}")

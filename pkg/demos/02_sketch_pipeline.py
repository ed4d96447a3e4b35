"""From a binary tree to its constant-size sketch.

The pipeline cuts balanced edges until every piece is small, colours the
cut endpoints and their branching ancestors, contracts everything else into
bags, and finally hangs each bag as a star (revenue) or a comb
(dissimilarity).  Pair LCAs grow by at most 6 eps n along the way.
"""
import numpy as np

from hcforge.baselines import random_binary_tree
from hcforge.core import eval_dissimilarity, eval_revenue, lca_size_table
from hcforge.generators import random_instance
from hcforge.sketch import (build_edge_set_F, components, contract_to_K, find_balanced_edge,
                            sketch_stats, split_sizes, to_dis_tree, to_rev_tree)

rng = np.random.default_rng(1)
n, eps = 120, 1 / 12
tree = random_binary_tree(n, rng)

edge = find_balanced_edge(tree)
print("balanced edge splits", split_sizes(tree, edge), f"(each side >= {n / 3:.0f})")

F = build_edge_set_F(tree, eps)
sizes = sorted(len(c) for c in components(tree, F))
print(f"|F| = {len(F)}; component sizes {sizes[0]}..{sizes[-1]} "
      f"(window [{eps * n:.0f}, {3 * eps * n:.0f}])")

K = contract_to_K(tree, eps, F)
print("contracted tree:", len(K.parent), "nodes,", len(K.bags()), "bags, check:", K.check() or "ok")

star = to_rev_tree(K)
st = sketch_stats(star, eps)
off = ~np.eye(n, dtype=bool)
growth = (lca_size_table(star).sizes - lca_size_table(tree).sizes)[off].max()
print(f"star sketch: {st.internal_nodes} internal nodes, widest node {st.max_children}; "
      f"max LCA growth {growth} <= {6 * eps * n:.0f}")

inst = random_instance(n, 0.5, False, rng)
print(f"revenue      original {eval_revenue(inst, tree):10.1f}   sketch {eval_revenue(inst, star):10.1f}")

# The comb contracts at eps^2 granularity and splits each bag into ceil(1/eps) teeth.
eps_d = 1 / 3.5
Kd = contract_to_K(tree, eps_d ** 2)
vals = [eval_dissimilarity(inst, to_dis_tree(Kd, eps_d, np.random.default_rng(s))) for s in range(20)]
print(f"dissimilarity original {eval_dissimilarity(inst, tree):10.1f}   "
      f"comb mean {np.mean(vals):10.1f}, best of 20 {max(vals):10.1f}")

"""Constant-sketch reductions of binary HC trees.

Pipeline: balanced edge -> edge set F -> blue/green colouring -> contraction
K(T) -> either star conversion (revenue) or comb conversion (dissimilarity).
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import HcError, HcTree, NodeKind, TreeError

Edge = tuple[int, int]


class Color(enum.Enum):
    BLUE = "blue"
    GREEN = "green"
    CONTRACTED = "contracted"


# ---------------------------------------------------------------------------
# Balanced edges and the edge set F
# ---------------------------------------------------------------------------

def _leaf_counts(tree: HcTree, root: int, cut: frozenset[int]) -> dict[int, int]:
    """Data-point counts below every node of the component rooted at ``root``
    whose downward edges into the nodes of ``cut`` have been removed."""
    counts: dict[int, int] = {}
    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(c for c in tree.children[v] if c not in cut)
    for v in reversed(order):
        if tree.kind[v] is NodeKind.LEAF:
            counts[v] = 1
        else:
            counts[v] = sum(counts[c] for c in tree.children[v] if c not in cut)
    return counts


def _balanced_cut(tree: HcTree, root: int, cut: frozenset[int]) -> Edge:
    counts = _leaf_counts(tree, root, cut)
    m = counts[root]
    acc = 0
    v = root
    while True:
        kids = [c for c in tree.children[v] if c not in cut]
        if not kids:
            raise TreeError("balanced-edge walk reached a leaf; component too small")
        if len(kids) == 1:
            v = kids[0]
            continue
        if len(kids) != 2:
            raise TreeError(f"node {v} has {len(kids)} children; tree must be binary")
        a, b = kids
        # heavier child is A; on equal counts descend into the smaller index
        if counts[b] > counts[a] or (counts[b] == counts[a] and b < a):
            a, b = b, a
        acc += counts[b]
        if 3 * acc >= m:
            return (v, a)
        v = a


def find_balanced_edge(tree: HcTree) -> Edge:
    """Edge (parent, child) whose removal leaves two parts of >= n/3 leaves each.

    Walks down from the root, always into the heavier child, accumulating
    the lighter siblings' leaf counts until they reach n/3, then cuts the
    edge to the heavier child at that step.
    """
    n = tree.n_leaves
    if not tree.is_binary():
        raise TreeError("balanced edge needs a binary tree")
    if n < 3:
        raise TreeError("balanced edge needs at least 3 leaves")
    return _balanced_cut(tree, tree.root, frozenset())


def split_sizes(tree: HcTree, edge: Edge) -> tuple[int, int]:
    below = len(tree.leaves(edge[1]))
    return below, tree.n_leaves - below


def check_eps(eps: float) -> None:
    if not 0 < eps < 1.0 / 3.0:
        raise HcError(f"eps must lie in (0, 1/3), got {eps}")


def build_edge_set_F(tree: HcTree, eps: float) -> list[Edge]:
    """Cut balanced edges recursively until every part has < 3*eps*n leaves.

    Each resulting component of T - F holds between eps*n and 3*eps*n data
    points (a single point cannot be split further).
    """
    check_eps(eps)
    if not tree.is_binary():
        raise TreeError("edge set F needs a binary tree")
    n = tree.n_leaves
    limit = 3.0 * eps * n
    F: list[Edge] = []
    cut: set[int] = set()
    work = [tree.root]
    while work:
        root = work.pop()
        frozen = frozenset(cut)
        m = _leaf_counts(tree, root, frozen)[root]
        if m < limit or m <= 1:
            continue
        p, c = _balanced_cut(tree, root, frozen)
        F.append((p, c))
        cut.add(c)
        work.append(c)
        work.append(root)
    return F


def components(tree: HcTree, F: Iterable[Edge]) -> list[list[int]]:
    """Data-point ids of every component of T - F."""
    cut = frozenset(c for _, c in F)
    out = []
    for r in [tree.root] + sorted(cut):
        pts = []
        stack = [r]
        while stack:
            v = stack.pop()
            if tree.kind[v] is NodeKind.LEAF:
                pts.append(tree.label[v])
            stack.extend(c for c in tree.children[v] if c not in cut)
        out.append(sorted(pts))
    return out


def degree_census(edges: Iterable[tuple[int, int]]) -> tuple[int, int]:
    """(number of vertices of degree >= 3, number of leaves) of an undirected tree."""
    deg: Counter = Counter()
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    return (sum(1 for d in deg.values() if d >= 3),
            sum(1 for d in deg.values() if d == 1))


# ---------------------------------------------------------------------------
# Colouring and contraction
# ---------------------------------------------------------------------------

def color_nodes(tree: HcTree, F: Iterable[Edge]) -> tuple[set[int], set[int]]:
    """Blue: endpoints of F and the root.  Green: non-blue nodes whose two
    child subtrees each contain a blue node."""
    F = list(F)
    edge_set = set(tree.edges())
    for e in F:
        if tuple(e) not in edge_set:
            raise TreeError(f"{e} is not an edge of the tree")
    blue = {tree.root}
    for p, c in F:
        blue.add(p)
        blue.add(c)
    has_blue: dict[int, bool] = {}
    green: set[int] = set()
    for v in tree.postorder():
        kids = tree.children[v]
        if v not in blue and len(kids) == 2 and has_blue[kids[0]] and has_blue[kids[1]]:
            green.add(v)
        has_blue[v] = v in blue or any(has_blue[c] for c in kids)
    return blue, green


@dataclass
class ContractedTree:
    """K(T): surviving blue/green nodes plus contracted nodes carrying bags."""

    parent: list[int] = field(default_factory=list)
    children: list[list[int]] = field(default_factory=list)
    color: list[Color] = field(default_factory=list)
    bag: list[list[int]] = field(default_factory=list)
    label: list[int] = field(default_factory=list)
    provenance: list[list[int]] = field(default_factory=list)
    root: int = -1
    n: int = 0

    def add(self, color: Color, parent: int, provenance, bag=(), label=-1) -> int:
        idx = len(self.parent)
        self.parent.append(parent)
        self.children.append([])
        self.color.append(color)
        self.bag.append(sorted(bag))
        self.label.append(label)
        self.provenance.append(sorted(provenance))
        if parent >= 0:
            self.children[parent].append(idx)
        return idx

    def contracted(self) -> list[int]:
        return [v for v, c in enumerate(self.color) if c is Color.CONTRACTED]

    def bags(self) -> list[list[int]]:
        return [self.bag[v] for v in self.contracted()]

    def check(self) -> list[str]:
        problems = []
        if self.color[self.root] is not Color.BLUE:
            problems.append("root is not blue")
        seen: list[int] = []
        for v in range(len(self.parent)):
            seen.extend(self.bag[v])
            if self.label[v] >= 0:
                seen.append(self.label[v])
            if self.color[v] is Color.CONTRACTED:
                p = self.parent[v]
                if p >= 0 and self.color[p] is Color.CONTRACTED:
                    problems.append(f"contracted nodes {p} and {v} are adjacent")
        if sorted(seen) != list(range(self.n)):
            problems.append("bags and surviving leaves do not partition the data points")
        return problems


def contract_to_K(tree: HcTree, eps: float, F: list[Edge] | None = None) -> ContractedTree:
    """Contract every component of T - (B u G) into one node holding its data points."""
    if not tree.is_binary():
        raise TreeError("contraction needs a binary tree")
    F = build_edge_set_F(tree, eps) if F is None else F
    blue, green = color_nodes(tree, F)
    colored = blue | green
    K = ContractedTree(n=tree.n_leaves)
    knode: dict[int, int] = {}

    def emit_colored(v: int, kparent: int) -> int:
        col = Color.BLUE if v in blue else Color.GREEN
        lab = tree.label[v] if tree.kind[v] is NodeKind.LEAF else -1
        k = K.add(col, kparent, [v], label=lab)
        knode[v] = k
        return k

    def emit_component(top: int, kparent: int) -> tuple[int, list[int]]:
        members, exits = [], []
        stack = [top]
        while stack:
            v = stack.pop()
            members.append(v)
            for c in tree.children[v]:
                (exits if c in colored else stack).append(c)
        bag = [tree.label[v] for v in members if tree.kind[v] is NodeKind.LEAF]
        k = K.add(Color.CONTRACTED, kparent, members, bag=bag)
        for v in members:
            knode[v] = k
        return k, exits

    K.root = emit_colored(tree.root, -1)
    work = [(tree.root, K.root)]
    while work:
        v, k = work.pop()
        if K.color[k] is Color.CONTRACTED:
            continue
        for c in tree.children[v]:
            if c in colored:
                work.append((c, emit_colored(c, k)))
            else:
                kc, exits = emit_component(c, k)
                for x in exits:
                    work.append((x, emit_colored(x, kc)))
    # emit_colored appends exits in stack order; keep children ordered by
    # their first original node for reproducible output
    for kids in K.children:
        kids.sort(key=lambda u: K.provenance[u][0])
    return K


# ---------------------------------------------------------------------------
# Star and comb conversions
# ---------------------------------------------------------------------------

def _k_to_hctree(K: ContractedTree, attach) -> HcTree:
    """Copy K into an HcTree; ``attach(out, knode, hnode)`` adds bag structure
    for contracted nodes and returns the node below which K's children go."""
    out = HcTree()

    def build(k: int, parent: int) -> None:
        if K.label[k] >= 0 and not K.children[k]:
            out.add_node(NodeKind.LEAF, K.label[k], parent)
            return
        if K.color[k] is Color.CONTRACTED:
            if parent < 0:
                raise TreeError("contracted node without a parent")
            below = attach(out, k, parent)
        else:
            below = out.add_node(NodeKind.INTERNAL, -1, parent)
            if parent < 0:
                out.root = below
        for c in K.children[k]:
            build(c, below)

    build(K.root, -1)
    return out.compact()


def to_rev_tree(K: ContractedTree) -> HcTree:
    """Each contracted node keeps an auxiliary star child holding its bag."""

    def attach(out: HcTree, k: int, parent: int) -> int:
        node = out.add_node(NodeKind.INTERNAL, -1, parent)
        if K.bag[k]:
            aux = out.add_node(NodeKind.AUX, -1, node)
            for x in K.bag[k]:
                out.add_node(NodeKind.LEAF, x, aux)
        return node

    return _k_to_hctree(K, attach)


def split_bag(bag, q: int, rng: np.random.Generator) -> list[list[int]]:
    """Uniform random split into min(q, |bag|) parts whose sizes differ by <= 1."""
    bag = list(bag)
    q = min(q, len(bag))
    if q == 0:
        return []
    perm = [bag[i] for i in rng.permutation(len(bag))]
    return [sorted(perm[i::q]) for i in range(q)]


def comb_parts(eps: float) -> int:
    return int(math.ceil(1.0 / eps - 1e-12))


def to_dis_tree(K: ContractedTree, eps: float, rng: np.random.Generator) -> HcTree:
    """Replace each bag by a comb: a chain of new nodes spliced above the
    contracted node, each carrying one random part of the bag as a star."""
    q = comb_parts(eps)

    def attach(out: HcTree, k: int, parent: int) -> int:
        cur = parent
        for part in split_bag(K.bag[k], q, rng):
            link = out.add_node(NodeKind.INTERNAL, -1, cur)
            aux = out.add_node(NodeKind.AUX, -1, link)
            for x in part:
                out.add_node(NodeKind.LEAF, x, aux)
            cur = link
        return out.add_node(NodeKind.INTERNAL, -1, cur)

    return _k_to_hctree(K, attach)


def rev_sketch(tree: HcTree, eps: float) -> HcTree:
    """T -> K(T) -> star conversion."""
    return to_rev_tree(contract_to_K(tree, eps))


def dis_sketch(tree: HcTree, eps: float, rng: np.random.Generator,
               granularity: float | None = None) -> HcTree:
    """T -> K(T) at granularity eps^2 (by default) -> comb with ceil(1/eps) teeth."""
    g = eps * eps if granularity is None else granularity
    return to_dis_tree(contract_to_K(tree, g), eps, rng)


@dataclass(frozen=True)
class SketchStats:
    internal_nodes: int
    max_children: int
    epsilon: float | None = None


def sketch_stats(tree: HcTree, eps: float | None = None) -> SketchStats:
    internal = tree.internal_nodes()
    return SketchStats(len(internal),
                       max((len(tree.children[v]) for v in internal), default=0),
                       eps)

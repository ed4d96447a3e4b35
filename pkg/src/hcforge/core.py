"""Instances, HC trees and the Revenue / Dissimilarity / HCC objectives."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np


class HcError(ValueError):
    """Base class for domain errors (bad instances, bad trees, guards)."""


class InstanceError(HcError):
    pass


class TreeError(HcError):
    pass


class BudgetExceeded(HcError):
    pass


# ---------------------------------------------------------------------------
# Instance
# ---------------------------------------------------------------------------

def _check_weights(name: str, w: np.ndarray, n: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n, n):
        raise InstanceError(f"{name} matrix must be {n}x{n}, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InstanceError(f"{name} weights must be finite")
    if np.any(np.diag(w) != 0):
        raise InstanceError(f"{name} diagonal must be zero")
    if not np.array_equal(w, w.T):
        raise InstanceError(f"{name} matrix must be symmetric")
    if w.size and (w.min() < 0 or w.max() > 1):
        raise InstanceError(f"{name} weights must lie in [0, 1]")
    w = w.copy()
    w.setflags(write=False)
    return w


@dataclass(frozen=True, eq=False)
class Instance:
    """n data points with similarity and dissimilarity weights in [0, 1].

    Both matrices are symmetric with a zero diagonal.  Arrays are stored
    read-only so an instance can be shared freely.
    """

    sim: np.ndarray
    dis: np.ndarray

    def __post_init__(self):
        sim = np.asarray(self.sim, dtype=np.float64)
        if sim.ndim != 2 or sim.shape[0] != sim.shape[1]:
            raise InstanceError("sim must be a square matrix")
        n = sim.shape[0]
        if n == 0:
            raise InstanceError("instance must have at least one data point")
        object.__setattr__(self, "sim", _check_weights("sim", sim, n))
        object.__setattr__(self, "dis", _check_weights("dis", self.dis, n))

    @property
    def n(self) -> int:
        return self.sim.shape[0]

    @classmethod
    def similarity(cls, w) -> "Instance":
        w = np.asarray(w, dtype=np.float64)
        return cls(sim=w, dis=np.zeros_like(w))

    @classmethod
    def dissimilarity(cls, w) -> "Instance":
        w = np.asarray(w, dtype=np.float64)
        return cls(sim=np.zeros_like(w), dis=w)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]]) -> "Instance":
        """Build from ``(i, j, w_s, w_d)`` rows; omitted pairs are (0, 0)."""
        if n <= 0:
            raise InstanceError("n must be positive")
        sim = np.zeros((n, n))
        dis = np.zeros((n, n))
        for row in edges:
            if len(row) != 4:
                raise InstanceError(f"edge row must be [i, j, w_s, w_d], got {row!r}")
            i, j, ws, wd = row
            if int(i) != i or int(j) != j:
                raise InstanceError(f"edge indices must be integers: {row!r}")
            i, j = int(i), int(j)
            if i == j:
                raise InstanceError(f"self-loop edge ({i}, {j})")
            if not (0 <= i < n and 0 <= j < n):
                raise InstanceError(f"edge ({i}, {j}) out of range for n={n}")
            for w in (ws, wd):
                if not 0.0 <= float(w) <= 1.0:
                    raise InstanceError(f"weight {w} of edge ({i}, {j}) outside [0, 1]")
            sim[i, j] = sim[j, i] = float(ws)
            dis[i, j] = dis[j, i] = float(wd)
        return cls(sim=sim, dis=dis)

    def edges(self) -> list[list[float]]:
        iu, ju = np.triu_indices(self.n, 1)
        keep = (self.sim[iu, ju] != 0) | (self.dis[iu, ju] != 0)
        return [[int(i), int(j), float(self.sim[i, j]), float(self.dis[i, j])]
                for i, j in zip(iu[keep], ju[keep])]

    def channel(self, name: str) -> np.ndarray:
        if name == "sim":
            return self.sim
        if name == "dis":
            return self.dis
        raise ValueError(f"unknown weight channel {name!r}")

    def total(self, channel: str) -> float:
        return float(self.channel(channel)[np.triu_indices(self.n, 1)].sum())

    @property
    def is_unweighted(self) -> bool:
        """True when every weight is 0 or 1 (objectives are then integers)."""
        return bool(np.all((self.sim == 0) | (self.sim == 1))
                    and np.all((self.dis == 0) | (self.dis == 1)))

    def restrict(self, points: Sequence[int]) -> "Instance":
        idx = np.asarray(points, dtype=np.intp)
        return Instance(sim=self.sim[np.ix_(idx, idx)], dis=self.dis[np.ix_(idx, idx)])

    def only(self, channel: str) -> "Instance":
        if channel == "sim":
            return Instance.similarity(self.sim)
        if channel == "dis":
            return Instance.dissimilarity(self.dis)
        raise ValueError(f"unknown weight channel {channel!r}")

    def is_complementary(self, atol: float = 1e-9) -> bool:
        off = ~np.eye(self.n, dtype=bool)
        return bool(np.allclose((self.sim + self.dis)[off], 1.0, atol=atol, rtol=0))


# ---------------------------------------------------------------------------
# HC trees
# ---------------------------------------------------------------------------

class NodeKind(enum.Enum):
    INTERNAL = "internal"
    LEAF = "leaf"
    AUX = "aux"


@dataclass(frozen=True)
class Star:
    """Marker used in nested-tuple construction for an auxiliary star node."""

    members: tuple

    def __init__(self, members):
        object.__setattr__(self, "members", tuple(members))


@dataclass
class HcTree:
    """Arena-backed rooted tree; leaves carry data-point ids.

    Nodes are integer indices.  ``children`` keeps a fixed order which only
    matters for serialization and for deterministic binarization.
    """

    parent: list[int] = field(default_factory=list)
    children: list[list[int]] = field(default_factory=list)
    kind: list[NodeKind] = field(default_factory=list)
    label: list[int] = field(default_factory=list)
    root: int = -1

    # -- construction -----------------------------------------------------
    def add_node(self, kind: NodeKind, label: int = -1, parent: int = -1) -> int:
        idx = len(self.parent)
        self.parent.append(parent)
        self.children.append([])
        self.kind.append(kind)
        self.label.append(label)
        if parent >= 0:
            self.children[parent].append(idx)
        return idx

    @classmethod
    def from_nested(cls, nested) -> "HcTree":
        """Build from nested tuples of ints, e.g. ``((0, 1), (2, Star((3, 4, 5))))``."""
        tree = cls()

        def build(obj, parent):
            if isinstance(obj, Star):
                node = tree.add_node(NodeKind.AUX, parent=parent)
                for m in obj.members:
                    build(m, node)
                return node
            if isinstance(obj, (tuple, list)):
                node = tree.add_node(NodeKind.INTERNAL, parent=parent)
                for c in obj:
                    build(c, node)
                return node
            if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
                return tree.add_node(NodeKind.LEAF, label=int(obj), parent=parent)
            raise TreeError(f"cannot build a tree node from {obj!r}")

        tree.root = build(nested, -1)
        return tree

    def to_nested(self, node: int | None = None):
        node = self.root if node is None else node
        if self.kind[node] is NodeKind.LEAF:
            return self.label[node]
        kids = tuple(self.to_nested(c) for c in self.children[node])
        return Star(kids) if self.kind[node] is NodeKind.AUX else kids

    def copy(self) -> "HcTree":
        return HcTree(list(self.parent), [list(c) for c in self.children],
                      list(self.kind), list(self.label), self.root)

    # -- queries ----------------------------------------------------------
    def __len__(self) -> int:
        return len(self.parent)

    def is_leaf(self, v: int) -> bool:
        return self.kind[v] is NodeKind.LEAF

    def preorder(self, node: int | None = None) -> Iterator[int]:
        stack = [self.root if node is None else node]
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(self.children[v]))

    def postorder(self, node: int | None = None) -> list[int]:
        out = list(self.preorder(node))
        out.reverse()
        return out

    def leaves(self, node: int | None = None) -> list[int]:
        """Data-point ids under ``node`` in left-to-right order."""
        return [self.label[v] for v in self.preorder(node) if self.kind[v] is NodeKind.LEAF]

    @property
    def n_leaves(self) -> int:
        return sum(1 for k in self.kind if k is NodeKind.LEAF)

    def leaf_node(self) -> dict[int, int]:
        return {self.label[v]: v for v in range(len(self)) if self.kind[v] is NodeKind.LEAF}

    def subtree_sizes(self) -> np.ndarray:
        size = np.zeros(len(self), dtype=np.int64)
        for v in self.postorder():
            size[v] = 1 if self.kind[v] is NodeKind.LEAF else sum(size[c] for c in self.children[v])
        return size

    def internal_nodes(self) -> list[int]:
        return [v for v in self.preorder() if self.kind[v] is not NodeKind.LEAF]

    def is_binary(self) -> bool:
        return all(len(self.children[v]) == 2 for v in self.internal_nodes())

    def edges(self) -> list[tuple[int, int]]:
        """(parent, child) pairs of the reachable tree."""
        return [(self.parent[v], v) for v in self.preorder() if v != self.root]

    def depth(self) -> dict[int, int]:
        d = {self.root: 0}
        for v in self.preorder():
            for c in self.children[v]:
                d[c] = d[v] + 1
        return d

    # -- normalisation ------------------------------------------------------
    def compact(self) -> "HcTree":
        """Return an equivalent tree with unreachable nodes dropped, unary
        nodes spliced out and leafless internal nodes removed."""
        has_leaf: dict[int, bool] = {}
        for v in self.postorder():
            has_leaf[v] = (self.kind[v] is NodeKind.LEAF
                           or any(has_leaf[c] for c in self.children[v]))
        if not has_leaf[self.root]:
            raise TreeError("tree has no leaves")
        out = HcTree()
        stack = [(self.root, -1)]
        while stack:
            v, parent = stack.pop()
            if self.kind[v] is NodeKind.LEAF:
                node = out.add_node(NodeKind.LEAF, self.label[v], parent)
            else:
                kids = [c for c in self.children[v] if has_leaf[c]]
                if len(kids) == 1:
                    stack.append((kids[0], parent))
                    continue
                node = out.add_node(self.kind[v], -1, parent)
                stack.extend((c, node) for c in reversed(kids))
            if parent < 0:
                out.root = node
        return out


def caterpillar(order: Sequence[int]) -> HcTree:
    """Binary caterpillar (u1, (u2, (... (u_{m-1}, u_m))))."""
    order = list(order)
    if not order:
        raise TreeError("caterpillar needs at least one leaf")
    nested = order[-1]
    for u in reversed(order[:-1]):
        nested = (u, nested)
    return HcTree.from_nested(nested)


def star_tree(points: Sequence[int]) -> HcTree:
    pts = list(points)
    return HcTree.from_nested(pts[0] if len(pts) == 1 else tuple(pts))


def graft(children: Sequence[HcTree], kind: NodeKind = NodeKind.INTERNAL) -> HcTree:
    """New root whose children are copies of the given trees."""
    out = HcTree()
    out.root = out.add_node(kind)
    for t in children:
        _copy_into(out, t, t.root, out.root)
    return out


def _copy_into(dst: HcTree, src: HcTree, v: int, parent: int) -> int:
    stack = [(v, parent)]
    first = -1
    while stack:
        u, p = stack.pop()
        node = dst.add_node(src.kind[u], src.label[u], p)
        if first < 0:
            first = node
        # push in reverse so children keep their order
        for c in reversed(src.children[u]):
            stack.append((c, node))
    return first


def relabel(tree: HcTree, mapping: Sequence[int]) -> HcTree:
    """Replace every leaf label ``l`` with ``mapping[l]``."""
    out = tree.copy()
    for v in range(len(out)):
        if out.kind[v] is NodeKind.LEAF:
            out.label[v] = int(mapping[out.label[v]])
    return out


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(tree: HcTree, n: int) -> list[str]:
    """List every violated HC-tree invariant; empty means the tree is evaluable."""
    problems: list[str] = []
    m = len(tree.parent)
    if not (len(tree.children) == len(tree.kind) == len(tree.label) == m):
        return ["node arrays have inconsistent lengths"]
    if not 0 <= tree.root < m:
        return [f"root {tree.root} is not a node"]
    if tree.parent[tree.root] != -1:
        problems.append("root has a parent")
    seen: set[int] = set()
    stack = [tree.root]
    cyclic = False
    while stack:
        v = stack.pop()
        if v in seen:
            cyclic = True
            continue
        seen.add(v)
        for c in tree.children[v]:
            if not 0 <= c < m:
                problems.append(f"node {v} has out-of-range child {c}")
                continue
            if tree.parent[c] != v:
                problems.append(f"child {c} of node {v} records parent {tree.parent[c]}")
            stack.append(c)
    if cyclic:
        problems.append("tree contains a cycle or a shared child")
    labels = []
    for v in seen:
        kind, kids = tree.kind[v], tree.children[v]
        if kind is NodeKind.LEAF:
            if kids:
                problems.append(f"leaf node {v} has children")
            labels.append(tree.label[v])
        else:
            if len(kids) < 2:
                problems.append(f"{kind.value} node {v} has {len(kids)} child(ren); need at least 2")
            if kind is NodeKind.AUX and any(
                    0 <= c < m and tree.kind[c] is not NodeKind.LEAF for c in kids):
                problems.append(f"auxiliary node {v} has a non-leaf child")
    counts: dict[int, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    dup = sorted(lab for lab, c in counts.items() if c > 1)
    if dup:
        problems.append(f"leaf ids {dup} appear more than once")
    missing = sorted(set(range(n)) - set(counts))
    extra = sorted(lab for lab in counts if not 0 <= lab < n)
    if missing:
        problems.append(f"data points {missing} have no leaf")
    if extra:
        problems.append(f"leaf ids {extra} are outside 0..{n - 1}")
    return problems


def _require_evaluable(tree: HcTree, n: int) -> None:
    problems = validate(tree, n)
    if problems:
        raise TreeError("; ".join(problems))


# ---------------------------------------------------------------------------
# LCA sizes and objectives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LcaSizeTable:
    """``sizes[i, j] = |T_ij|``; ``child_i[i, j]`` / ``child_j[i, j]`` are the
    leaf counts of the LCA's children containing i and j respectively."""

    sizes: np.ndarray
    child_i: np.ndarray
    child_j: np.ndarray


def lca_size_table(tree: HcTree, n: int | None = None) -> LcaSizeTable:
    n = tree.n_leaves if n is None else n
    _require_evaluable(tree, n)
    sizes = np.zeros((n, n), dtype=np.int64)
    child_i = np.zeros((n, n), dtype=np.int64)
    child_j = np.zeros((n, n), dtype=np.int64)
    under: dict[int, np.ndarray] = {}
    for v in tree.postorder():
        if tree.kind[v] is NodeKind.LEAF:
            under[v] = np.array([tree.label[v]], dtype=np.intp)
            continue
        parts = [under.pop(c) for c in tree.children[v]]
        total = sum(len(p) for p in parts)
        for a in range(len(parts)):
            for b in range(a + 1, len(parts)):
                pa, pb = parts[a], parts[b]
                ix = np.ix_(pa, pb)
                sizes[ix] = total
                child_i[ix] = len(pa)
                child_j[ix] = len(pb)
                ixt = np.ix_(pb, pa)
                sizes[ixt] = total
                child_i[ixt] = len(pb)
                child_j[ixt] = len(pa)
        under[v] = np.concatenate(parts)
    for a in (sizes, child_i, child_j):
        a.setflags(write=False)
    return LcaSizeTable(sizes, child_i, child_j)


def _upper(a: np.ndarray) -> np.ndarray:
    return a[np.triu_indices(a.shape[0], 1)]


def _total(values: np.ndarray, exact: bool) -> float:
    if exact:
        return float(np.rint(values).astype(np.int64).sum())
    return float(values.sum())


def _check_sizes(inst: Instance, tree: HcTree) -> None:
    if tree.n_leaves != inst.n:
        raise TreeError(f"tree has {tree.n_leaves} leaves but the instance has {inst.n} points")


def revenue_terms(inst: Instance, table: LcaSizeTable) -> np.ndarray:
    return _upper(inst.sim) * (inst.n - _upper(table.sizes))


def dissimilarity_terms(inst: Instance, table: LcaSizeTable) -> np.ndarray:
    return _upper(inst.dis) * (_upper(table.child_i) + _upper(table.child_j))


def eval_revenue(inst: Instance, tree: HcTree) -> float:
    """Sum over pairs of ``w^s_ij * (n - |T_ij|)``."""
    _check_sizes(inst, tree)
    table = lca_size_table(tree, inst.n)
    return _total(revenue_terms(inst, table), inst.is_unweighted)


def eval_dissimilarity(inst: Instance, tree: HcTree) -> float:
    """Sum over pairs of ``w^d_ij * (|T_vi| + |T_vj|)``.

    ``v_i`` and ``v_j`` are the children of LCA(i, j) holding i and j, so
    on binary trees this is the usual ``w^d_ij * |T_ij|``.
    """
    _check_sizes(inst, tree)
    table = lca_size_table(tree, inst.n)
    return _total(dissimilarity_terms(inst, table), inst.is_unweighted)


@dataclass(frozen=True)
class ObjectiveReport:
    rev: float
    dis: float
    hcc: float
    total_sim_weight: float
    total_dis_weight: float

    def as_dict(self) -> dict:
        return {"rev": self.rev, "dis": self.dis, "hcc": self.hcc,
                "totalSimWeight": self.total_sim_weight,
                "totalDisWeight": self.total_dis_weight}


def eval_hcc(inst: Instance, tree: HcTree) -> ObjectiveReport:
    _check_sizes(inst, tree)
    table = lca_size_table(tree, inst.n)
    exact = inst.is_unweighted
    rev = _total(revenue_terms(inst, table), exact)
    dis = _total(dissimilarity_terms(inst, table), exact)
    return ObjectiveReport(rev=rev, dis=dis, hcc=rev + dis,
                           total_sim_weight=inst.total("sim"),
                           total_dis_weight=inst.total("dis"))


def evaluate(inst: Instance, tree: HcTree, objective: str) -> float:
    if objective == "rev":
        return eval_revenue(inst, tree)
    if objective == "dis":
        return eval_dissimilarity(inst, tree)
    if objective in ("hcc", "hccpm"):
        return eval_hcc(inst, tree).hcc
    raise ValueError(f"unknown objective {objective!r}")


# ---------------------------------------------------------------------------
# Binarization and density
# ---------------------------------------------------------------------------

def binarize(tree: HcTree, rng: np.random.Generator | None = None) -> HcTree:
    """Expand every multiway node into a left-leaning binary chain.

    A node with children c1..cm becomes ((..((c1, c2), c3)..), cm).  Auxiliary
    nodes turn into ordinary internal nodes.  ``rng`` is accepted for interface
    symmetry and unused: the expansion is fixed by child order.
    """
    del rng
    out = HcTree()

    def build(v: int, parent: int) -> int:
        if tree.kind[v] is NodeKind.LEAF:
            return out.add_node(NodeKind.LEAF, tree.label[v], parent)
        kids = tree.children[v]
        if len(kids) == 1:
            return build(kids[0], parent)
        # chain nodes from the top down: the top one holds c_m on the right
        top = out.add_node(NodeKind.INTERNAL, -1, parent)
        cur = top
        for k in range(len(kids) - 1, 1, -1):
            nxt = out.add_node(NodeKind.INTERNAL, -1, cur)
            # right child appended after the chain node keeps (chain, c_k) order
            build(kids[k], cur)
            cur = nxt
        build(kids[0], cur)
        build(kids[1], cur)
        return top

    out.root = build(tree.root, -1)
    return out


def not_all_small(inst: Instance, rho: float, tau: float, channel: str = "sim") -> bool:
    """True iff at most a (1 - rho) fraction of pair weights fall below tau."""
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    if not 0 < tau <= 1:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    w = _upper(inst.channel(channel))
    pairs = len(w)
    return bool(np.count_nonzero(w < tau) <= (1 - rho) * pairs + 1e-9)

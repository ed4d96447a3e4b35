"""Instance JSON files and the parenthesized tree text format.

Tree text is Newick-like without branch lengths: ``((0,1),(2,(3,4)))``.
An auxiliary star node is written with a ``*`` prefix, e.g. ``(*(0,1,2),3)``.
"""
from __future__ import annotations

import json
from pathlib import Path

from .core import HcTree, Instance, InstanceError, NodeKind, TreeError

SCHEMA_VERSION = 1


def instance_to_json(inst: Instance) -> dict:
    return {"n": inst.n, "edges": inst.edges()}


def instance_from_json(data: dict) -> Instance:
    if not isinstance(data, dict) or "n" not in data:
        raise InstanceError("instance JSON needs an integer field 'n'")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n <= 0:
        raise InstanceError(f"'n' must be a positive integer, got {n!r}")
    edges = data.get("edges", [])
    if not isinstance(edges, list):
        raise InstanceError("'edges' must be a list of [i, j, w_s, w_d] rows")
    return Instance.from_edges(n, edges)


def read_instance(path) -> Instance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}: not valid JSON ({exc})") from None
    return instance_from_json(data)


def write_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(inst)) + "\n")


def dumps_tree(tree: HcTree, node: int | None = None) -> str:
    node = tree.root if node is None else node
    parts: list[str] = []

    def emit(v: int) -> None:
        if tree.kind[v] is NodeKind.LEAF:
            parts.append(str(tree.label[v]))
            return
        if tree.kind[v] is NodeKind.AUX:
            parts.append("*")
        parts.append("(")
        for k, c in enumerate(tree.children[v]):
            if k:
                parts.append(",")
            emit(c)
        parts.append(")")

    emit(node)
    return "".join(parts)


def loads_tree(text: str) -> HcTree:
    s = "".join(text.split())
    if s.endswith(";"):
        s = s[:-1]
    if not s:
        raise TreeError("empty tree text")
    tree = HcTree()
    stack: list[int] = []
    pos = 0
    aux_pending = False
    while pos < len(s):
        ch = s[pos]
        if ch == "*":
            if pos + 1 >= len(s) or s[pos + 1] != "(":
                raise TreeError(f"'*' must precede '(' (position {pos})")
            aux_pending = True
            pos += 1
        elif ch == "(":
            kind = NodeKind.AUX if aux_pending else NodeKind.INTERNAL
            aux_pending = False
            node = tree.add_node(kind, parent=stack[-1] if stack else -1)
            if not stack:
                if tree.root >= 0:
                    raise TreeError("text holds more than one tree")
                tree.root = node
            stack.append(node)
            pos += 1
        elif ch == ")":
            if not stack:
                raise TreeError(f"unbalanced ')' at position {pos}")
            stack.pop()
            pos += 1
        elif ch == ",":
            if not stack:
                raise TreeError(f"',' outside parentheses at position {pos}")
            pos += 1
        elif ch.isdigit():
            end = pos
            while end < len(s) and s[end].isdigit():
                end += 1
            node = tree.add_node(NodeKind.LEAF, int(s[pos:end]),
                                 parent=stack[-1] if stack else -1)
            if not stack:
                if tree.root >= 0:
                    raise TreeError("text holds more than one tree")
                tree.root = node
            pos = end
        else:
            raise TreeError(f"unexpected character {ch!r} at position {pos}")
    if stack:
        raise TreeError("unbalanced '(' in tree text")
    return tree


def read_tree(path) -> HcTree:
    return loads_tree(Path(path).read_text())


def canonical(tree: HcTree, node: int | None = None) -> str:
    """Order-independent serialization: children sorted by smallest leaf id."""
    node = tree.root if node is None else node

    def rec(v: int) -> tuple[int, str]:
        if tree.kind[v] is NodeKind.LEAF:
            return tree.label[v], str(tree.label[v])
        kids = sorted(rec(c) for c in tree.children[v])
        prefix = "*" if tree.kind[v] is NodeKind.AUX else ""
        return kids[0][0], prefix + "(" + ",".join(k[1] for k in kids) + ")"

    return rec(node)[1]

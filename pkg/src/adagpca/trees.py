"""Rooted phylogenetic trees with branch lengths, plus Newick I/O.

Trees are stored as flat node tables (parent index, branch length, optional
name).  Leaf order — the order leaves appear in the Newick string or were
generated — defines the variable order used everywhere downstream.
"""

from __future__ import annotations

import sys
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np


@contextmanager
def _deep_recursion(depth_bound: int):
    # Parsing/serialization recurse once per nesting level; pathological
    # (caterpillar) trees exceed CPython's default limit.
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, depth_bound + 1000))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


class NewickError(ValueError):
    """Parse failure with the byte offset where it happened."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class TreeError(ValueError):
    pass


@dataclass
class PhyloTree:
    """Rooted tree; node 0..len-1, parents[i] is None exactly for the root."""

    parents: list
    lengths: list
    names: list
    _children: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.validate()

    # -- structure ---------------------------------------------------------

    def validate(self) -> None:
        n = len(self.parents)
        if not (len(self.lengths) == len(self.names) == n):
            raise TreeError("parents, lengths and names must have equal length")
        roots = [i for i, p in enumerate(self.parents) if p is None]
        if len(roots) != 1:
            raise TreeError(f"tree must have exactly one root, found {len(roots)}")
        for i, ln in enumerate(self.lengths):
            if not np.isfinite(ln) or ln < 0:
                raise TreeError(f"branch length of node {i} must be finite and >= 0, got {ln}")
        # Reachability from the root doubles as the acyclicity check.
        children = self.children()
        seen = set()
        stack = [roots[0]]
        while stack:
            v = stack.pop()
            if v in seen:
                raise TreeError("tree contains a cycle")
            seen.add(v)
            stack.extend(children[v])
        if len(seen) != n:
            raise TreeError("tree has nodes unreachable from the root")
        leaf_names = [self.names[i] for i in self.leaves()]
        if any(nm is None or nm == "" for nm in leaf_names):
            raise TreeError("every leaf must carry a nonempty name")
        if len(set(leaf_names)) != len(leaf_names):
            dupes = sorted({nm for nm in leaf_names if leaf_names.count(nm) > 1})
            raise TreeError(f"duplicate leaf names: {dupes}")

    def children(self) -> list:
        if self._children is None or len(self._children) != len(self.parents):
            ch = [[] for _ in self.parents]
            for i, p in enumerate(self.parents):
                if p is not None:
                    ch[p].append(i)
            self._children = ch
        return self._children

    @property
    def root(self) -> int:
        return next(i for i, p in enumerate(self.parents) if p is None)

    def leaves(self) -> list:
        ch = self.children()
        return [i for i in range(len(self.parents)) if not ch[i]]

    def leaf_names(self) -> list:
        return [self.names[i] for i in self.leaves()]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    # -- metrics -----------------------------------------------------------

    def root_path(self, node: int) -> list:
        """Nodes from ``node`` up to (excluding) the root."""
        path = []
        v = node
        while self.parents[v] is not None:
            path.append(v)
            v = self.parents[v]
        return path

    def root_distances(self) -> np.ndarray:
        """Path length from the root to every node."""
        depth = np.zeros(len(self.parents))
        ch = self.children()
        stack = [self.root]
        while stack:
            v = stack.pop()
            for c in ch[v]:
                depth[c] = depth[v] + self.lengths[c]
                stack.append(c)
        return depth

    def leaf_incidence(self) -> np.ndarray:
        """Leaf-by-node 0/1 matrix: entry (i, v) is 1 when branch v lies on
        the root-to-leaf-i path (the root row is all zero)."""
        leaves = self.leaves()
        inc = np.zeros((len(leaves), len(self.parents)))
        for row, leaf in enumerate(leaves):
            for v in self.root_path(leaf):
                inc[row, v] = 1.0
        return inc

    def shared_path_lengths(self) -> np.ndarray:
        """Pairwise root-to-common-ancestor path length between leaves."""
        inc = self.leaf_incidence()
        w = np.asarray(self.lengths, dtype=float)
        w[self.root] = 0.0
        return (inc * w) @ inc.T

    def leaf_distance_matrix(self) -> np.ndarray:
        """Patristic (path) distances between leaves."""
        shared = self.shared_path_lengths()
        s = np.diag(shared).copy()
        return s[:, None] + s[None, :] - 2.0 * shared

    def descendant_leaves(self, node: int) -> list:
        """Leaf-order positions of the leaves below ``node`` (inclusive)."""
        ch = self.children()
        below = set()
        stack = [node]
        while stack:
            v = stack.pop()
            if not ch[v]:
                below.add(v)
            stack.extend(ch[v])
        return [i for i, leaf in enumerate(self.leaves()) if leaf in below]


# -- Newick ---------------------------------------------------------------

_TOKEN_ENDERS = set("(),:;")


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self):
        c = self.peek()
        self.pos += 1
        return c


def _read_label(cur: _Cursor) -> str:
    cur.skip_ws()
    text, pos = cur.text, cur.pos
    if pos < len(text) and text[pos] == "'":
        out = []
        pos += 1
        while True:
            if pos >= len(text):
                raise NewickError("unterminated quoted label", cur.pos)
            if text[pos] == "'":
                if pos + 1 < len(text) and text[pos + 1] == "'":
                    out.append("'")
                    pos += 2
                    continue
                pos += 1
                break
            out.append(text[pos])
            pos += 1
        cur.pos = pos
        return "".join(out)
    out = []
    while pos < len(text) and not text[pos].isspace() and text[pos] not in _TOKEN_ENDERS:
        out.append(text[pos])
        pos += 1
    cur.pos = pos
    return "".join(out)


def _read_length(cur: _Cursor) -> float:
    start = cur.pos
    token = _read_label(cur)
    try:
        return float(token)
    except ValueError:
        raise NewickError(f"invalid branch length {token!r}", start) from None


def parse_newick(text: str) -> PhyloTree:
    """Parse a Newick string into a :class:`PhyloTree`.

    Multifurcations are allowed, labels may be quoted, and a missing branch
    length defaults to 1.0 (0.0 for the root, which has no branch).
    """
    if text is None or not text.strip():
        raise NewickError("empty Newick input", 0)
    cur = _Cursor(text)
    parents, lengths, names = [], [], []

    def new_node(parent):
        parents.append(parent)
        lengths.append(None)
        names.append(None)
        return len(parents) - 1

    def parse_clade(parent):
        idx = new_node(parent)
        if cur.peek() == "(":
            open_at = cur.pos
            cur.take()
            while True:
                parse_clade(idx)
                c = cur.peek()
                if c == ",":
                    cur.take()
                    continue
                if c == ")":
                    cur.take()
                    break
                raise NewickError("unbalanced parenthesis", open_at)
            label = _read_label(cur)
            names[idx] = label or None
        else:
            label = _read_label(cur)
            if not label:
                raise NewickError("expected a leaf name", cur.pos)
            names[idx] = label
        if cur.peek() == ":":
            cur.take()
            lengths[idx] = _read_length(cur)
        return idx

    with _deep_recursion(text.count("(")):
        root = parse_clade(None)
    if cur.peek() != ";":
        raise NewickError("expected ';' terminator", cur.pos)
    cur.take()
    if cur.peek():
        raise NewickError("trailing content after ';'", cur.pos)

    for i in range(len(parents)):
        if lengths[i] is None:
            lengths[i] = 0.0 if i == root else 1.0
    try:
        return PhyloTree(parents=parents, lengths=lengths, names=names)
    except TreeError as exc:
        raise NewickError(str(exc), len(text)) from None


def _needs_quoting(name: str) -> bool:
    return any(c.isspace() or c in _TOKEN_ENDERS or c == "'" for c in name)


def _format_label(name) -> str:
    if name is None:
        return ""
    if _needs_quoting(name):
        return "'" + name.replace("'", "''") + "'"
    return name


def write_newick(tree: PhyloTree) -> str:
    """Serialize back to Newick (inverse of :func:`parse_newick` up to
    formatting)."""
    ch = tree.children()

    def emit(v: int) -> str:
        if ch[v]:
            inner = ",".join(emit(c) for c in ch[v])
            body = f"({inner}){_format_label(tree.names[v])}"
        else:
            body = _format_label(tree.names[v])
        if tree.parents[v] is None:
            return body
        return f"{body}:{tree.lengths[v]!r}"

    with _deep_recursion(len(tree.parents)):
        return emit(tree.root) + ";"

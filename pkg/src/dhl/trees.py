"""Nodes, finite trees, and exact level densities.

A node is a tuple of child indices (digits); the empty tuple is the root.
Two host flavours are supported:

* ``ImplicitTree(b)`` is the complete b-ary tree.  It is never materialized;
  levels are generated on demand, so it stands in for the unbounded host with
  callers supplying explicit level indices.
* ``ExplicitTree`` is a finite tree given by per-level child counts.  It is
  what the quasi-homogeneous counterexample constructions produce.

Levels are 0-indexed everywhere, including coordinates of vector trees.
Lexicographic order on a level coincides with tuple order because all nodes
of a level have equal length.  All densities are exact ``Fraction`` values;
no floating point is used anywhere in the package.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Sequence, Union

Node = tuple[int, ...]

ROOT: Node = ()


class TreeError(ValueError):
    """A node or level argument does not fit the tree it was used with."""


def node_text(node: Node) -> str:
    """Canonical text form: "@" for the root, else comma-separated digits."""
    if not node:
        return "@"
    return ",".join(str(d) for d in node)


def parse_node(text: str, compact_ok: bool = False) -> Node:
    """Parse a node from text.

    The canonical form ("@" or "0,3,1") is always accepted.  When
    ``compact_ok`` is true (every branching factor of the intended host is
    at most 10) a bare digit string like "031" is read digit by digit.
    Without that guarantee a multi-character bare token is a single digit,
    since hosts with branching above 10 have one-digit nodes like "12".
    """
    t = text.strip()
    if t == "@":
        return ROOT
    if "," in t:
        parts = t.split(",")
        if any(not p.strip().isdigit() for p in parts):
            raise TreeError(f"bad node text {text!r}")
        return tuple(int(p) for p in parts)
    if not t.isdigit():
        raise TreeError(f"bad node text {text!r}")
    if compact_ok:
        return tuple(int(c) for c in t)
    return (int(t),)


@dataclass(frozen=True)
class ImplicitTree:
    """The complete homogeneous tree with branching number ``b``."""

    b: int

    def __post_init__(self) -> None:
        if self.b < 2:
            raise TreeError(f"branching number must be >= 2, got {self.b}")

    # Unbounded host: any level index is valid.
    @property
    def height(self) -> None:
        return None

    def check_level(self, n: int) -> None:
        if n < 0:
            raise TreeError(f"negative level {n}")

    def level_size(self, n: int) -> int:
        self.check_level(n)
        return self.b**n

    def level_nodes(self, n: int) -> tuple[Node, ...]:
        self.check_level(n)
        return tuple(itertools.product(range(self.b), repeat=n))

    def contains(self, t: Node) -> bool:
        return all(0 <= d < self.b for d in t)

    def child_count(self, t: Node) -> int:
        if not self.contains(t):
            raise TreeError(f"node {node_text(t)} not in tree")
        return self.b

    def children(self, t: Node) -> tuple[Node, ...]:
        if not self.contains(t):
            raise TreeError(f"node {node_text(t)} not in tree")
        return tuple(t + (p,) for p in range(self.b))

    def successors_in_level(self, t: Node, n: int) -> tuple[Node, ...]:
        if not self.contains(t):
            raise TreeError(f"node {node_text(t)} not in tree")
        if len(t) > n:
            raise TreeError(f"node {node_text(t)} is below level {n}")
        return tuple(t + s for s in itertools.product(range(self.b), repeat=n - len(t)))

    def successor_count_in_level(self, t: Node, n: int) -> int:
        if len(t) > n:
            raise TreeError(f"node {node_text(t)} is below level {n}")
        return self.b ** (n - len(t))


class ExplicitTree:
    """A finite tree materialized from per-level child counts.

    ``counts[n][j]`` is the number of children of the j-th node (in lex
    order) of level n.  The last level is terminal: its counts are all zero.
    Nodes are digit tuples, the digit at depth n being a child index below
    the node's length-n prefix.
    """

    def __init__(self, counts: Sequence[Sequence[int]]) -> None:
        if not counts:
            raise TreeError("explicit tree needs at least one level")
        levels: list[tuple[Node, ...]] = [(ROOT,)]
        for n, row in enumerate(counts):
            if len(row) != len(levels[n]):
                raise TreeError(
                    f"level {n} has {len(levels[n])} nodes but {len(row)} child counts"
                )
            if any(c < 0 for c in row):
                raise TreeError(f"negative child count at level {n}")
            if n == len(counts) - 1:
                if any(row):
                    raise TreeError("terminal level must have zero child counts")
                break
            nxt = tuple(
                t + (i,) for t, c in zip(levels[n], row) for i in range(c)
            )
            levels.append(nxt)
        self.counts: tuple[tuple[int, ...], ...] = tuple(tuple(r) for r in counts)
        self.levels: tuple[tuple[Node, ...], ...] = tuple(levels)
        self._index: tuple[dict[Node, int], ...] = tuple(
            {t: j for j, t in enumerate(lvl)} for lvl in levels
        )

    @classmethod
    def homogeneous(cls, b: int, height: int) -> "ExplicitTree":
        """The initial b-ary tree with the given number of levels."""
        if b < 1 or height < 1:
            raise TreeError("need b >= 1 and height >= 1")
        counts = [[b] * (b**n) for n in range(height - 1)]
        counts.append([0] * (b ** (height - 1)))
        return cls(counts)

    @property
    def height(self) -> int:
        return len(self.levels)

    def check_level(self, n: int) -> None:
        if not 0 <= n < self.height:
            raise TreeError(f"level {n} out of range for height {self.height}")

    def level_size(self, n: int) -> int:
        self.check_level(n)
        return len(self.levels[n])

    def level_nodes(self, n: int) -> tuple[Node, ...]:
        self.check_level(n)
        return self.levels[n]

    def contains(self, t: Node) -> bool:
        return len(t) < self.height and t in self._index[len(t)]

    def child_count(self, t: Node) -> int:
        if not self.contains(t):
            raise TreeError(f"node {node_text(t)} not in tree")
        return self.counts[len(t)][self._index[len(t)][t]]

    def children(self, t: Node) -> tuple[Node, ...]:
        return tuple(t + (i,) for i in range(self.child_count(t)))

    def successors_in_level(self, t: Node, n: int) -> tuple[Node, ...]:
        if not self.contains(t):
            raise TreeError(f"node {node_text(t)} not in tree")
        if len(t) > n:
            raise TreeError(f"node {node_text(t)} is below level {n}")
        self.check_level(n)
        k = len(t)
        return tuple(s for s in self.levels[n] if s[:k] == t)

    def successor_count_in_level(self, t: Node, n: int) -> int:
        return len(self.successors_in_level(t, n))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ExplicitTree) and self.counts == other.counts

    def __hash__(self) -> int:
        return hash(self.counts)

    def __repr__(self) -> str:
        return f"ExplicitTree(height={self.height}, sizes={[len(l) for l in self.levels]})"


Tree = Union[ImplicitTree, ExplicitTree]


def branching_vector(bs: Iterable[int]) -> tuple[int, ...]:
    """Validate a vector of branching numbers (d >= 1, each >= 2)."""
    vec = tuple(bs)
    if not vec:
        raise TreeError("branching vector must have at least one coordinate")
    if any(b < 2 for b in vec):
        raise TreeError(f"branching numbers must be >= 2, got {vec}")
    return vec


def level_size(tree: Tree, n: int) -> int:
    return tree.level_size(n)


def immediate_successor(tree: Tree, t: Node, p: int) -> Node:
    """Append direction ``p`` to ``t``; the inverse of dropping the last digit."""
    if not 0 <= p < tree.child_count(t):
        raise TreeError(f"direction {p} out of range at {node_text(t)}")
    return t + (p,)


def parent(t: Node) -> Node:
    if not t:
        raise TreeError("the root has no parent")
    return t[:-1]


@dataclass(frozen=True)
class LevelSubset:
    """A subset of one level of a host tree, kept sorted."""

    tree: Tree
    level: int
    nodes: tuple[Node, ...]

    @classmethod
    def create(cls, tree: Tree, level: int, nodes: Iterable[Node]) -> "LevelSubset":
        tree.check_level(level)
        uniq = sorted(set(nodes))
        for t in uniq:
            if len(t) != level or not tree.contains(t):
                raise TreeError(f"node {node_text(t)} is not on level {level}")
        return cls(tree, level, tuple(uniq))

    @cached_property
    def node_set(self) -> frozenset[Node]:
        return frozenset(self.nodes)

    def __contains__(self, t: Node) -> bool:
        return t in self.node_set

    def __len__(self) -> int:
        return len(self.nodes)

    def complement(self) -> "LevelSubset":
        full = self.tree.level_nodes(self.level)
        return LevelSubset(self.tree, self.level, tuple(t for t in full if t not in self.node_set))


def density(subset: LevelSubset) -> Fraction:
    """|F| / |T(n)| as an exact rational."""
    return Fraction(len(subset.nodes), subset.tree.level_size(subset.level))


def relative_density(subset: LevelSubset, t: Node) -> Fraction:
    """Density of the subset among the level-n successors of ``t``."""
    tree = subset.tree
    if not tree.contains(t):
        raise TreeError(f"node {node_text(t)} not in tree")
    if len(t) > subset.level:
        raise TreeError(f"node {node_text(t)} lies below level {subset.level}")
    k = len(t)
    hits = sum(1 for s in subset.nodes if s[:k] == t)
    total = tree.successor_count_in_level(t, subset.level)
    if total == 0:
        raise TreeError(f"node {node_text(t)} has no successors on level {subset.level}")
    return Fraction(hits, total)


def successors_in_level(tree: Tree, t: Node, n: int) -> LevelSubset:
    """All level-n nodes extending ``t``, in lex order."""
    return LevelSubset(tree, n, tree.successors_in_level(t, n))


def count_extensions(sorted_nodes: Sequence[Node], prefix: Node, alphabet_bound: int) -> int:
    """Number of entries of a sorted same-length node list extending ``prefix``.

    ``alphabet_bound`` must exceed every digit in the list (the host branching
    works); the count is taken by bisecting the contiguous prefix range.
    """
    import bisect

    lo = bisect.bisect_left(sorted_nodes, prefix)
    hi = bisect.bisect_left(sorted_nodes, prefix + (alphabet_bound,))
    return hi - lo

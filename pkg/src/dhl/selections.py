"""Dense level selections and their correlation combinatorics.

A level selection assigns to every element of a finite source level product
a subset of one fixed level of a target tree W, one target level per source
level.  Selections arise by sectioning a product subset at its W coordinate
and are refined along nested stage subtrees by intersecting transported
sections.

The correlation predicate quantifies over the fans of a finite vector strong
subtree; that finite-height restriction of the defining condition is the
only form checked here (the unrestricted form ranges over an infinite
family).  An empty section is legal; it simply fails every positive density
threshold.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .fans import fans_with_root
from .subtrees import (
    StrongSubtree,
    VectorStrongSubtree,
    is_vector_strong_subtree_of,
    direction_tuples,
    validate_vector_strong,
    vector_canonical_isomorphism,
    vector_subtree_at_direction,
    zero_direction,
)
from .trees import (
    ImplicitTree,
    LevelSubset,
    Node,
    Tree,
    TreeError,
    count_extensions,
    node_text,
)

Element = tuple[Node, ...]


def initial_vector(bs: Sequence[int], height: int) -> VectorStrongSubtree:
    """The full initial vector tree on levels 0..height-1."""
    return VectorStrongSubtree(
        tuple(StrongSubtree.initial(ImplicitTree(b), height) for b in bs)
    )


@dataclass(frozen=True)
class ProductSubset:
    """A subset of the level product of finite hosts, stored per level."""

    hosts: tuple[Tree, ...]
    height: int
    levels: tuple[frozenset[Element], ...]

    @classmethod
    def create(
        cls,
        hosts: Sequence[Tree],
        height: int,
        elements: Iterable[Element],
    ) -> "ProductSubset":
        host_tuple = tuple(hosts)
        if height < 1:
            raise TreeError("height must be >= 1")
        for h in host_tuple:
            if h.height is not None and height > h.height:
                raise TreeError("height exceeds a host's height")
        layers: list[set[Element]] = [set() for _ in range(height)]
        for el in elements:
            if len(el) != len(host_tuple):
                raise TreeError(f"element arity {len(el)} != {len(host_tuple)} hosts")
            lengths = {len(t) for t in el}
            if len(lengths) != 1:
                raise TreeError("element coordinates must share one length")
            (m,) = lengths
            if not 0 <= m < height:
                raise TreeError(f"element level {m} out of range")
            for h, t in zip(host_tuple, el):
                if not h.contains(t):
                    raise TreeError(f"node {node_text(t)} not in its host")
            layers[m].add(el)
        return cls(host_tuple, height, tuple(frozenset(s) for s in layers))

    def __contains__(self, el: Element) -> bool:
        m = len(el[0])
        return m < self.height and el in self.levels[m]

    def level_density(self, m: int) -> Fraction:
        size = 1
        for h in self.hosts:
            size *= h.level_size(m)
        return Fraction(len(self.levels[m]), size)

    def elements(self) -> Iterator[Element]:
        for layer in self.levels:
            yield from sorted(layer)


@dataclass(frozen=True)
class LevelSelection:
    """Per-element target subsets: D(s) inside W(l_n) for s at source level n."""

    source: VectorStrongSubtree
    target: ImplicitTree
    target_levels: tuple[int, ...]
    data: dict[Element, frozenset[Node]]

    def __post_init__(self) -> None:
        h = self.source.height
        if len(self.target_levels) != h:
            raise TreeError("one target level per source level required")
        if any(b <= a for a, b in zip(self.target_levels, self.target_levels[1:])):
            raise TreeError("target levels must be strictly increasing")
        for j in range(h):
            ln = self.target_levels[j]
            for el in self.source.level_product(j):
                got = self.data.get(el)
                if got is None:
                    raise TreeError(f"selection undefined at {self.describe(el)}")
                for w in got:
                    if len(w) != ln or not self.target.contains(w):
                        raise TreeError(
                            f"value {node_text(w)} not on target level {ln}"
                        )

    @staticmethod
    def describe(el: Element) -> str:
        return "(" + "|".join(node_text(t) for t in el) + ")"

    @property
    def height(self) -> int:
        return self.source.height

    def source_level_of(self, el: Element) -> int:
        host_level = len(el[0])
        try:
            return self.source.levels.index(host_level)
        except ValueError:
            raise TreeError(f"{self.describe(el)} is not on a source level") from None

    def target_level_of(self, el: Element) -> int:
        return self.target_levels[self.source_level_of(el)]

    def section(self, el: Element) -> frozenset[Node]:
        try:
            return self.data[el]
        except KeyError:
            raise TreeError(f"selection undefined at {self.describe(el)}") from None

    def section_density(self, el: Element) -> Fraction:
        return Fraction(
            len(self.section(el)), self.target.level_size(self.target_level_of(el))
        )

    def is_dense(self, eps: Fraction) -> bool:
        return all(
            self.section_density(el) >= eps
            for j in range(self.height)
            for el in self.source.level_product(j)
        )


def section_selection(d: ProductSubset, w_coordinate: int) -> LevelSelection:
    """Section a product subset at one coordinate, giving a level selection.

    The remaining coordinates form the source (their full initial trees);
    target levels are the identity map l_n = n.
    """
    arity = len(d.hosts)
    if not 0 <= w_coordinate < arity:
        raise TreeError(f"coordinate {w_coordinate} out of range")
    if arity < 2:
        raise TreeError("sectioning needs at least two coordinates")
    w_host = d.hosts[w_coordinate]
    if not isinstance(w_host, ImplicitTree):
        raise TreeError("the sectioned coordinate must be homogeneous")
    rest = [h for i, h in enumerate(d.hosts) if i != w_coordinate]
    if any(not isinstance(h, ImplicitTree) for h in rest):
        raise TreeError("source coordinates must be homogeneous")
    source = initial_vector([h.b for h in rest], d.height)
    data: dict[Element, frozenset[Node]] = {}
    for m in range(d.height):
        buckets: dict[Element, set[Node]] = {
            el: set() for el in source.level_product(m)
        }
        for full in d.levels[m]:
            w = full[w_coordinate]
            el = tuple(t for i, t in enumerate(full) if i != w_coordinate)
            buckets[el].add(w)
        for el, ws in buckets.items():
            data[el] = frozenset(ws)
    return LevelSelection(source, w_host, tuple(range(d.height)), data)


def fubini_majority(
    b: LevelSelection, eta: Fraction, source_level: int
) -> LevelSubset:
    """Target nodes covered by at least (eta/2) of the level's sections.

    When every section at the level has density at least eta, the result has
    density at least eta/2.
    """
    if not 0 < eta <= 1:
        raise TreeError(f"eta must be in (0, 1], got {eta}")
    elements = list(b.source.level_product(source_level))
    threshold = Fraction(eta, 2) * len(elements)
    ln = b.target_levels[source_level]
    counts: dict[Node, int] = {}
    for el in elements:
        for w in b.section(el):
            counts[w] = counts.get(w, 0) + 1
    chosen = [w for w, c in counts.items() if c >= threshold]
    return LevelSubset.create(b.target, ln, chosen)


def _relative_density_in_target(
    b: LevelSelection, nodes: frozenset[Node], target_level: int, anchor: Node
) -> Fraction:
    denom = b.target.b ** (target_level - len(anchor))
    k = len(anchor)
    hits = sum(1 for w in nodes if w[:k] == anchor)
    return Fraction(hits, denom)


def fan_intersection(d: LevelSelection, fan: VectorStrongSubtree) -> frozenset[Node]:
    """Intersection of the sections over the fan's top level product."""
    tops = list(fan.level_product(1))
    out = d.section(tops[0])
    for el in tops[1:]:
        out = out & d.section(el)
    return out


def min_fan_intersection_density(
    d: LevelSelection, r: VectorStrongSubtree, w: Node, p: int
) -> Fraction:
    """Minimum over root-anchored fans of dens(intersection | w^p)."""
    if r.height < 2:
        raise TreeError("need a subtree of height >= 2")
    if not 0 <= p < d.target.b:
        raise TreeError(f"direction {p} out of range")
    root_target = d.target_level_of(r.root)
    if len(w) != root_target:
        raise TreeError(
            f"anchor {node_text(w)} is not on target level {root_target}"
        )
    best: Fraction | None = None
    anchor = w + (p,)
    for top in range(1, r.height):
        top_target = d.target_level_of(next(iter(r.level_product(top))))
        for fan in fans_with_root(r, top):
            inter = fan_intersection(d, fan)
            val = _relative_density_in_target(d, inter, top_target, anchor)
            if best is None or val < best:
                best = val
                if best == 0:
                    return best
    assert best is not None
    return best


@dataclass(frozen=True)
class CorrelationResult:
    ok: bool
    reason: str | None = None
    fan: VectorStrongSubtree | None = None
    direction: int | None = None
    density: Fraction | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_strongly_correlated(
    d: LevelSelection, r: VectorStrongSubtree, w: Node, theta: Fraction
) -> CorrelationResult:
    """Check membership at the root plus the fan intersection threshold.

    False results carry a certificate: either the root-membership failure or
    a violating (fan, direction) pair with its exact density.
    """
    if not 0 < theta <= 1:
        raise TreeError(f"theta must be in (0, 1], got {theta}")
    if violations := validate_vector_strong(r):
        raise TreeError(f"invalid subtree: {violations[0]}")
    root = r.root
    if w not in d.section(root):
        return CorrelationResult(False, reason="C1")
    anchor_level = d.target_level_of(root)
    if len(w) != anchor_level:
        raise TreeError(f"anchor {node_text(w)} is not on target level {anchor_level}")
    for top in range(1, r.height):
        top_target = d.target_level_of(next(iter(r.level_product(top))))
        for fan in fans_with_root(r, top):
            inter = fan_intersection(d, fan)
            for p in range(d.target.b):
                val = _relative_density_in_target(d, inter, top_target, w + (p,))
                if val < theta:
                    return CorrelationResult(
                        False, reason="fan", fan=fan, direction=p, density=val
                    )
    return CorrelationResult(True)


def correlated_set(
    d: LevelSelection, r: VectorStrongSubtree, theta: Fraction
) -> LevelSubset:
    """All anchors in the root section that are strongly correlated."""
    root = r.root
    good = [
        w
        for w in sorted(d.section(root))
        if is_strongly_correlated(d, r, w, theta).ok
    ]
    return LevelSubset.create(d.target, d.target_level_of(root), good)


def refine_selection(d: LevelSelection, r: VectorStrongSubtree) -> LevelSelection:
    """Intersect the sections over all direction transports of ``r``.

    The refined selection lives on the all-zero direction cone of ``r``; its
    section at an element is the intersection of the original sections at
    the element's canonical images in every direction cone.
    """
    if r.height < 2:
        raise TreeError("need a subtree of height >= 2")
    if not is_vector_strong_subtree_of(r, d.source):
        raise TreeError("subtree does not nest in the selection's source")
    cone0 = vector_subtree_at_direction(r, zero_direction(r))
    transports = [
        vector_canonical_isomorphism(cone0, vector_subtree_at_direction(r, ps))
        for ps in direction_tuples(r)
    ]
    source_pos = {lv: j for j, lv in enumerate(d.source.levels)}
    new_targets = tuple(d.target_levels[source_pos[lv]] for lv in cone0.levels)
    data: dict[Element, frozenset[Node]] = {}
    for j in range(cone0.height):
        for el in cone0.level_product(j):
            sets = [d.section(tr.apply(el)) for tr in transports]
            out = sets[0]
            for s in sets[1:]:
                out = out & s
            data[el] = out
    return LevelSelection(cone0, d.target, new_targets, data)


@dataclass(frozen=True)
class LevelDensityReport:
    """Exact per-level values of the three density functionals."""

    level: int
    level_density: Fraction          # |D ∩ T(n)| / |T(n)|
    initial_density: Fraction        # |D ∩ (T restricted to n)| / its size
    chain_average: Fraction          # Furstenberg-Weiss style partial value


def fw_density(nodes: Iterable[Node], b: int, n_max: int) -> list[LevelDensityReport]:
    """Partial (finite-n) density reports for a node set in the b-ary tree.

    No limit extrapolation is performed; only the exact partial values per
    level up to n_max are reported.
    """
    host = ImplicitTree(b)
    node_set = set(nodes)
    for t in node_set:
        if not host.contains(t) or len(t) > n_max:
            raise TreeError(f"node {node_text(t)} outside the first {n_max + 1} levels")
    reports: list[LevelDensityReport] = []
    prefix_counts: dict[Node, int] = {(): 1 if () in node_set else 0}
    cum_hits = 0
    cum_size = 0
    for n in range(n_max + 1):
        level_hits = sum(1 for t in prefix_counts if t in node_set)
        size = host.level_size(n)
        cum_hits += level_hits
        cum_size += size
        chain_total = sum(prefix_counts.values())
        reports.append(
            LevelDensityReport(
                level=n,
                level_density=Fraction(level_hits, size),
                initial_density=Fraction(cum_hits, cum_size),
                chain_average=Fraction(chain_total, (n + 1) * size),
            )
        )
        if n < n_max:
            nxt: dict[Node, int] = {}
            for t, c in prefix_counts.items():
                for child in host.children(t):
                    nxt[child] = c + (1 if child in node_set else 0)
            prefix_counts = nxt
    return reports

"""Strong subtrees, vector strong subtrees, canonical maps, and embeddings.

A strong subtree is stored as a level set (strictly increasing host levels)
together with per-level sorted node lists.  Validity means: a unique root,
every stored level inside the matching host level, and for every non-top
node exactly one chosen successor above each of its immediate host
successors.  For hosts of the form b^<N this forces level j to have exactly
b^j nodes; general hosts branch as the host does.

Finite vector strong subtrees share one level set across coordinates.

The canonical isomorphism between two same-branching strong subtrees matches
nodes by (level, lex index); for valid subtrees this is exactly the unique
level-, order-, and lex-preserving bijection.  Composed chains of such maps
across a nested stage sequence give the embedding families used to unravel
selection refinements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .budget import Budget
from .trees import (
    ExplicitTree,
    ImplicitTree,
    Node,
    Tree,
    TreeError,
    branching_vector,
    node_text,
)


@dataclass(frozen=True)
class Violation:
    """One failed strong-subtree condition, named (a), (b) or (c)."""

    condition: str
    node: Node | None
    detail: str

    def __str__(self) -> str:
        where = node_text(self.node) if self.node is not None else "-"
        return f"({self.condition}) node {where}: {self.detail}"


@dataclass(frozen=True)
class StrongSubtree:
    host: Tree
    levels: tuple[int, ...]
    nodes: tuple[tuple[Node, ...], ...]

    @classmethod
    def create(
        cls, host: Tree, levels: Iterable[int], nodes: Iterable[Iterable[Node]]
    ) -> "StrongSubtree":
        lv = tuple(levels)
        nd = tuple(tuple(sorted(set(layer))) for layer in nodes)
        return cls(host, lv, nd)

    @classmethod
    def initial(cls, host: Tree, height: int) -> "StrongSubtree":
        """The full initial subtree on levels 0..height-1."""
        return cls(host, tuple(range(height)), tuple(host.level_nodes(n) for n in range(height)))

    @property
    def height(self) -> int:
        return len(self.levels)

    @property
    def root(self) -> Node:
        return self.nodes[0][0]

    def level_nodes(self, j: int) -> tuple[Node, ...]:
        return self.nodes[j]

    @cached_property
    def node_sets(self) -> tuple[frozenset[Node], ...]:
        return tuple(frozenset(layer) for layer in self.nodes)

    @cached_property
    def all_nodes(self) -> frozenset[Node]:
        return frozenset(t for layer in self.nodes for t in layer)

    def key(self) -> tuple:
        return (self.levels, self.nodes)

    @cached_property
    def addresses(self) -> dict[Node, tuple[int, ...]]:
        """Map each node to its direction word from the root.

        The digit at step j is the host child index taken below the level-j
        ancestor.  Requires validity; raises TreeError otherwise.
        """
        addr: dict[Node, tuple[int, ...]] = {self.root: ()}
        for j in range(1, self.height):
            plen = self.levels[j - 1]
            for s in self.nodes[j]:
                par = s[:plen]
                if par not in addr:
                    raise TreeError(
                        f"node {node_text(s)} has no ancestor on subtree level {j - 1}"
                    )
                addr[s] = addr[par] + (s[plen],)
        return addr

    @cached_property
    def node_at_address(self) -> dict[tuple[int, ...], Node]:
        return {w: t for t, w in self.addresses.items()}

    def child_in_direction(self, s: Node, j: int, p: int) -> Node:
        """The unique level-(j+1) node above the p-th host child of ``s``."""
        word = self.addresses[s]
        if len(word) != j:
            raise TreeError(f"node {node_text(s)} is not on subtree level {j}")
        try:
            return self.node_at_address[word + (p,)]
        except KeyError:
            raise TreeError(f"no direction {p} above {node_text(s)}") from None


def validate_strong(s: StrongSubtree) -> list[Violation]:
    """Check conditions (a), (b), (c); empty result means valid."""
    out: list[Violation] = []
    if len(s.levels) != len(s.nodes) or not s.levels:
        return [Violation("b", None, "level set and node layers disagree")]
    if any(b <= a for a, b in zip(s.levels, s.levels[1:])):
        out.append(Violation("b", None, f"level set {s.levels} is not strictly increasing"))
        return out

    if len(s.nodes[0]) != 1:
        out.append(Violation("a", None, f"{len(s.nodes[0])} roots"))

    for j, (lv, layer) in enumerate(zip(s.levels, s.nodes)):
        if not layer:
            out.append(Violation("b", None, f"subtree level {j} is empty"))
            continue
        for t in layer:
            if len(t) != lv or not s.host.contains(t):
                out.append(Violation("b", t, f"not a host node on level {lv}"))
    if out:
        return out

    for j in range(s.height - 1):
        above = s.nodes[j + 1]
        covered: set[Node] = set()
        for t in s.nodes[j]:
            for child in s.host.children(t):
                k = len(child)
                hits = [u for u in above if u[:k] == child]
                if len(hits) != 1:
                    out.append(
                        Violation(
                            "c",
                            child,
                            f"{len(hits)} chosen successors above this direction",
                        )
                    )
                covered.update(hits)
        for u in above:
            if u not in covered:
                out.append(Violation("c", u, "not above any immediate successor of the previous level"))
    return out


@dataclass(frozen=True)
class VectorStrongSubtree:
    trees: tuple[StrongSubtree, ...]

    @classmethod
    def create(cls, trees: Iterable[StrongSubtree]) -> "VectorStrongSubtree":
        ts = tuple(trees)
        if not ts:
            raise TreeError("vector subtree needs at least one coordinate")
        return cls(ts)

    @property
    def d(self) -> int:
        return len(self.trees)

    @property
    def levels(self) -> tuple[int, ...]:
        return self.trees[0].levels

    @property
    def height(self) -> int:
        return self.trees[0].height

    @property
    def root(self) -> tuple[Node, ...]:
        return tuple(t.root for t in self.trees)

    def level_product(self, j: int) -> Iterator[tuple[Node, ...]]:
        return itertools.product(*(t.level_nodes(j) for t in self.trees))

    def level_product_size(self, j: int) -> int:
        size = 1
        for t in self.trees:
            size *= len(t.level_nodes(j))
        return size

    def elements(self) -> Iterator[tuple[Node, ...]]:
        for j in range(self.height):
            yield from self.level_product(j)

    def key(self) -> tuple:
        return (self.levels, tuple(t.nodes for t in self.trees))


def validate_vector_strong(vs: VectorStrongSubtree) -> list[tuple[int | None, Violation]]:
    out: list[tuple[int | None, Violation]] = []
    base = vs.trees[0].levels
    for i, t in enumerate(vs.trees):
        if t.levels != base:
            out.append((i, Violation("b", None, f"level set {t.levels} differs from {base}")))
        out.extend((i, v) for v in validate_strong(t))
    return out


def wrap(subtree: StrongSubtree) -> VectorStrongSubtree:
    """View a single strong subtree as a 1-coordinate vector."""
    return VectorStrongSubtree((subtree,))


def _as_hosts(hosts) -> tuple[Tree, ...]:
    if isinstance(hosts, (ImplicitTree, ExplicitTree)):
        return (hosts,)
    if isinstance(hosts, int):
        return (ImplicitTree(hosts),)
    seq = tuple(hosts)
    if seq and all(isinstance(h, int) for h in seq):
        return tuple(ImplicitTree(b) for b in branching_vector(seq))
    return tuple(seq)


def _coordinate_matrices(
    host: Tree, levels: tuple[int, ...], budget: Budget | None
) -> list[tuple[tuple[Node, ...], ...]]:
    """All node-layer matrices of one coordinate, in lex order."""
    out: list[tuple[tuple[Node, ...], ...]] = []

    def extend(matrix: list[tuple[Node, ...]]) -> None:
        j = len(matrix)
        if j == len(levels):
            out.append(tuple(matrix))
            return
        if j == 0:
            for r in host.level_nodes(levels[0]):
                if budget:
                    budget.tick()
                extend([(r,)])
            return
        cand: list[tuple[Node, ...]] = []
        for s in matrix[-1]:
            for child in host.children(s):
                succ = host.successors_in_level(child, levels[j])
                if not succ:
                    return
                cand.append(succ)
        for combo in itertools.product(*cand):
            if budget:
                budget.tick()
            extend(matrix + [combo])

    extend([])
    return out


def enumerate_strong(
    hosts, n: int, k: int, budget: Budget | None = None
) -> Iterator[VectorStrongSubtree]:
    """All height-k vector strong subtrees with levels inside 0..n-1.

    Deterministic order: lex on level sets, then lex on node matrices
    coordinate-major.  Hosts may be branching numbers or trees.
    """
    host_tuple = _as_hosts(hosts)
    if k < 1 or n < k:
        raise TreeError(f"need 1 <= k <= n, got k={k} n={n}")
    for h in host_tuple:
        if h.height is not None and n > h.height:
            raise TreeError(f"host height {h.height} is below requested bound {n}")
    for levels in itertools.combinations(range(n), k):
        per = [_coordinate_matrices(h, levels, budget) for h in host_tuple]
        if any(not m for m in per):
            continue
        for chosen in itertools.product(*per):
            yield VectorStrongSubtree(
                tuple(
                    StrongSubtree(host=h, levels=levels, nodes=m)
                    for h, m in zip(host_tuple, chosen)
                )
            )


class CanonicalMap:
    """A level-, order-, and lex-preserving node map between subtrees.

    Isomorphisms are produced by ``canonical_isomorphism``; embeddings into a
    larger codomain arise from composition chains (their image may be a
    proper subset of the codomain's nodes).
    """

    def __init__(self, domain: StrongSubtree, codomain: StrongSubtree, mapping: dict[Node, Node]):
        self.domain = domain
        self.codomain = codomain
        self.mapping = mapping

    def apply(self, t: Node) -> Node:
        try:
            return self.mapping[t]
        except KeyError:
            raise TreeError(f"{node_text(t)} is outside the map's domain") from None

    def __call__(self, t: Node) -> Node:
        return self.apply(t)

    def compose(self, inner: "CanonicalMap") -> "CanonicalMap":
        """self after inner."""
        mapping = {t: self.apply(u) for t, u in inner.mapping.items()}
        return CanonicalMap(inner.domain, self.codomain, mapping)

    def inverse(self) -> "CanonicalMap":
        inv = {v: k for k, v in self.mapping.items()}
        if len(inv) != len(self.mapping):
            raise TreeError("map is not injective")
        return CanonicalMap(self.codomain, self.domain, inv)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, CanonicalMap)
            and self.mapping == other.mapping
            and self.domain.key() == other.domain.key()
            and self.codomain.key() == other.codomain.key()
        )

    def __repr__(self) -> str:
        return f"CanonicalMap({len(self.mapping)} nodes)"


def _require_homogeneous(s: StrongSubtree) -> int:
    if not isinstance(s.host, ImplicitTree):
        raise TreeError("canonical maps require homogeneous (implicit) hosts")
    return s.host.b


def identity_map(s: StrongSubtree) -> CanonicalMap:
    return CanonicalMap(s, s, {t: t for layer in s.nodes for t in layer})


def canonical_isomorphism(a: StrongSubtree, b: StrongSubtree) -> CanonicalMap:
    """The unique level/order/lex preserving bijection between a and b."""
    ba, bb = _require_homogeneous(a), _require_homogeneous(b)
    if ba != bb:
        raise TreeError(f"branching mismatch: {ba} vs {bb}")
    if a.height != b.height:
        raise TreeError(f"height mismatch: {a.height} vs {b.height}")
    mapping: dict[Node, Node] = {}
    for la, lb in zip(a.nodes, b.nodes):
        if len(la) != len(lb):
            raise TreeError("level size mismatch; operands are not both valid")
        mapping.update(zip(la, lb))
    return CanonicalMap(a, b, mapping)


def vector_canonical_isomorphism(
    a: VectorStrongSubtree, b: VectorStrongSubtree
) -> "VectorCanonicalMap":
    if a.d != b.d:
        raise TreeError("coordinate count mismatch")
    return VectorCanonicalMap(tuple(canonical_isomorphism(x, y) for x, y in zip(a.trees, b.trees)))


@dataclass(frozen=True)
class VectorCanonicalMap:
    maps: tuple[CanonicalMap, ...]

    def apply(self, element: tuple[Node, ...]) -> tuple[Node, ...]:
        return tuple(m.apply(t) for m, t in zip(self.maps, element))

    def __call__(self, element: tuple[Node, ...]) -> tuple[Node, ...]:
        return self.apply(element)

    def compose(self, inner: "VectorCanonicalMap") -> "VectorCanonicalMap":
        return VectorCanonicalMap(tuple(m.compose(i) for m, i in zip(self.maps, inner.maps)))


def subtree_at_direction(z: StrongSubtree, p: int) -> StrongSubtree:
    """All nodes of ``z`` above the p-th immediate successor of its root."""
    if z.height < 2:
        raise TreeError("need height >= 2 to take a direction cone")
    root1 = z.child_in_direction(z.root, 0, p)
    k = len(root1)
    layers = tuple(
        tuple(t for t in layer if t[:k] == root1) for layer in z.nodes[1:]
    )
    return StrongSubtree(z.host, z.levels[1:], layers)


def vector_subtree_at_direction(
    r: VectorStrongSubtree, directions: Sequence[int]
) -> VectorStrongSubtree:
    if len(directions) != r.d:
        raise TreeError("one direction per coordinate required")
    return VectorStrongSubtree(
        tuple(subtree_at_direction(t, p) for t, p in zip(r.trees, directions))
    )


def direction_tuples(vs: VectorStrongSubtree) -> list[tuple[int, ...]]:
    """All per-coordinate direction combinations, lex ordered."""
    bs = [_require_homogeneous(t) for t in vs.trees]
    return list(itertools.product(*(range(b) for b in bs)))


def zero_direction(vs: VectorStrongSubtree) -> tuple[int, ...]:
    return (0,) * vs.d


def directed_fan(z: Node, host_subtree: StrongSubtree) -> StrongSubtree:
    """The fan transporting ``z`` from the 0-cone into every direction cone.

    ``z`` must be a node of the 0-direction cone of ``host_subtree``; the
    result is a height-2 strong subtree rooted at the host subtree's root
    whose top level contains ``z`` itself (in direction 0).
    """
    b = _require_homogeneous(host_subtree)
    cone0 = subtree_at_direction(host_subtree, 0)
    if z not in cone0.all_nodes:
        raise TreeError(f"{node_text(z)} is not in the 0-direction cone")
    tops = []
    for p in range(b):
        conep = subtree_at_direction(host_subtree, p)
        tops.append(canonical_isomorphism(cone0, conep).apply(z))
    return StrongSubtree(
        host_subtree.host,
        (host_subtree.levels[0], len(z)),
        ((host_subtree.root,), tuple(tops)),
    )


def vector_directed_fan(
    element: tuple[Node, ...], r: VectorStrongSubtree
) -> VectorStrongSubtree:
    if len(element) != r.d:
        raise TreeError("element arity must match the vector subtree")
    return VectorStrongSubtree(
        tuple(directed_fan(z, t) for z, t in zip(element, r.trees))
    )


def is_strong_subtree_of(r: StrongSubtree, s: StrongSubtree) -> bool:
    """Whether ``r`` is a strong subtree of ``s`` viewed as a host."""
    if r.host != s.host:
        return False
    try:
        addr = s.addresses
    except TreeError:
        return False
    level_pos = {lv: j for j, lv in enumerate(s.levels)}
    if any(lv not in level_pos for lv in r.levels):
        return False
    if any(t not in addr for layer in r.nodes for t in layer):
        return False
    word_levels = tuple(level_pos[lv] for lv in r.levels)
    word_host: Tree
    if isinstance(s.host, ImplicitTree):
        word_host = s.host
    else:
        # Address words of a general host live in a tree shaped like s itself.
        word_host = ExplicitTree(
            [
                [s.host.child_count(t) for t in layer]
                for layer in s.nodes[:-1]
            ]
            + [[0] * len(s.nodes[-1])]
        )
    translated = StrongSubtree(
        word_host,
        word_levels,
        tuple(tuple(sorted(addr[t] for t in layer)) for layer in r.nodes),
    )
    return not validate_strong(translated)


def is_vector_strong_subtree_of(r: VectorStrongSubtree, s: VectorStrongSubtree) -> bool:
    if r.d != s.d:
        return False
    if any(t.levels != r.levels for t in r.trees):
        return False
    return all(is_strong_subtree_of(x, y) for x, y in zip(r.trees, s.trees))


class EmbeddingStages:
    """A nested stage sequence S_0 with subtrees R_0, R_1, ... for embeddings.

    Stage n+1's source is the all-zero direction cone of R_n; each R_n must
    be a vector strong subtree of the stage-n source (checked).  Words over
    per-coordinate directions select composed canonical embeddings back into
    the stage-0 source.
    """

    def __init__(self, source0: VectorStrongSubtree, stages: Sequence[VectorStrongSubtree]):
        if validate_vector_strong(source0):
            raise TreeError("stage-0 source is not a valid vector strong subtree")
        sources = [source0]
        for n, r in enumerate(stages):
            if validate_vector_strong(r):
                raise TreeError(f"stage {n} subtree is invalid")
            if not is_vector_strong_subtree_of(r, sources[n]):
                raise TreeError(f"stage {n} subtree does not nest in its source")
            if r.height < 2:
                raise TreeError(f"stage {n} subtree must have height >= 2")
            sources.append(vector_subtree_at_direction(r, zero_direction(r)))
        self.stages = tuple(stages)
        self.sources = tuple(sources)

    @property
    def depth(self) -> int:
        return len(self.stages)

    def source(self, n: int) -> VectorStrongSubtree:
        return self.sources[n]

    def coordinate_embedding(self, i: int, word: Sequence[int]) -> CanonicalMap:
        """The composed embedding of coordinate ``i`` for a digit word."""
        n = len(word)
        if n > self.depth:
            raise TreeError(f"word length {n} exceeds {self.depth} stages")
        # Apply the innermost map first, then walk back toward stage 0.
        mapping = {t: t for layer in self.sources[n].trees[i].nodes for t in layer}
        for j in range(n - 1, -1, -1):
            step = canonical_isomorphism(
                self.sources[j + 1].trees[i],
                subtree_at_direction(self.stages[j].trees[i], word[j]),
            )
            mapping = {t: step.apply(u) for t, u in mapping.items()}
        return CanonicalMap(self.sources[n].trees[i], self.sources[0].trees[i], mapping)

    def embedding(self, word: Sequence[Sequence[int]]) -> VectorCanonicalMap:
        """The vector embedding for a word of direction tuples."""
        n = len(word)
        if n > self.depth:
            raise TreeError(f"word length {n} exceeds {self.depth} stages")
        d = self.sources[0].d
        for step in word:
            if len(step) != d:
                raise TreeError("each word entry needs one direction per coordinate")
        return VectorCanonicalMap(
            tuple(
                self.coordinate_embedding(i, [step[i] for step in word])
                for i in range(d)
            )
        )

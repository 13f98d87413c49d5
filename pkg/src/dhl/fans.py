"""Fan enumeration and counting.

A fan is a height-2 strong subtree; a vector fan shares a common root level
across coordinates.  ``enumerate_fans`` streams every vector fan of the
complete hosts whose top level sits inside host level n; ``theta`` is the
closed-form count (root level, root nodes, then one top node per direction),
validated against the enumeration wherever both are computed.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterator, Sequence

from .budget import Budget
from .subtrees import StrongSubtree, VectorStrongSubtree
from .trees import ImplicitTree, Node, TreeError, branching_vector


def enumerate_fans(
    bs: Sequence[int], n: int, budget: Budget | None = None
) -> Iterator[VectorStrongSubtree]:
    """All vector fans of (b_1^<N, ...) with top level inside level n."""
    vec = branching_vector(bs)
    if n < 1:
        raise TreeError(f"top level must be >= 1, got {n}")
    hosts = [ImplicitTree(b) for b in vec]
    for m in range(n):
        per_coord = []
        for host in hosts:
            pairs: list[tuple[Node, tuple[Node, ...]]] = []
            for root in host.level_nodes(m):
                cands = [host.successors_in_level(root + (p,), n) for p in range(host.b)]
                for tops in itertools.product(*cands):
                    if budget:
                        budget.tick()
                    pairs.append((root, tops))
            per_coord.append(pairs)
        for chosen in itertools.product(*per_coord):
            yield VectorStrongSubtree(
                tuple(
                    StrongSubtree(host, (m, n), ((root,), tops))
                    for host, (root, tops) in zip(hosts, chosen)
                )
            )


def fans_with_root(
    r: VectorStrongSubtree, top: int, budget: Budget | None = None
) -> Iterator[VectorStrongSubtree]:
    """All vector fans of ``r`` rooted at r's root with top in r's level ``top``.

    Enumerated through direction-word addresses, so it works for any valid
    vector strong subtree of homogeneous hosts.
    """
    if not 1 <= top < r.height:
        raise TreeError(f"top index {top} out of range for height {r.height}")
    per_coord = []
    for t in r.trees:
        if not isinstance(t.host, ImplicitTree):
            raise TreeError("fan enumeration requires homogeneous hosts")
        b = t.host.b
        lookup = t.node_at_address
        cands = []
        for p in range(b):
            cands.append(
                tuple(
                    lookup[(p,) + w]
                    for w in itertools.product(range(b), repeat=top - 1)
                )
            )
        tops_choices = []
        for tops in itertools.product(*cands):
            if budget:
                budget.tick()
            tops_choices.append(tops)
        per_coord.append((t, tops_choices))
    for chosen in itertools.product(*(choices for _, choices in per_coord)):
        yield VectorStrongSubtree(
            tuple(
                StrongSubtree(t.host, (t.levels[0], t.levels[top]), ((t.root,), tops))
                for (t, _), tops in zip(per_coord, chosen)
            )
        )


def theta(bs: Sequence[int], n: int) -> int:
    """Number of vector fans with top level inside level n.

    Closed form: sum over the root level m of (root choices) times (one top
    node per direction) per coordinate.  Not taken on faith; the test suite
    pins it to the enumeration count on every small instance it touches.
    """
    vec = branching_vector(bs)
    if n < 1:
        raise TreeError(f"top level must be >= 1, got {n}")
    total = 0
    for m in range(n):
        term = 1
        for b in vec:
            term *= b**m * (b ** (n - m - 1)) ** b
        total += term
    return total


def theta_bounds_ok(bs: Sequence[int], n: int) -> bool:
    """beta^(n-1) <= theta <= 2^(beta^n) with beta the product branching."""
    vec = branching_vector(bs)
    beta = 1
    for b in vec:
        beta *= b
    value = theta(vec, n)
    return beta ** (n - 1) <= value <= 2 ** (beta**n)


def theta_sequence(
    bs: Sequence[int], eps: Fraction, b_w: int, n_max: int
) -> list[Fraction]:
    """The correlation thresholds eps / (2 b_W Theta_n) for n = 1..n_max."""
    if not 0 < eps <= 1:
        raise TreeError(f"eps must be in (0, 1], got {eps}")
    if b_w < 2:
        raise TreeError(f"b_W must be >= 2, got {b_w}")
    return [Fraction(eps, 2 * b_w * theta(bs, n)) for n in range(1, n_max + 1)]

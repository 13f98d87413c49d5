"""The two quasi-homogeneous constructions where density fails to force subtrees.

Both build an explicit finite tree together with a node set that is almost
everything level-wise yet contains no height-2 strong subtree; since any
taller strong subtree starts with a height-2 initial segment, certifying the
height-2 case up to the built depth certifies the whole finite claim.

The first tree branches (l_k + 1)-fold at depth k with the digit-0 cone
poisoned; the second lives inside the binary tree, branching fully only at
checkpoint levels while one distinguished cone keeps doubling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .budget import BudgetExceeded
from .subtrees import StrongSubtree, validate_strong, wrap
from .trees import ExplicitTree, Node, TreeError, node_text

DEFAULT_MAX_NODES = 2_000_000


@dataclass(frozen=True)
class CounterexampleInstance:
    tree: ExplicitTree
    nodes: frozenset[Node]
    params: dict
    density_bounds: tuple[tuple[int, Fraction], ...]  # (level, claimed lower bound)

    def level_density(self, n: int) -> Fraction:
        hits = sum(1 for t in self.nodes if len(t) == n)
        return Fraction(hits, self.tree.level_size(n))

    def check_density_bounds(self) -> list[tuple[int, Fraction, Fraction, bool]]:
        """Recompute each claimed per-level bound; (level, bound, actual, ok)."""
        out = []
        for level, bound in self.density_bounds:
            actual = self.level_density(level)
            out.append((level, bound, actual, actual >= bound))
        return out


def baire_example(
    eps: Fraction, depth: int, max_nodes: int = DEFAULT_MAX_NODES
) -> CounterexampleInstance:
    """Fast-branching tree whose nonzero-digit set is (1-eps)-dense levelwise.

    Branching at depth k is l_k + 1 with l_k = ceil(2^(k+1)/eps) - 1, so the
    digit-0 slices lose total mass at most sum eps/2^(k+1) <= eps.  The set
    keeps the nodes with every digit nonzero; below any member, the whole
    0-direction cone is disjoint from the set, which is why no node can cover
    all of its directions one level up.
    """
    if not 0 < eps <= 1:
        raise TreeError(f"eps must be in (0, 1], got {eps}")
    if depth < 1:
        raise TreeError("depth must be >= 1")
    ls = [math.ceil(Fraction(2 ** (k + 1), eps)) - 1 for k in range(depth)]
    sizes = [1]
    for k in range(depth):
        sizes.append(sizes[-1] * (ls[k] + 1))
        if sizes[-1] > max_nodes:
            raise BudgetExceeded("node", max_nodes)
    counts = [[ls[k] + 1] * sizes[k] for k in range(depth)]
    counts.append([0] * sizes[depth])
    tree = ExplicitTree(counts)
    chosen = [
        t
        for n in range(1, depth + 1)
        for t in tree.level_nodes(n)
        if all(d != 0 for d in t)
    ]
    bounds = tuple((n, 1 - eps) for n in range(1, depth + 1))
    return CounterexampleInstance(
        tree=tree,
        nodes=frozenset(chosen),
        params={"eps": eps, "depth": depth, "l": tuple(ls)},
        density_bounds=bounds,
    )


def _min_checkpoint_gap(k: int, m_k: int) -> int:
    """Least x with 2^(x-1) >= (2^(k+1) - 1) * (2 M_k - 1)."""
    need = (2 ** (k + 1) - 1) * (2 * m_k - 1)
    return 1 + (need - 1).bit_length()


def cantor_example(
    stages: int, max_nodes: int = DEFAULT_MAX_NODES
) -> CounterexampleInstance:
    """Binary-tree construction with checkpoint levels and a doubling cone.

    Checkpoint levels l_k and sizes M_k solve the stage recurrences with each
    l_(k+1) minimal; between checkpoints only the cone above the all-ones
    node of length l_k + 1 branches.  The set collects, per stage, the
    checkpoint-level nodes inside that cone.
    """
    if stages < 1:
        raise TreeError("stages must be >= 1")
    ls = [0]
    ms = [1]
    for k in range(stages):
        gap = _min_checkpoint_gap(k, ms[k])
        ls.append(ls[k] + gap)
        ms.append((2 * ms[k] - 1) + 2 ** (gap - 1))
    height = ls[stages] + 1

    counts: list[list[int]] = []
    levels: list[list[Node]] = [[()]]
    checkpoints = set(ls)
    for n in range(height - 1):
        layer = levels[n]
        if n in checkpoints:
            row = [2] * len(layer)
        else:
            k = max(j for j in range(stages + 1) if ls[j] < n)
            cone_root = (1,) * (ls[k] + 1)
            row = [2 if t[: len(cone_root)] == cone_root else 1 for t in layer]
        counts.append(row)
        nxt = [t + (i,) for t, c in zip(layer, row) for i in range(c)]
        if len(nxt) > max_nodes:
            raise BudgetExceeded("node", max_nodes)
        levels.append(nxt)
    counts.append([0] * len(levels[height - 1]))
    tree = ExplicitTree(counts)

    chosen: list[Node] = []
    for k in range(stages):
        cone_root = (1,) * (ls[k] + 1)
        chosen.extend(
            t for t in tree.level_nodes(ls[k + 1]) if t[: len(cone_root)] == cone_root
        )
    bounds = tuple(
        (ls[k + 1], 1 - Fraction(1, 2 ** (k + 1))) for k in range(stages)
    )
    return CounterexampleInstance(
        tree=tree,
        nodes=frozenset(chosen),
        params={"stages": stages, "l": tuple(ls), "M": tuple(ms)},
        density_bounds=bounds,
    )


def check_checkpoint_sizes(instance: CounterexampleInstance) -> bool:
    """Checkpoint levels must have exactly the recurrence sizes."""
    ls = instance.params["l"]
    ms = instance.params["M"]
    return all(instance.tree.level_size(l) == m for l, m in zip(ls, ms))


def check_perfect(instance: CounterexampleInstance) -> tuple[int, int]:
    """Count nodes certified to have two incomparable successors in range.

    A node branches no later than the next checkpoint level; only nodes whose
    next checkpoint fits inside the built depth can be certified either way.
    Returns (checked, passed); the built depth truncates the rest.
    """
    tree = instance.tree
    ls = instance.params["l"]
    checked = passed = 0
    for n in range(tree.height - 1):
        horizon_candidates = [l for l in ls if l >= n]
        if not horizon_candidates:
            continue
        horizon = horizon_candidates[0] + 1
        if horizon >= tree.height:
            continue
        for t in tree.level_nodes(n):
            checked += 1
            succ = tree.successors_in_level(t, horizon)
            if len(succ) >= 2:
                passed += 1
    return checked, passed


@dataclass(frozen=True)
class Height2Certificate:
    certified: bool
    depth: int                      # number of levels inspected (tree height)
    witness: StrongSubtree | None = None

    @property
    def status(self) -> str:
        return "certified-none" if self.certified else "witness"


def verify_no_height2(
    tree: ExplicitTree, nodes: frozenset[Node]
) -> Height2Certificate:
    """Exhaustively certify that no height-2 strong subtree sits inside the set.

    For every set member as root and every higher built level, a witness
    needs one set node above each child of the root, all on that level; the
    lex-least such witness is returned when one exists.
    """
    for t in nodes:
        if not tree.contains(t):
            raise TreeError(f"set node {node_text(t)} is not in the tree")
    by_level: dict[int, list[Node]] = {}
    for t in sorted(nodes):
        by_level.setdefault(len(t), []).append(t)
    for root_level in sorted(by_level):
        for root in by_level[root_level]:
            children = tree.children(root)
            if not children:
                continue
            for top_level in range(root_level + 1, tree.height):
                level_nodes = by_level.get(top_level)
                if not level_nodes:
                    continue
                picks = []
                for child in children:
                    k = len(child)
                    cover = next(
                        (u for u in level_nodes if u[:k] == child), None
                    )
                    if cover is None:
                        picks = []
                        break
                    picks.append(cover)
                if picks:
                    witness = StrongSubtree(
                        tree, (root_level, top_level), ((root,), tuple(sorted(picks)))
                    )
                    if validate_strong(witness):
                        raise TreeError("verifier assembled an invalid witness")
                    return Height2Certificate(False, tree.height, witness)
    return Height2Certificate(True, tree.height)

"""Finite witness searches, the avoidance-extremal table, and the extractor.

All searches share the tie-breaking contract: the first witness in the
deterministic order of ``enumerate_strong`` (lex on level sets, then lex on
node matrices coordinate-major) is the one returned.  Budgets turn overruns
into "resource-bounded-unknown" outcomes, never silent wrong answers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .budget import Budget, BudgetExceeded
from .selections import Element, ProductSubset
from .subtrees import (
    StrongSubtree,
    VectorStrongSubtree,
    _as_hosts,
    enumerate_strong,
    validate_vector_strong,
    wrap,
)
from .trees import (
    ImplicitTree,
    LevelSubset,
    Node,
    Tree,
    TreeError,
    branching_vector,
    count_extensions,
    node_text,
)

WITNESS = "witness"
EXHAUSTED = "exhausted-none"
UNKNOWN = "resource-bounded-unknown"


@dataclass(frozen=True)
class SearchOutcome:
    status: str
    witness: VectorStrongSubtree | None = None
    nodes_expanded: int = 0
    elapsed: float = 0.0
    detail: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.status == WITNESS


@dataclass(frozen=True)
class Coloring:
    """A total finite coloring of the level product of finite hosts."""

    hosts: tuple[Tree, ...]
    height: int
    colors: Mapping[Element, int]
    num_colors: int

    @classmethod
    def create(
        cls, hosts, height: int, colors: Mapping[Element, int], num_colors: int | None = None
    ) -> "Coloring":
        host_tuple = _as_hosts(hosts)
        seen = 0
        for m in range(height):
            for el in itertools.product(*(h.level_nodes(m) for h in host_tuple)):
                c = colors.get(el)
                if c is None or c < 0:
                    raise TreeError(f"missing color for element at level {m}")
                seen = max(seen, c + 1)
        return cls(host_tuple, height, dict(colors), num_colors or seen)


def _first_witness(
    hosts: tuple[Tree, ...],
    n: int,
    k: int,
    accept: Callable[[int, list[tuple[Node, ...]], Element], bool],
    budget: Budget | None,
) -> VectorStrongSubtree | None:
    """Backtracking DFS for the lex-least accepted subtree.

    ``accept(j, layers, root)`` vets the level-j product once every
    coordinate has its level-j layer; pruning happens while the last
    coordinate is being grown, which preserves the enumeration order.
    """
    d = len(hosts)

    for levels in itertools.combinations(range(n), k):
        matrices: list[tuple[tuple[Node, ...], ...] | None] = [None] * d

        def grow(i: int) -> VectorStrongSubtree | None:
            host = hosts[i]

            def extend(matrix: list[tuple[Node, ...]]) -> VectorStrongSubtree | None:
                j = len(matrix)
                if j == k:
                    matrices[i] = tuple(matrix)
                    if i + 1 == d:
                        return VectorStrongSubtree(
                            tuple(
                                StrongSubtree(h, levels, m)
                                for h, m in zip(hosts, matrices)
                            )
                        )
                    found = grow(i + 1)
                    if found is None:
                        matrices[i] = None
                    return found
                if j == 0:
                    cand: list[tuple[Node, ...]] = [host.level_nodes(levels[0])]
                else:
                    cand = []
                    for s in matrix[-1]:
                        for child in host.children(s):
                            succ = host.successors_in_level(child, levels[j])
                            if not succ:
                                return None
                            cand.append(succ)
                for layer in itertools.product(*cand):
                    if budget:
                        budget.tick()
                    if i + 1 == d:
                        peers = [matrices[x][j] for x in range(d - 1)]  # type: ignore[index]
                        own_root = layer[0] if j == 0 else matrix[0][0]
                        root = tuple(
                            matrices[x][0][0] for x in range(d - 1)  # type: ignore[index]
                        ) + (own_root,)
                        if not accept(j, peers + [layer], root):
                            continue
                    found = extend(matrix + [layer])
                    if found is not None:
                        return found
                return None

            return extend([])

        found = grow(0)
        if found is not None:
            return found
    return None


def _root_of(matrices_layers: list[tuple[Node, ...]]) -> Element:
    return tuple(layer[0] for layer in matrices_layers)


def hl_search(coloring: Coloring, k: int, budget: Budget | None = None) -> SearchOutcome:
    """Lex-least height-k vector strong subtree with monochromatic product."""
    budget = budget or Budget()

    def accept(j: int, layers: list[tuple[Node, ...]], root: Element) -> bool:
        target = coloring.colors[root]
        return all(
            coloring.colors[el] == target for el in itertools.product(*layers)
        )

    try:
        witness = _first_witness(coloring.hosts, coloring.height, k, accept, budget)
    except BudgetExceeded as exc:
        return SearchOutcome(UNKNOWN, nodes_expanded=budget.nodes, elapsed=budget.elapsed(),
                             detail={"limit": str(exc)})
    if witness is None:
        return SearchOutcome(EXHAUSTED, nodes_expanded=budget.nodes, elapsed=budget.elapsed())
    _reverify_monochromatic(coloring, witness)
    return SearchOutcome(WITNESS, witness=witness, nodes_expanded=budget.nodes,
                         elapsed=budget.elapsed())


def _reverify_monochromatic(coloring: Coloring, vs: VectorStrongSubtree) -> None:
    if validate_vector_strong(vs):
        raise TreeError("search produced an invalid subtree")
    seen = {coloring.colors[el] for el in vs.elements()}
    if len(seen) != 1:
        raise TreeError("search produced a non-monochromatic subtree")


def dhl_witness_search(
    d: ProductSubset, k: int, budget: Budget | None = None
) -> SearchOutcome:
    """Lex-least height-k vector strong subtree with level product inside D."""
    budget = budget or Budget()

    def accept(j: int, layers: list[tuple[Node, ...]], root: Element) -> bool:
        return all(el in d for el in itertools.product(*layers))

    try:
        witness = _first_witness(d.hosts, d.height, k, accept, budget)
    except BudgetExceeded as exc:
        return SearchOutcome(UNKNOWN, nodes_expanded=budget.nodes, elapsed=budget.elapsed(),
                             detail={"limit": str(exc)})
    if witness is None:
        return SearchOutcome(EXHAUSTED, nodes_expanded=budget.nodes, elapsed=budget.elapsed())
    if validate_vector_strong(witness) or not all(el in d for el in witness.elements()):
        raise TreeError("search produced an invalid witness")
    return SearchOutcome(WITNESS, witness=witness, nodes_expanded=budget.nodes,
                         elapsed=budget.elapsed())


@dataclass(frozen=True)
class ExtremalResult:
    value: Fraction
    witness: ProductSubset
    nodes_expanded: int


def _digit_symmetries(bs: tuple[int, ...]) -> list[tuple[tuple[int, ...], ...]]:
    """Digit-permutation automorphisms: one digit permutation per coordinate."""
    return list(itertools.product(*(list(itertools.permutations(range(b))) for b in bs)))


def _apply_symmetry(sym, el: Element) -> Element:
    return tuple(
        tuple(perm[digit] for digit in t) for perm, t in zip(sym, el)
    )


def avoidance_extremal(
    bs: Sequence[int],
    n: int,
    k: int,
    budget: Budget | None = None,
    use_symmetry: bool = True,
) -> ExtremalResult:
    """Largest min-per-level density of a set avoiding all height-k subtrees.

    Complete branch-and-bound over per-level subsets.  Digit-permutation
    symmetry only thins the level-1 choices (any set has an automorphic image
    with canonical level-1 part, and the objective is symmetry invariant);
    a brute-force oracle in the test suite guards the pruning.
    """
    vec = branching_vector(bs)
    if not 1 <= k <= n:
        raise TreeError(f"need 1 <= k <= n, got k={k} n={n}")
    budget = budget or Budget()
    hosts = tuple(ImplicitTree(b) for b in vec)
    level_elements = [
        tuple(itertools.product(*(h.level_nodes(m) for h in hosts)))
        for m in range(n)
    ]
    by_top: dict[int, list[tuple[tuple[int, frozenset[Element]], ...]]] = {}
    for vs in enumerate_strong(vec, n, k, budget):
        per_level = tuple(
            (lv, frozenset(vs.level_product(j))) for j, lv in enumerate(vs.levels)
        )
        by_top.setdefault(vs.levels[-1], []).append(per_level)

    syms = _digit_symmetries(vec) if use_symmetry else []
    nontrivial_syms = [s for s in syms if any(p != tuple(range(len(p))) for p in s)]

    def canonical_level1(subset: tuple[Element, ...]) -> bool:
        key = subset
        for sym in nontrivial_syms:
            image = tuple(sorted(_apply_symmetry(sym, el) for el in subset))
            if image < key:
                return False
        return True

    best_value = Fraction(-1)
    best_levels: list[frozenset[Element]] | None = None
    chosen: list[frozenset[Element]] = []

    def dfs(m: int, running_min: Fraction) -> None:
        nonlocal best_value, best_levels
        if m == n:
            if running_min > best_value:
                best_value = running_min
                best_levels = list(chosen)
            return
        elements = level_elements[m]
        size = len(elements)
        for take in range(size, -1, -1):
            if min(running_min, Fraction(take, size)) <= best_value:
                break  # smaller subsets only lower the bound further
            for subset in itertools.combinations(elements, take):
                budget.tick()
                dens = Fraction(take, size)
                new_min = min(running_min, dens)
                if new_min <= best_value:
                    continue
                if m == 1 and nontrivial_syms and not canonical_level1(subset):
                    continue
                subset_set = frozenset(subset)
                contained = False
                for per_level in by_top.get(m, ()):  # subtrees finishing at m
                    if all(
                        elems <= (subset_set if lv == m else chosen[lv])
                        for lv, elems in per_level
                    ):
                        contained = True
                        break
                if contained:
                    continue
                chosen.append(subset_set)
                dfs(m + 1, new_min)
                chosen.pop()

    dfs(0, Fraction(1))
    assert best_levels is not None
    witness = ProductSubset.create(
        hosts, n, (el for layer in best_levels for el in layer)
    )
    return ExtremalResult(best_value, witness, budget.nodes)


@dataclass(frozen=True)
class DhlNumberResult:
    """Either the exact least threshold index or a certified lower bound."""

    status: str                       # "exact" | "lower-bound"
    value: int
    table: tuple[tuple[int, Fraction], ...]


def dhl_number(
    eps: Fraction,
    k: int,
    bs: Sequence[int],
    n_budget: int,
    budget: Budget | None = None,
) -> DhlNumberResult:
    """Least N with every deeper host forcing a height-k subtree at density eps.

    Uses the extremal table: the avoidance value is non-increasing in the
    host height (truncating an avoiding set preserves avoidance and cannot
    lower its min density), so the first height where it drops below eps
    settles every later height.
    """
    if not 0 < eps <= 1:
        raise TreeError(f"eps must be in (0, 1], got {eps}")
    if k < 1:
        raise TreeError(f"k must be >= 1, got {k}")
    vec = branching_vector(bs)
    table: list[tuple[int, Fraction]] = []
    last = Fraction(2)
    for n in range(1, n_budget + 1):
        if n < k:
            f = Fraction(1)  # no height-k subtree fits inside n levels
        else:
            f = avoidance_extremal(vec, n, k, budget=budget).value
        table.append((n, f))
        if f > last:
            raise TreeError("extremal table is not non-increasing; internal error")
        last = f
        if f < eps:
            return DhlNumberResult("exact", n - 1, tuple(table))
    return DhlNumberResult("lower-bound", n_budget, tuple(table))


def extract_1d(
    level_subsets: Sequence[LevelSubset],
    eps: Fraction,
    height_goal: int,
    w_min: int,
    budget: Budget | None = None,
) -> SearchOutcome:
    """Greedy one-dimensional extraction of a strong subtree inside the data.

    Stage thresholds follow the square recursion from the input density; the
    window requirement ("at least w_min later provided levels keep every
    direction above the stage threshold") is the finite surrogate for the
    unbounded level supply the infinitary argument consumes.  The final
    level of the goal needs no window.  Failure reports the stage and
    threshold that could not be satisfied; it certifies only that the greedy
    scan failed, not that no witness exists.
    """
    if not 0 < eps <= 1:
        raise TreeError(f"eps must be in (0, 1], got {eps}")
    if height_goal < 1:
        raise TreeError("height goal must be >= 1")
    if w_min < 1:
        raise TreeError("w_min must be >= 1")
    if not level_subsets:
        raise TreeError("no levels provided")
    host = level_subsets[0].tree
    if not isinstance(host, ImplicitTree):
        raise TreeError("extraction runs on homogeneous hosts")
    b = host.b
    indices: list[int] = []
    data: dict[int, tuple[Node, ...]] = {}
    for ls in level_subsets:
        if ls.tree != host:
            raise TreeError("all levels must share one host")
        if indices and ls.level <= indices[-1]:
            raise TreeError("levels must be strictly increasing")
        indices.append(ls.level)
        data[ls.level] = ls.nodes
        if Fraction(len(ls.nodes), host.level_size(ls.level)) < eps:
            raise TreeError(f"level {ls.level} is below density {eps}")

    budget = budget or Budget()

    def rel_density(m: int, anchor: Node) -> Fraction:
        hits = count_extensions(data[m], anchor, b)
        return Fraction(hits, b ** (m - len(anchor)))

    base = Fraction(eps * eps, 8 * b**4)
    window = math.ceil(Fraction(2 * b * b, eps))
    stage_thresholds: list[Fraction] = []
    t = base
    for _ in range(max(height_goal - 1, 1)):
        stage_thresholds.append(t)
        t = Fraction(t * t, 8 * b**4)
    detail: dict = {
        "threshold": base,
        "window": window,
        "w_min": w_min,
        "stage_thresholds": list(stage_thresholds),
        "stages": [],
    }

    def future_set(after: int, pool: Sequence[int], anchors: Iterable[Node], thr: Fraction) -> list[int]:
        anchors = list(anchors)
        out = []
        for m in pool:
            if m <= after:
                continue
            if all(rel_density(m, a + (p,)) >= thr for a in anchors for p in range(b)):
                out.append(m)
        return out

    def fail(stage: int, thr: Fraction) -> SearchOutcome:
        detail["failed_stage"] = stage
        detail["failed_threshold"] = thr
        return SearchOutcome(
            EXHAUSTED, nodes_expanded=budget.nodes, elapsed=budget.elapsed(), detail=detail
        )

    # Stage 0: a root whose forward window clears the base threshold.
    chosen_levels: list[int] = []
    layers: list[tuple[Node, ...]] = []
    active: list[int] = []
    found_root = False
    for m in indices:
        for t0 in data[m]:
            budget.tick()
            if height_goal == 1:
                chosen_levels, layers = [m], [(t0,)]
                found_root = True
                break
            fut = future_set(m, indices, [t0], stage_thresholds[0])
            if len(fut) >= w_min:
                chosen_levels, layers = [m], [(t0,)]
                active = fut
                found_root = True
                break
        if found_root:
            break
    if not found_root:
        return fail(0, stage_thresholds[0] if height_goal > 1 else Fraction(0))
    detail["stages"].append(
        {"stage": 0, "level": chosen_levels[0],
         "threshold": stage_thresholds[0] if height_goal > 1 else None,
         "active_after": len(active)}
    )

    for stage in range(1, height_goal):
        last_stage = stage == height_goal - 1
        thr = stage_thresholds[stage] if not last_stage else None
        slots = [(s, p) for s in layers[-1] for p in range(b)]
        placed = False
        for m in active:
            budget.tick()
            picks: list[Node] = []
            futures: list[list[int]] = []
            ok = True
            for s, p in slots:
                anchor = s + (p,)
                cands = [u for u in data[m] if u[: len(anchor)] == anchor]
                pick = None
                for u in cands:
                    budget.tick()
                    if last_stage:
                        pick = u
                        break
                    fut = future_set(m, active, [u], thr)  # type: ignore[arg-type]
                    if len(fut) >= w_min:
                        pick = u
                        futures.append(fut)
                        break
                if pick is None:
                    ok = False
                    break
                picks.append(pick)
            if not ok:
                continue
            if not last_stage:
                joint = set(futures[0])
                for fut in futures[1:]:
                    joint &= set(fut)
                if len(joint) < w_min:
                    continue
                active = sorted(joint)
            chosen_levels.append(m)
            layers.append(tuple(picks))
            detail["stages"].append(
                {"stage": stage, "level": m, "threshold": thr,
                 "active_after": 0 if last_stage else len(active)}
            )
            placed = True
            break
        if not placed:
            return fail(stage, thr if thr is not None else Fraction(0))

    witness = StrongSubtree(host, tuple(chosen_levels), tuple(layers))
    from .subtrees import validate_strong

    if validate_strong(witness):
        raise TreeError("extraction produced an invalid subtree")
    for lv, layer in zip(chosen_levels, layers):
        for node in layer:
            if node not in data[lv]:
                raise TreeError("extraction produced a node outside the data")
    return SearchOutcome(
        WITNESS, witness=wrap(witness), nodes_expanded=budget.nodes,
        elapsed=budget.elapsed(), detail=detail
    )

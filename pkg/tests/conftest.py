"""Shared oracles and generators.

The oracles here are deliberately independent code paths: validity is the
literal three-condition check, enumeration is generate-and-filter over all
per-level subsets, and densities are recomputed by explicit counting over
materialized levels.  Library results are compared against these, never the
other way round.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from functools import lru_cache

import pytest

from dhl.selections import Element, LevelSelection, ProductSubset, initial_vector
from dhl.subtrees import StrongSubtree, VectorStrongSubtree
from dhl.trees import ImplicitTree, Node, Tree


# ------------------------------------------------------------------ validity

def oracle_is_strong(host: Tree, levels, layers) -> bool:
    """Literal conditions (a), (b), (c) plus layer sanity, no shortcuts."""
    levels = tuple(levels)
    layers = tuple(tuple(l) for l in layers)
    if not levels or len(levels) != len(layers):
        return False
    if any(b <= a for a, b in zip(levels, levels[1:])):
        return False
    if len(layers[0]) != 1:
        return False
    for lv, layer in zip(levels, layers):
        if not layer or len(set(layer)) != len(layer):
            return False
        for t in layer:
            if len(t) != lv or not host.contains(t):
                return False
    for j in range(1, len(levels)):
        for u in layers[j]:
            ancestors = [s for s in layers[j - 1] if u[: len(s)] == s]
            if len(ancestors) != 1:
                return False
    for j in range(len(levels) - 1):
        for s in layers[j]:
            for child in host.children(s):
                covers = [u for u in layers[j + 1] if u[: len(child)] == child]
                if len(covers) != 1:
                    return False
    return True


def oracle_is_vector_strong(hosts, levels, per_coord_layers) -> bool:
    return all(
        oracle_is_strong(h, levels, layers)
        for h, layers in zip(hosts, per_coord_layers)
    )


# ------------------------------------------------------------- enumeration

@lru_cache(maxsize=None)
def oracle_all_subtrees(bs: tuple[int, ...], n: int, k: int):
    """Every valid subtree via generate-and-filter over per-level subsets.

    Exponential in the level sizes; meant for hosts no bigger than the
    acceptance instances.  Returns sorted (levels, per-coord node layers)
    keys.
    """
    hosts = tuple(ImplicitTree(b) for b in bs)
    found = []
    for levels in itertools.combinations(range(n), k):
        per_coord_options = []
        for host in hosts:
            level_subsets = []
            for lv in levels:
                nodes = host.level_nodes(lv)
                subsets = []
                for size in range(1, len(nodes) + 1):
                    subsets.extend(itertools.combinations(nodes, size))
                level_subsets.append(subsets)
            options = [
                combo
                for combo in itertools.product(*level_subsets)
                if oracle_is_strong(host, levels, combo)
            ]
            per_coord_options.append(options)
        for chosen in itertools.product(*per_coord_options):
            found.append((levels, chosen))
    found.sort()
    return found


def subtree_key(vs: VectorStrongSubtree):
    return (vs.levels, tuple(t.nodes for t in vs.trees))


def closed_form_count(bs: tuple[int, ...], n: int, k: int) -> int:
    """Independent count: root choices times per-step successor choices."""
    total = 0
    for levels in itertools.combinations(range(n), k):
        term = 1
        for b in bs:
            coord = b ** levels[0]
            for j in range(1, k):
                gap = levels[j] - levels[j - 1] - 1
                coord *= (b**gap) ** (b**j)
            term *= coord
        total += term
    return total


# --------------------------------------------------------------- searches

def oracle_first_subtree(bs, n, k, predicate):
    """First subtree in sorted key order satisfying the predicate."""
    for levels, chosen in oracle_all_subtrees(tuple(bs), n, k):
        elements = [
            el
            for j in range(k)
            for el in itertools.product(*(layers[j] for layers in chosen))
        ]
        if predicate(elements):
            return (levels, chosen)
    return None


# ------------------------------------------------------------- correlation

def oracle_fans_of(r: VectorStrongSubtree):
    """Fans of r with the same root: height-2 valid subtrees inside r's nodes."""
    host_bs = tuple(t.host.b for t in r.trees)
    out = []
    n = r.levels[-1] + 1
    for levels, chosen in oracle_all_subtrees(host_bs, n, 2):
        if levels[0] != r.levels[0] or levels[1] not in r.levels:
            continue
        ok = True
        for t, layers in zip(r.trees, chosen):
            if layers[0][0] != t.root:
                ok = False
                break
            pos = {lv: j for j, lv in enumerate(t.levels)}
            for lv, layer in zip(levels, layers):
                if not set(layer) <= t.node_sets[pos[lv]]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append((levels, chosen))
    return out


def oracle_relative_density(
    w_host: ImplicitTree, nodes: frozenset, level: int, anchor: Node
) -> Fraction:
    cone = [v for v in w_host.level_nodes(level) if v[: len(anchor)] == anchor]
    hits = [v for v in cone if v in nodes]
    return Fraction(len(hits), len(cone))


def oracle_is_correlated(
    d: LevelSelection, r: VectorStrongSubtree, w: Node, theta: Fraction
) -> bool:
    if w not in d.section(r.root):
        return False
    for levels, chosen in oracle_fans_of(r):
        tops = list(itertools.product(*(layers[1] for layers in chosen)))
        inter = set(d.section(tops[0]))
        for el in tops[1:]:
            inter &= d.section(el)
        top_target = d.target_level_of(tops[0])
        for p in range(d.target.b):
            val = oracle_relative_density(
                d.target, frozenset(inter), top_target, w + (p,)
            )
            if val < theta:
                return False
    return True


# -------------------------------------------------------------- generators

def random_selection(
    rng: random.Random,
    b: int = 2,
    height: int = 3,
    b_w: int = 2,
    spread: int = 6,
    min_density: Fraction | None = None,
) -> LevelSelection:
    """A seeded selection on the initial b-ary source of the given height."""
    source = initial_vector([b], height)
    w_host = ImplicitTree(b_w)
    targets = sorted(rng.sample(range(spread), height))
    data = {}
    for j in range(height):
        level = w_host.level_nodes(targets[j])
        for el in source.level_product(j):
            if min_density is None:
                size = rng.randint(0, len(level))
            else:
                low = -(-len(level) * min_density.numerator // min_density.denominator)
                size = rng.randint(low, len(level))
            data[el] = frozenset(rng.sample(level, size))
    return LevelSelection(source, w_host, tuple(targets), data)


def random_subtree_of_source(
    rng: random.Random, source: VectorStrongSubtree, k: int
) -> VectorStrongSubtree:
    """A seeded height-k vector strong subtree of the given source."""
    from dhl.subtrees import enumerate_strong

    bs = [t.host.b for t in source.trees]
    pool = list(enumerate_strong(bs, source.height, k))
    return pool[rng.randrange(len(pool))]


def random_product_subset(
    rng: random.Random, bs, height: int, keep: Fraction
) -> ProductSubset:
    hosts = tuple(ImplicitTree(b) for b in bs)
    chosen = []
    for m in range(height):
        for el in itertools.product(*(h.level_nodes(m) for h in hosts)):
            if rng.random() < float(keep):
                chosen.append(el)
    return ProductSubset.create(hosts, height, chosen)

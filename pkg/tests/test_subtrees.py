import itertools
import random
from fractions import Fraction

import pytest

from conftest import (
    closed_form_count,
    oracle_all_subtrees,
    oracle_is_strong,
    subtree_key,
)
from dhl.budget import Budget, BudgetExceeded
from dhl.subtrees import (
    EmbeddingStages,
    StrongSubtree,
    VectorStrongSubtree,
    canonical_isomorphism,
    directed_fan,
    enumerate_strong,
    identity_map,
    is_strong_subtree_of,
    is_vector_strong_subtree_of,
    subtree_at_direction,
    validate_strong,
    validate_vector_strong,
    vector_subtree_at_direction,
    wrap,
    zero_direction,
)
from dhl.trees import ExplicitTree, ImplicitTree, TreeError


def test_validate_full_initial_tree():
    for b in (2, 3):
        for k in (1, 2, 3):
            s = StrongSubtree.initial(ImplicitTree(b), k)
            assert validate_strong(s) == []


def test_validate_c_violation_names_uncovered_direction():
    s = StrongSubtree(ImplicitTree(2), (0, 2), (((),), ((0, 0), (0, 1))))
    violations = validate_strong(s)
    assert violations
    assert all(v.condition == "c" for v in violations)
    assert any(v.node == (1,) for v in violations)  # nothing above direction 1


def test_validate_accepts_spread_subtree():
    s = StrongSubtree(ImplicitTree(2), (0, 2), (((),), ((0, 0), (1, 0))))
    assert validate_strong(s) == []
    assert oracle_is_strong(ImplicitTree(2), s.levels, s.nodes)


def test_enumerate_counts_small():
    assert sum(1 for _ in enumerate_strong([2], 1, 1)) == 1
    assert sum(1 for _ in enumerate_strong([2], 2, 2)) == 1
    assert sum(1 for _ in enumerate_strong([2], 3, 2)) == 7


@pytest.mark.parametrize(
    "bs,n,k",
    [
        ((2,), 2, 1), ((2,), 2, 2), ((2,), 3, 2), ((2,), 3, 3),
        ((3,), 3, 2), ((2, 2), 3, 2), ((2, 3), 2, 2),
    ],
)
def test_enumerate_matches_generate_and_filter(bs, n, k):
    ours = [subtree_key(vs) for vs in enumerate_strong(bs, n, k)]
    oracle = oracle_all_subtrees(bs, n, k)
    assert ours == sorted(ours), "enumeration must be in lex order"
    assert ours == list(oracle)


@pytest.mark.parametrize(
    "bs,n,k",
    [((2,), 4, 2), ((2,), 4, 3), ((3,), 3, 3), ((2, 2), 3, 3), ((3, 3), 3, 2)],
)
def test_enumerate_matches_closed_form_count(bs, n, k):
    assert sum(1 for _ in enumerate_strong(bs, n, k)) == closed_form_count(bs, n, k)


def test_enumerated_subtrees_validate():
    for bs in ((2,), (3,), (2, 2)):
        for n in (1, 2, 3):
            for k in range(1, n + 1):
                for vs in enumerate_strong(bs, n, k):
                    assert validate_vector_strong(vs) == []


def test_enumerate_budget_exceeded():
    budget = Budget(max_nodes=5)
    with pytest.raises(BudgetExceeded):
        list(enumerate_strong([2], 4, 2, budget))


def test_enumerate_explicit_host():
    tree = ExplicitTree([[2], [1, 2], [0, 0, 0]])
    subs = list(enumerate_strong(tree, 3, 2))
    for vs in subs:
        assert validate_vector_strong(vs) == []
    # {0,1}: forced root fan; {0,2}: two covers above direction 1; {1,2}: one
    # forced subtree per level-1 root.
    keys = [subtree_key(vs) for vs in subs]
    assert keys == sorted(keys)
    assert len(subs) == 1 + 2 + 2


# ---------------------------------------------------------------- mutations

def _mutate(rng: random.Random, vs: VectorStrongSubtree) -> VectorStrongSubtree:
    """A seeded mutation guaranteed to break some validity condition."""
    i = rng.randrange(vs.d)
    t = vs.trees[i]
    host = t.host
    kinds = []

    if t.height >= 2:
        kinds.append("drop")
        kinds.append("dup_levelset")
    if t.levels[0] >= 1:
        kinds.append("extra_root")
    if any(len(layer[0]) >= 1 for layer in t.nodes[1:] or ()):
        kinds.append("digit_overflow")
    kinds.append("wrong_length")
    if vs.d >= 2:
        kinds.append("levelset_mismatch")
    kind = rng.choice(kinds)

    def rebuild(levels, layers, coord=i):
        trees = list(vs.trees)
        trees[coord] = StrongSubtree(host, tuple(levels), tuple(tuple(l) for l in layers))
        return VectorStrongSubtree(tuple(trees))

    layers = [list(layer) for layer in t.nodes]
    if kind == "drop":
        j = rng.randrange(1, t.height)
        del layers[j][rng.randrange(len(layers[j]))]
        if not layers[j]:
            layers[j] = [()]  # empty layer degenerates; keep a wrong-length node
        return rebuild(t.levels, layers)
    if kind == "dup_levelset":
        levels = list(t.levels)
        levels[-1] = levels[0]
        return rebuild(levels, layers)
    if kind == "extra_root":
        extras = [u for u in host.level_nodes(t.levels[0]) if u != t.root]
        layers[0].append(rng.choice(extras))
        return rebuild(t.levels, layers)
    if kind == "digit_overflow":
        j = rng.choice([x for x in range(1, t.height) if len(layers[x][0]) >= 1])
        pos = rng.randrange(len(layers[j]))
        node = layers[j][pos]
        layers[j][pos] = node[:-1] + (host.b,)
        return rebuild(t.levels, layers)
    if kind == "wrong_length":
        j = rng.randrange(t.height)
        pos = rng.randrange(len(layers[j]))
        layers[j][pos] = layers[j][pos] + (0,)
        return rebuild(t.levels, layers)
    assert kind == "levelset_mismatch"
    other = (i + 1) % vs.d
    shifted = tuple(lv + 1 for lv in vs.trees[other].levels)
    layers_other = [
        [(0,) * lv for lv in [shifted[j]]][0:1] * len(vs.trees[other].nodes[j])
        for j in range(vs.height)
    ]
    # Keep the other coordinate syntactically plausible: pad each node with 0.
    layers_other = [
        [node + (0,) for node in layer] for layer in vs.trees[other].nodes
    ]
    trees = list(vs.trees)
    trees[other] = StrongSubtree(vs.trees[other].host, shifted, tuple(tuple(l) for l in layers_other))
    return VectorStrongSubtree(tuple(trees))


def test_seeded_mutations_are_rejected():
    rng = random.Random(20240817)
    pool = []
    for bs in ((2,), (3,), (2, 2)):
        for n in (2, 3):
            for k in range(1, min(n, 3) + 1):
                pool.extend(enumerate_strong(bs, n, k))
    for _ in range(300):
        vs = pool[rng.randrange(len(pool))]
        mutant = _mutate(rng, vs)
        assert validate_vector_strong(mutant) != []


# ---------------------------------------------------------- canonical maps

def test_ci_identity():
    s = StrongSubtree.initial(ImplicitTree(2), 3)
    assert canonical_isomorphism(s, s) == identity_map(s)


def test_ci_spec_example():
    a = StrongSubtree.initial(ImplicitTree(2), 2)
    b = StrongSubtree(ImplicitTree(2), (0, 2), (((),), ((0, 0), (1, 0))))
    cm = canonical_isomorphism(a, b)
    assert cm.apply(()) == ()
    assert cm.apply((0,)) == (0, 0)
    assert cm.apply((1,)) == (1, 0)


def test_ci_preserves_lex_and_prefix_on_all_pairs():
    host = ImplicitTree(2)
    targets = [vs.trees[0] for vs in enumerate_strong([2], 4, 3)]
    a = StrongSubtree.initial(host, 3)
    rng = random.Random(7)
    for b in rng.sample(targets, min(len(targets), 20)):
        cm = canonical_isomorphism(a, b)
        nodes = [t for layer in a.nodes for t in layer]
        for u, v in itertools.combinations(nodes, 2):
            fu, fv = cm.apply(u), cm.apply(v)
            if len(u) == len(v):
                assert (u < v) == (fu < fv)
            assert (u == v[: len(u)]) == (fu == fv[: len(fu)])


def test_ci_composition():
    pool = [vs.trees[0] for vs in enumerate_strong([2], 4, 2)]
    rng = random.Random(11)
    for _ in range(20):
        a, b, c = (pool[rng.randrange(len(pool))] for _ in range(3))
        ab = canonical_isomorphism(a, b)
        bc = canonical_isomorphism(b, c)
        ac = canonical_isomorphism(a, c)
        assert bc.compose(ab) == ac
        assert ab.inverse().compose(ab) == identity_map(a)


def test_ci_requires_same_branching_and_height():
    a = StrongSubtree.initial(ImplicitTree(2), 2)
    b = StrongSubtree.initial(ImplicitTree(3), 2)
    with pytest.raises(TreeError):
        canonical_isomorphism(a, b)
    c = StrongSubtree.initial(ImplicitTree(2), 3)
    with pytest.raises(TreeError):
        canonical_isomorphism(a, c)


# ------------------------------------------------------------- directions

def test_subtree_at_direction_basic():
    z = StrongSubtree.initial(ImplicitTree(2), 3)
    z0 = subtree_at_direction(z, 0)
    assert z0.root == (0,)
    assert z0.height == 2
    assert validate_strong(z0) == []
    assert all(t[0] == 0 for layer in z0.nodes for t in layer)
    z1 = subtree_at_direction(z, 1)
    assert z1.root == (1,)
    assert len(z1.level_nodes(1)) == 2
    with pytest.raises(TreeError):
        subtree_at_direction(z, 2)
    with pytest.raises(TreeError):
        subtree_at_direction(z0, 0) and subtree_at_direction(
            StrongSubtree.initial(ImplicitTree(2), 1), 0
        )


def test_directed_fan_examples():
    z = StrongSubtree.initial(ImplicitTree(2), 3)
    f = directed_fan((0,), z)
    assert f.nodes == (((),), ((0,), (1,)))
    f2 = directed_fan((0, 1), z)
    assert f2.nodes == (((),), ((0, 1), (1, 1)))


def test_directed_fans_validate_and_contain_source_exhaustively():
    for vs in enumerate_strong([2], 3, 3):
        z = vs.trees[0]
        cone0 = subtree_at_direction(z, 0)
        for node in sorted(cone0.all_nodes):
            fan = directed_fan(node, z)
            assert validate_strong(fan) == []
            assert fan.root == z.root
            assert node in fan.level_nodes(1)


def test_is_strong_subtree_of():
    host = ImplicitTree(2)
    s = StrongSubtree.initial(host, 3)
    for vs in enumerate_strong([2], 3, 2):
        assert is_strong_subtree_of(vs.trees[0], s)
    not_nested = StrongSubtree(host, (0, 2), (((),), ((0, 0), (1, 0))))
    inner = StrongSubtree(host, (0, 1), (((),), ((0,), (1,))))
    assert is_strong_subtree_of(inner, s)
    assert not is_strong_subtree_of(s, not_nested)


# -------------------------------------------------------------- embeddings

def _two_stage_configs():
    """All nested two-stage configurations over the height-3 binary host."""
    s0 = VectorStrongSubtree((StrongSubtree.initial(ImplicitTree(2), 3),))
    configs = []
    for r0 in enumerate_strong([2], 3, 3):
        if not is_vector_strong_subtree_of(r0, s0):
            continue
        stages1 = EmbeddingStages(s0, [r0])
        s1 = stages1.source(1)
        inner_keys = oracle_all_subtrees((2,), s1.height, s1.height)
        for r1 in enumerate_strong([2], 3, 2):
            if not is_vector_strong_subtree_of(r1, s1):
                continue
            configs.append(EmbeddingStages(s0, [r0, r1]))
    return configs


def test_two_stage_configs_exist():
    assert len(_two_stage_configs()) == 1  # the full tree forces both stages


def test_embedding_empty_word_is_identity():
    s0 = VectorStrongSubtree((StrongSubtree.initial(ImplicitTree(2), 3),))
    stages = EmbeddingStages(s0, [s0])
    h = stages.embedding([])
    for j in range(3):
        for el in s0.level_product(j):
            assert h.apply(el) == el


def test_embedding_zero_word_is_inclusion():
    for stages in _two_stage_configs():
        for length in (1, 2):
            h = stages.embedding([(0,)] * length)
            src = stages.source(length)
            for j in range(src.height):
                for el in src.level_product(j):
                    assert h.apply(el) == el


def test_embedding_composition_law():
    from dhl.subtrees import vector_canonical_isomorphism

    for stages in _two_stage_configs():
        for nlen in (0, 1):
            r_n = stages.stages[nlen]
            cone0 = vector_subtree_at_direction(r_n, zero_direction(r_n))
            words = itertools.product([(0,), (1,)], repeat=nlen)
            for word in words:
                base = stages.embedding(list(word))
                for p in range(2):
                    ci = vector_canonical_isomorphism(
                        cone0, vector_subtree_at_direction(r_n, (p,))
                    )
                    ext = stages.embedding(list(word) + [(p,)])
                    src = stages.source(nlen + 1)
                    for j in range(src.height):
                        for el in src.level_product(j):
                            assert ext.apply(el) == base.apply(ci.apply(el))


def test_embedding_level_preserving_and_lex_monotone():
    for stages in _two_stage_configs():
        for length in (1, 2):
            src = stages.source(length)
            words = sorted(itertools.product(range(2), repeat=length))
            maps = {w: stages.coordinate_embedding(0, list(w)) for w in words}
            for node in (t for layer in src.trees[0].nodes for t in layer):
                images = [maps[w].apply(node) for w in words]
                assert all(len(img) == len(node) for img in images)  # (P3)
                assert images == sorted(images)  # (P2): word order is lex


def test_embedding_rejects_bad_stages():
    s0 = VectorStrongSubtree((StrongSubtree.initial(ImplicitTree(2), 3),))
    outside = VectorStrongSubtree(
        (StrongSubtree(ImplicitTree(2), (0, 1), (((),), ((0,), (1,)))),)
    )
    stages = EmbeddingStages(s0, [s0])
    with pytest.raises(TreeError):
        EmbeddingStages(s0, [s0, outside])  # not nested in S1
    with pytest.raises(TreeError):
        stages.embedding([(0,), (0,)])  # word longer than stages

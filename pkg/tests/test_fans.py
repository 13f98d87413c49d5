import itertools
from fractions import Fraction

import pytest

from conftest import oracle_all_subtrees, subtree_key
from dhl.fans import enumerate_fans, fans_with_root, theta, theta_bounds_ok, theta_sequence
from dhl.subtrees import (
    StrongSubtree,
    canonical_isomorphism,
    enumerate_strong,
    validate_vector_strong,
)
from dhl.trees import ImplicitTree, TreeError


def oracle_fan_count(bs, n):
    """Fans = height-2 subtrees with top level exactly n (independent path)."""
    return sum(
        1
        for levels, _ in oracle_all_subtrees(tuple(bs), n + 1, 2)
        if levels[1] == n
    )


@pytest.mark.parametrize(
    "bs,n,expected",
    [((2,), 1, 1), ((2,), 2, 6), ((3,), 1, 1), ((2, 2), 1, 1), ((2, 2), 2, 20)],
)
def test_theta_frozen_values(bs, n, expected):
    assert theta(bs, n) == expected
    assert sum(1 for _ in enumerate_fans(bs, n)) == expected


@pytest.mark.parametrize(
    "bs,n", [((2,), 1), ((2,), 2), ((2,), 3), ((3,), 1), ((3,), 2), ((2, 2), 2)]
)
def test_theta_equals_oracle_count(bs, n):
    assert theta(bs, n) == oracle_fan_count(bs, n)


def test_fans_are_valid_height2_subtrees_with_top_in_level():
    for bs, n in (((2,), 2), ((2,), 3), ((2, 2), 2)):
        seen = set()
        for fan in enumerate_fans(bs, n):
            assert validate_vector_strong(fan) == []
            assert fan.height == 2
            assert fan.levels[1] == n
            key = subtree_key(fan)
            assert key not in seen
            seen.add(key)


def test_enumeration_order_is_deterministic_lex():
    keys = [subtree_key(fan) for fan in enumerate_fans([2], 3)]
    assert keys == sorted(keys)


def test_theta_monotone_and_bounds():
    for bs in ((2,), (3,), (2, 2)):
        values = [theta(bs, n) for n in range(1, 6)]
        assert all(a <= b for a, b in zip(values, values[1:]))
        assert all(theta_bounds_ok(bs, n) for n in range(1, 6))


def test_theta_bounds_spec_point():
    beta = 2
    assert beta ** (2 - 1) <= theta([2], 2) <= 2 ** (beta**2)


def test_fan_count_invariant_under_subtree_transport():
    # |fan(S, n)| must equal theta for any strong subtree S of the host:
    # transport the host's fans through the canonical isomorphism.
    host = ImplicitTree(2)
    initial = StrongSubtree.initial(host, 4)
    for vs in list(enumerate_strong([2], 5, 4))[:12]:
        s = vs.trees[0]
        cm = canonical_isomorphism(initial, s)
        for n in (1, 2, 3):
            transported = set()
            for fan in enumerate_fans([2], n):
                f = fan.trees[0]
                transported.add(
                    (tuple(cm.apply(t) for t in f.level_nodes(0)),
                     tuple(cm.apply(t) for t in f.level_nodes(1)))
                )
            assert len(transported) == theta([2], n)


def test_fans_with_root_counts():
    # Fans of a height-h subtree anchored at its root: per direction, any of
    # the b^(j-1) top-level nodes in that direction cone.
    for vs in list(enumerate_strong([2], 4, 3))[:6]:
        fans1 = list(fans_with_root(vs, 1))
        fans2 = list(fans_with_root(vs, 2))
        assert len(fans1) == 1
        assert len(fans2) == (2 ** 1) ** 2
        for fan in fans1 + fans2:
            assert validate_vector_strong(fan) == []
            assert fan.root == vs.root


def test_theta_sequence_spec_values():
    seq = theta_sequence([2], Fraction(1), 2, 2)
    assert seq == [Fraction(1, 4), Fraction(1, 24)]


def test_theta_sequence_monotone_nonincreasing():
    for bs in ((2,), (3,), (2, 2)):
        seq = theta_sequence(bs, Fraction(2, 3), 3, 6)
        assert all(a >= b for a, b in zip(seq, seq[1:]))


def test_theta_sequence_validates_inputs():
    with pytest.raises(TreeError):
        theta_sequence([2], Fraction(0), 2, 3)
    with pytest.raises(TreeError):
        theta_sequence([2], Fraction(1, 2), 1, 3)

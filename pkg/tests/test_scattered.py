import pytest

from lfcover import bits
from lfcover.errors import NotKScattered
from lfcover.gamederive import (
    ALL,
    DISCRETE,
    SINGLETONS,
    KClass,
    decomposition_tree,
    is_k_scattered,
    k_derivative,
    k_derivative_chain,
    k_rank,
    top_set,
)
from lfcover.gamederive.scattered import decomposition_pieces, has_k_neighbourhood
from lfcover.space import discrete, enumerate_spaces, indiscrete, make_space, sierpinski, subspace

CHAIN3 = make_space(3, [(), (2,), (1, 2), (0, 1, 2)])


def spaces_upto(n):
    return [s for k in range(1, n + 1) for s in enumerate_spaces(k)]


def shape(tree):
    return [(n.parent, n.label) for n in tree.nodes]


def test_sierpinski_singletons():
    s = sierpinski()
    assert k_derivative(s, SINGLETONS) == 0b01
    assert k_rank(s, SINGLETONS) == 2


def test_discrete_and_all():
    d = discrete(3)
    assert k_derivative(d, SINGLETONS) == 0 and k_rank(d, SINGLETONS) == 1
    for sp in spaces_upto(3):
        assert k_derivative(sp, ALL) == 0
        assert is_k_scattered(sp, ALL)


def test_not_scattered():
    ind = indiscrete(2)
    assert not is_k_scattered(ind, SINGLETONS)
    with pytest.raises(NotKScattered):
        k_rank(ind, SINGLETONS)
    with pytest.raises(NotKScattered):
        decomposition_tree(ind, SINGLETONS, 5)
    assert is_k_scattered(ind, DISCRETE) is False


def test_derivative_requires_closed():
    with pytest.raises(ValueError):
        k_derivative(sierpinski(), SINGLETONS, 0b10)


def test_rank_one_tree_is_root_only():
    assert shape(decomposition_tree(discrete(3), SINGLETONS, 5)) == [(None, 0b111)]


def test_sierpinski_tree_conventions():
    s = sierpinski()
    assert shape(decomposition_tree(s, SINGLETONS, 5, "ambient")) == [(None, 3), (0, 1)]
    assert shape(decomposition_tree(s, SINGLETONS, 5)) == [(None, 3), (0, 1), (0, 2)]


def test_chain_space_tree():
    assert k_rank(CHAIN3, SINGLETONS) == 3
    assert k_derivative_chain(CHAIN3, SINGLETONS) == [0b111, 0b011, 0b001, 0]
    assert top_set(CHAIN3, SINGLETONS) == 0b001
    assert shape(decomposition_tree(CHAIN3, SINGLETONS, 5)) == [(None, 7), (0, 1), (0, 6), (2, 2), (2, 4)]
    assert shape(decomposition_tree(CHAIN3, SINGLETONS, 5, "ambient")) == [(None, 7), (0, 1)]


def test_bad_convention():
    with pytest.raises(ValueError):
        decomposition_pieces(CHAIN3, SINGLETONS, 7, "sideways")


def test_non_hereditary_class_searches_supersets():
    pairs = KClass("pairs", lambda space, s: s.bit_count() == 2, hereditary=False)
    d = discrete(3)
    assert has_k_neighbourhood(d, pairs, 0b111, 0)
    assert not has_k_neighbourhood(d, pairs, 0b001, 0)


def test_builtins_are_closed_hereditary():
    for sp in spaces_upto(3):
        for k in (SINGLETONS, DISCRETE, ALL):
            for s in bits.nonempty_subsets(sp.carrier):
                if not k(sp, s):
                    continue
                for c in bits.nonempty_subsets(s):
                    if sp.relative_closure(s, c) == c:
                        assert k(sp, c)


def test_derivative_properties():
    for sp in spaces_upto(4):
        for k in (SINGLETONS, DISCRETE):
            for s in sp.closeds:
                if not s:
                    continue
                d = k_derivative(sp, k, s)
                assert d & ~s == 0
                assert sp.relative_closure(s, d) == d
                for t in sp.closeds:
                    if t and t & ~s == 0:
                        # monotone on closed sets
                        assert k_derivative(sp, k, t) & ~d == 0
            if is_k_scattered(sp, k):
                r = k_rank(sp, k)
                for c in sp.closeds:
                    if c:
                        assert k_rank(sp, k, c) <= r


def test_rank_inside_subspace():
    for sp in spaces_upto(3):
        for s in bits.nonempty_subsets(sp.carrier):
            sub, _ = subspace(sp, s)
            assert is_k_scattered(sp, SINGLETONS, s) == is_k_scattered(sub, SINGLETONS)
            if is_k_scattered(sub, SINGLETONS):
                assert k_rank(sp, SINGLETONS, s) == k_rank(sub, SINGLETONS)


def test_tree_labels_are_closed_and_nested():
    for sp in spaces_upto(4):
        if not is_k_scattered(sp, SINGLETONS):
            continue
        for conv in ("relative", "ambient"):
            t = decomposition_tree(sp, SINGLETONS, 10, conv)
            for n in t.nodes:
                if n.parent is not None:
                    parent = t.by_id[n.parent].label
                    assert n.label & ~parent == 0 and n.label != parent
                    top = top_set(sp, SINGLETONS, parent)
                    within = parent & ~top if conv == "relative" and n.label != top else parent
                    assert sp.relative_closure(within, n.label) == n.label

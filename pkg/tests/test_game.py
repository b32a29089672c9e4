import random

import pytest

from lfcover import bits
from lfcover.cover import minimal_neighbourhood_cover
from lfcover.config import budget_override
from lfcover.errors import BudgetExceeded, IllegalMove, InvalidCover, InvalidStrategy
from lfcover.gamederive import (
    cover_refining_subtree,
    game_successors,
    game_tree,
    is_partition_complete,
    make_strategy,
    phi_derivative,
    phi_derivative_chain,
    play_game,
)
from lfcover.space import discrete, enumerate_spaces, from_neighbourhoods, sierpinski

S = sierpinski()
D2 = discrete(2)


def spaces_upto(n):
    return [s for k in range(1, n + 1) for s in enumerate_spaces(k)]


def test_sierpinski_strategy_variants():
    least = make_strategy(S)
    assert least(0b11) == 0b11 and phi_derivative(least, 0b11) == 0
    isolated = make_strategy(S, "minimal-open")
    assert isolated(0b11) == 0b10 and phi_derivative(isolated, 0b11) == 0b01
    assert game_successors(isolated, 0b11) == [0b01]
    assert phi_derivative_chain(isolated) == [0b11, 0b01, 0]


def test_maximal_strategy_successors():
    st = make_strategy(D2, "table", table=[0, 1, 2, 3])
    assert phi_derivative(st, 3) == 0
    assert sorted(game_successors(st, 3)) == [1, 2, 3]


def test_successors_are_relatively_closed():
    for sp in spaces_upto(3):
        st = make_strategy(sp)
        for s in bits.nonempty_subsets(sp.carrier):
            for c in game_successors(st, s):
                assert c and c & ~s == 0
                assert sp.relative_closure(s, c) == c


def test_strategy_validation():
    with pytest.raises(InvalidStrategy) as exc:
        make_strategy(D2, "table", table=[0, 1, 3, 3])
    assert exc.value.subset == 2
    with pytest.raises(InvalidStrategy):
        make_strategy(S, "table", table=[0, 1, 2, 1])
    with pytest.raises(InvalidStrategy):
        make_strategy(D2, "table", table={1: 1})
    with pytest.raises(ValueError):
        make_strategy(D2, "nonsense")
    with budget_override(max_strategy_points=1):
        with pytest.raises(BudgetExceeded):
            make_strategy(D2)


def test_exhaustive_source():
    for sp in spaces_upto(4):
        make_strategy(sp, "exhaustive", cover=minimal_neighbourhood_cover(sp))
        make_strategy(sp, "minimal")
        make_strategy(sp, "minimal-open")
    with pytest.raises(InvalidStrategy):
        make_strategy(S, "exhaustive", cover=[0b01])


def test_refine_subtree_examples():
    whole = cover_refining_subtree(D2, make_strategy(D2), [3])
    assert len(whole.tree.nodes) == 1
    split = cover_refining_subtree(D2, make_strategy(D2), [1, 2], mode="cover")
    assert split.refines_cover and sorted(n.label for n in split.tree.leaves()) == [1, 2]
    sier = cover_refining_subtree(S, make_strategy(S), [2, 3])
    assert len(sier.tree.nodes) == 1 and sier.refines_directed


def test_refine_subtree_rejects_non_open():
    with pytest.raises(InvalidCover):
        cover_refining_subtree(S, make_strategy(S), [1, 2])
    with pytest.raises(ValueError):
        cover_refining_subtree(D2, make_strategy(D2), [3], mode="sideways")


def test_refine_subtree_cover_mode_reports_deficits():
    # point 0 is chosen at the root and only regrows inside the whole carrier
    sp = from_neighbourhoods([0b001, 0b010, 0b101])
    res = cover_refining_subtree(sp, make_strategy(sp), [0b011, 0b101], mode="cover")
    assert res.deficits == ((0, 0b001),)
    assert res.refines_cover and res.refines_directed
    assert sorted(n.label for n in res.tree.leaves()) == [0b010, 0b100]


def test_play_game_examples():
    st = make_strategy(D2)
    res = play_game(D2, st, lambda r, prev: prev, 1)
    assert res.winner == "II" and len(res.transcript) == 1
    with pytest.raises(IllegalMove) as exc:
        play_game(D2, make_strategy(D2, "minimal-open"), lambda r, prev: 3 if r == 1 else 2, 3)
    assert exc.value.player == "I"
    with pytest.raises(IllegalMove):
        play_game(D2, st, lambda r, prev: 0, 2)
    with pytest.raises(ValueError):
        play_game(D2, st, lambda r, prev: prev, 0)


def test_play_game_random_suppliers():
    rng = random.Random(2)
    for sp in spaces_upto(3):
        st = make_strategy(sp, rng.choice(["minimal", "minimal-open"]))

        def player_one(r, prev):
            subs = list(bits.nonempty_subsets(prev))
            return rng.choice(subs)

        res = play_game(sp, st, player_one, 6)
        assert res.winner == "II" and res.cluster


def test_partition_complete_examples():
    w = is_partition_complete(discrete(3))
    assert w.validated and w.exhaustive_cover == (1, 2, 4)
    w = is_partition_complete(S)
    assert w.validated and w.exhaustive_cover == (0b10, 0b11)
    assert w.left_open_partition == (0b10, 0b01)


def test_game_tree_root_and_label():
    t = game_tree(S, make_strategy(S, "minimal-open"))
    assert t.root == 3 and t.label(3) == 3
    with pytest.raises(ValueError):
        game_tree(D2, make_strategy(S))

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfcover import bits
from lfcover.cert import verify_certificate
from lfcover.cover import is_normal_cover, reduced_open_covers
from lfcover.errors import (
    EmptyInput,
    HypothesisViolated,
    InvalidCover,
    NotNormal,
    NotProperSubset,
    NotSupercomplete,
    SupportsNotDisjoint,
)
from lfcover.preunif import make_preuniformity
from lfcover.prodcomb import (
    as_box,
    basic_set,
    box_set,
    dense_union_check,
    disjoint_support_intersection,
    extension_refinement_check,
    finite_blocker,
    finite_blocker_relative,
    inclusion_lemma_check,
    is_basic_open,
    maximal_boxes,
    min_hitting_set,
    neighbourhood_box,
    normal_cover_certificate,
    realize,
    regular_open_cover_extension,
    support,
)
from lfcover.space import discrete, from_neighbourhoods, product, sierpinski

from oracles import box_points, min_hitting_set_size

D2 = discrete(2)
S = sierpinski()
P3 = product([D2, D2, D2])
P2 = product([D2, D2])


def finest(space):
    return make_preuniformity(space, [bits.reduce_family(space.neighbourhoods)])


def test_support_and_realize():
    b = basic_set(P3, {0: [0]})
    assert support(b) == (0,)
    assert realize(b) == box_points([2, 2, 2], [1, 3, 3])
    whole = basic_set(P3, {0: [0, 1], 2: 3})
    assert support(whole) == () and realize(whole) == P3.carrier
    empty = basic_set(P3, {0: [0], 1: []})
    assert support(empty) == (0, 1) and realize(empty) == 0


def test_basic_set_validation():
    with pytest.raises(ValueError):
        basic_set(P3, {3: [0]})
    assert as_box(P2, 0) is None
    assert as_box(P2, 0b0110) is None
    assert realize(as_box(P2, 0b0011)) == 0b0011


def test_neighbourhood_boxes():
    sp = product([S, D2])
    for x in range(sp.n):
        nb = neighbourhood_box(sp, x)
        assert realize(nb) == sp.neighbourhoods[x] and is_basic_open(nb)
    assert not is_basic_open(basic_set(sp, {0: [0]}))


def test_intersection_examples():
    a, b = basic_set(P3, {0: [0]}), basic_set(P3, {1: [1]})
    v = disjoint_support_intersection(a, b)
    assert v.nonempty and v.brute_force and v.shared == ()
    c = basic_set(P3, {0: [1], 2: [0]})
    v = disjoint_support_intersection(a, c)
    assert not v.nonempty and not v.brute_force and v.shared == (0,)
    v = disjoint_support_intersection(a, basic_set(P3, {}))
    assert v.nonempty and v.brute_force
    with pytest.raises(EmptyInput):
        disjoint_support_intersection(a, basic_set(P3, {0: []}))


def test_intersection_criterion_two_factor_exhaustive():
    sp = product([S, discrete(3)])
    sets = [box_set(sp, [x, y]) for x in range(1, 4) for y in range(1, 8)]
    for a, b in itertools.product(sets, sets):
        v = disjoint_support_intersection(a, b)
        assert v.nonempty == v.brute_force


def test_dense_examples():
    # on a discrete product the union of two proper boxes is closed and proper
    v = dense_union_check([basic_set(P3, {0: [0]}), basic_set(P3, {1: [1]})])
    assert not v.dense and not v.applicable and not v.falsified
    assert dense_union_check([basic_set(P3, {})]).dense
    ss = product([S, S])
    v = dense_union_check([[basic_set(ss, {0: [1]})], [basic_set(ss, {1: [1]})]])
    assert v.dense


def test_dense_escape_instance():
    sp = product([D2, S])
    # the open point of the second factor escapes the first support
    v = dense_union_check([basic_set(sp, {1: [1]})])
    assert v.dense


def test_dense_errors():
    with pytest.raises(SupportsNotDisjoint):
        dense_union_check([basic_set(P3, {0: [0]}), basic_set(P3, {0: [1]})])
    with pytest.raises(EmptyInput):
        dense_union_check([])
    with pytest.raises(EmptyInput):
        dense_union_check([basic_set(P3, {0: []})])


def test_inclusion_examples():
    whole = P2.carrier
    v = inclusion_lemma_check(P2, 0b0101, whole, [], [basic_set(P2, {})])
    assert v.included
    r = P2.preimage(0, 0b01)
    v = inclusion_lemma_check(P2, r, r, [0], [basic_set(P2, {0: [0], 1: [0]}), basic_set(P2, {0: [0]})])
    assert v.included and v.applicable


def test_inclusion_hypotheses():
    ss = product([S, S])
    with pytest.raises(HypothesisViolated) as exc:
        inclusion_lemma_check(ss, ss.carrier, 0b1000, [], [basic_set(ss, {})])
    assert exc.value.clause == "R regular open"
    with pytest.raises(HypothesisViolated) as exc:
        inclusion_lemma_check(P2, 1, P2.preimage(0, 1), [], [basic_set(P2, {0: [0, 1], 1: [1]})])
    assert exc.value.clause == "inside R"
    with pytest.raises(HypothesisViolated) as exc:
        inclusion_lemma_check(
            P2, P2.carrier, P2.carrier, [], [basic_set(P2, {0: [0]}), basic_set(P2, {0: [1]})]
        )
    assert exc.value.clause == "disjoint supports"
    with pytest.raises(HypothesisViolated) as exc:
        inclusion_lemma_check(P2, P2.carrier, P2.carrier, [0], [basic_set(P2, {0: [0]})])
    assert exc.value.clause == "projection"
    with pytest.raises(HypothesisViolated) as exc:
        inclusion_lemma_check(ss, 0b0001, ss.carrier, [], [basic_set(ss, {})])
    assert exc.value.clause == "G open"


def test_blocker_examples():
    r = P2.carrier & ~(1 << P2.point((1, 1)))
    blk = finite_blocker(P2, r)
    assert blk.indices == (0, 1)
    assert sorted(map(sorted, (s for s, _ in blk.hits))) == [[0], [1]]
    assert finite_blocker(P2, P2.preimage(1, 0b01)).indices == (1,)
    assert finite_blocker(P2, 0).indices == ()
    with pytest.raises(NotProperSubset):
        finite_blocker(P2, P2.carrier)
    ss = product([S, S])
    with pytest.raises(HypothesisViolated):
        finite_blocker(ss, 0b1000)


def test_blocker_hits_and_is_minimal():
    for sp in (P2, product([S, D2]), product([D2, discrete(3)])):
        for r in sp.opens:
            if r == sp.carrier or sp.interior(sp.closure(r)) != r:
                continue
            blk = finite_blocker(sp, r)
            idx = set(blk.indices)
            supports = [
                frozenset(i for i, s in enumerate(b) if s != sp.factors[i].carrier)
                for b in maximal_boxes(sp, r)
            ]
            assert all(s & idx for s in supports)
            for k in idx:
                assert not all(s & (idx - {k}) for s in supports)


def test_relative_blocker():
    r = P2.preimage(0, 0b01)
    blk = finite_blocker_relative(P2, P2.carrier, r, [])
    assert blk.indices == (0,)
    with pytest.raises(HypothesisViolated):
        finite_blocker_relative(P2, r, r, [])


def test_maximal_boxes_against_brute_force():
    sp = product([S, D2])
    for r in range(1 << sp.n):
        inside = [
            (a, b)
            for a in range(1, 4)
            for b in range(1, 4)
            if box_points([2, 2], [a, b]) & ~r == 0
        ]
        expected = [
            x for x in inside if not any(y != x and x[0] & ~y[0] == 0 and x[1] & ~y[1] == 0 for y in inside)
        ]
        assert sorted(maximal_boxes(sp, r)) == sorted(expected)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sets(st.integers(0, 6), min_size=1, max_size=4), min_size=1, max_size=7))
def test_min_hitting_set_is_minimum(sets):
    hit = set(min_hitting_set(sets))
    assert all(hit & s for s in sets)
    assert len(hit) == min_hitting_set_size(sets)


def test_min_hitting_set_rejects_empty_member():
    with pytest.raises(ValueError):
        min_hitting_set([{1}, set()])
    assert min_hitting_set([]) == ()


def test_extension_examples():
    d3 = discrete(3)
    r = (1, 2, 4)
    assert regular_open_cover_extension(d3, r) == r
    assert extension_refinement_check(d3, r, r, r)
    s = S
    assert regular_open_cover_extension(s, (0b10, 0b11)) == (0b11,)
    assert extension_refinement_check(s, (0b10, 0b11), (0b11,), (0b11,))


def test_extension_hypotheses():
    d3 = discrete(3)
    with pytest.raises(HypothesisViolated) as exc:
        extension_refinement_check(d3, (7,), (1, 6), (1, 6))
    assert exc.value.clause == "R refines V1"
    with pytest.raises(HypothesisViolated) as exc:
        extension_refinement_check(S, (0b10,), (0b11,), (0b11,))
    assert exc.value.clause == "R open cover"
    sp = product([S, D2])
    covs = reduced_open_covers(sp)
    a = next(c for c in covs if len(c) == 2 and bits.union(c) == sp.carrier and c[0] & c[1])
    with pytest.raises(HypothesisViolated) as exc:
        extension_refinement_check(sp, a, a, a)
    assert exc.value.clause == "V1 double star refines V"


def test_pipeline_singletons():
    res = normal_cover_certificate([(D2, finest(D2))] * 2, (1, 2, 4, 8))
    assert verify_certificate(res.certificate) and verify_certificate(res.directed_certificate)
    assert bits.refines(bits.canonical(n.label for n in res.certificate.tree.leaves()), (1, 2, 4, 8))
    assert res.blocker == (0, 1)
    assert res.end_star_sizes[-1] == 0 and len(res.end_star_sizes) <= res.stage_bound


def test_pipeline_whole_cover_is_depth_one():
    res = normal_cover_certificate([(D2, finest(D2))] * 2, (15,))
    assert res.certificate.tree.depth() == 1 and verify_certificate(res.certificate)


def test_pipeline_errors():
    zig = from_neighbourhoods([0b0001, 0b0010, 0b0111, 0b1011])
    factors = [(zig, finest(zig)), (D2, finest(D2))]
    p = product([zig, D2])
    v = bits.canonical(p.preimage(0, e) for e in (0b0111, 0b1011))
    assert not is_normal_cover(p, v).result
    with pytest.raises(NotNormal):
        normal_cover_certificate(factors, v)
    with pytest.raises(NotSupercomplete):
        normal_cover_certificate([(D2, make_preuniformity(D2, [(3,)]))] * 2, (15,))
    with pytest.raises(ValueError):
        normal_cover_certificate([(D2, make_preuniformity(D2, [(1, 2)], "prefilter"))] * 2, (15,))
    with pytest.raises(InvalidCover):
        normal_cover_certificate([(D2, finest(D2))] * 2, (1, 2))


def test_pipeline_mixed_factors():
    rng = random.Random(4)
    sp = product([S, D2, D2])
    factors = [(S, finest(S)), (D2, finest(D2)), (D2, finest(D2))]
    opens = [o for o in sp.opens if o]
    seen = 0
    while seen < 8:
        picked = []
        while bits.union(picked) != sp.carrier:
            picked.append(rng.choice(opens))
        v = bits.reduce_family(picked)
        if not is_normal_cover(sp, v).result:
            continue
        seen += 1
        res = normal_cover_certificate(factors, v)
        assert verify_certificate(res.certificate)
        assert bits.refines(bits.canonical(n.label for n in res.certificate.tree.leaves()), v)

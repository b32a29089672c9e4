import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfcover import bits
from lfcover.cert import (
    CoverTree,
    LambdaCertificate,
    LazyTree,
    Node,
    certificate_from_json,
    certificate_to_json,
    certify_membership,
    ends,
    is_noetherian_within,
    neighbourhood_induction,
    tree_from_lazy,
    verify_certificate,
)
from lfcover.config import budget_override
from lfcover.errors import BudgetExceeded, NotInLambda, PreconditionFailed
from lfcover.gamederive import game_tree, make_strategy
from lfcover.preunif import PreUniformity, lambda_coreflection, make_preuniformity, membership
from lfcover.space import discrete

from oracles import all_reduced_covers

X3 = discrete(3)
A = (0b011, 0b110)
B = (0b101, 0b010)


def one_step(mu, target, idx=0):
    nodes = [Node(0, None, mu.space.carrier, (idx,))]
    nodes += [Node(i + 1, 0, e) for i, e in enumerate(mu.basis[idx])]
    return LambdaCertificate(CoverTree(tuple(nodes)), target, mu)


def test_depth_one_certificate():
    mu = make_preuniformity(X3, [A])
    assert verify_certificate(one_step(mu, A))
    v = verify_certificate(one_step(mu, (1, 2, 4)))
    assert not v and v.reason == "ends do not refine target"
    assert ends(one_step(mu, A).tree) == A


def test_mixed_two_level_certificate():
    mu = make_preuniformity(X3, [A, B], "prefilter")
    target = bits.meet(A, B)
    assert not membership(mu, target)
    cert = certify_membership(mu, target)
    assert verify_certificate(cert)
    assert cert.tree.depth() == 2
    assert all(n.witness is None or len(n.witness) == 1 for n in cert.tree.nodes)


def test_stage_zero_member_gets_depth_one():
    mu = make_preuniformity(X3, [A, B], "prefilter")
    cert = certify_membership(mu, A)
    assert verify_certificate(cert) and cert.tree.depth() == 1


def test_not_in_lambda():
    mu = make_preuniformity(X3, [A])
    with pytest.raises(NotInLambda):
        certify_membership(mu, (1, 2, 4))


def test_verifier_reports_structure_errors():
    mu = make_preuniformity(X3, [A])
    good = one_step(mu, A)
    nodes = list(good.tree.nodes)
    cases = {
        "duplicate node id": nodes + [Node(1, 0, 1)],
        "expected one root, found 2": nodes + [Node(9, None, 7)],
        "parent does not exist": nodes + [Node(9, 42, 1)],
        "root label is not the covered set": [dataclasses.replace(nodes[0], label=3)] + nodes[1:],
        "leaf carries a witness": [nodes[0], dataclasses.replace(nodes[1], witness=(0,)), nodes[2]],
        "internal node without witness": [dataclasses.replace(nodes[0], witness=None)] + nodes[1:],
        "witness index out of range": [dataclasses.replace(nodes[0], witness=(3,))] + nodes[1:],
        "children are not the witness traces of the label": nodes[:2],
    }
    for reason, ns in cases.items():
        v = verify_certificate(LambdaCertificate(CoverTree(tuple(ns)), A, mu))
        assert not v and v.reason == reason, reason


def test_verifier_rejects_cycles():
    mu = make_preuniformity(X3, [A])
    ns = list(one_step(mu, A).tree.nodes) + [Node(7, 8, 1), Node(8, 7, 1)]
    v = verify_certificate(LambdaCertificate(CoverTree(tuple(ns)), A, mu))
    assert not v and "cycle" in v.reason


def test_verifier_rejects_non_least_witness():
    mu = make_preuniformity(X3, [A, A], "filter")
    cert = one_step(mu, A, idx=1)
    v = verify_certificate(cert)
    assert not v and v.reason == "witness is not the least index list for its split"


def all_certificates(n, seed, count):
    rng = random.Random(seed)
    covs = all_reduced_covers(n)
    for _ in range(count):
        basis = tuple(rng.sample(covs, rng.randint(1, 3)))
        mu = PreUniformity(discrete(n), basis, rng.choice(["filter", "prefilter"]))
        lam, trace = lambda_coreflection(mu)
        for c in covs:
            if membership(lam, c):
                yield certify_membership(mu, c, trace=trace)
            else:
                with pytest.raises(NotInLambda):
                    certify_membership(mu, c, trace=trace)


def test_soundness_and_completeness_sample():
    for cert in all_certificates(3, 11, 60):
        assert verify_certificate(cert)
        assert bits.refines(ends(cert.tree), cert.target)


def test_json_roundtrip():
    mu = make_preuniformity(X3, [A, B], "prefilter")
    cert = certify_membership(mu, bits.meet(A, B))
    obj = certificate_to_json(cert)
    back = certificate_from_json(obj)
    assert back == cert and certificate_to_json(back) == obj
    with pytest.raises(ValueError):
        certificate_from_json({"nodes": []})


def trivial_cert(mu, n):
    return LambdaCertificate(CoverTree((Node(0, None, n),)), (n,), mu, n)


def test_induction_degenerate():
    mu = make_preuniformity(X3, [A])
    res = neighbourhood_induction(mu, 7, [7], {7: (7, trivial_cert(mu, 7))})
    assert res.union == 7 and verify_certificate(res.certificate)
    assert res.uniform is not None and verify_certificate(res.uniform)


def test_induction_discrete_singleton():
    d2 = discrete(2)
    mu = make_preuniformity(d2, [(1, 2)])
    res = neighbourhood_induction(mu, 1, [1], {1: (1, trivial_cert(mu, 1))})
    assert res.union == 1 and res.star == 1
    assert verify_certificate(res.certificate)
    assert res.uniform is not None and verify_certificate(res.uniform)


def test_induction_second_clause_can_fail():
    # two points each with a private neighbourhood, joined by a cross piece
    # that the shared target does not contain
    f = (0b0101, 0b1010, 0b1100)
    g = (0b0101, 0b1010)
    mu = make_preuniformity(discrete(4), [f])

    def cert_over(n):
        return LambdaCertificate(CoverTree((Node(0, None, n),)), g, mu, n)

    res = neighbourhood_induction(mu, 0b0011, [0b01, 0b10], {0b01: (0b0101, cert_over(0b0101)), 0b10: (0b1010, cert_over(0b1010))})
    assert res.union == 0b1111 and verify_certificate(res.certificate)
    assert res.uniform is None
    assert res.reason == "end {2,3} misses the set and lies in no target element"


def test_induction_preconditions():
    mu = make_preuniformity(X3, [A])
    with pytest.raises(PreconditionFailed) as exc:
        neighbourhood_induction(mu, 0b011, [0b001], {})
    assert exc.value.clause == "relative_cover"
    with pytest.raises(PreconditionFailed) as exc:
        neighbourhood_induction(mu, 0b011, [0b001, 0b010], {})
    assert exc.value.clause == "relative_cover"
    with pytest.raises(PreconditionFailed) as exc:
        neighbourhood_induction(mu, 7, [7], {})
    assert exc.value.clause == "neighbourhoods"
    with pytest.raises(PreconditionFailed) as exc:
        neighbourhood_induction(mu, 1, [1], {1: (1, trivial_cert(mu, 1))})
    assert exc.value.clause == "neighbourhoods"


def test_game_tree_is_not_noetherian():
    d2 = discrete(2)
    tree = game_tree(d2, make_strategy(d2))
    v = is_noetherian_within(tree.successors, tree.root, 10)
    assert not v and len(v.chain) == 10
    for a, b in zip(v.chain, v.chain[1:]):
        assert b in tree.successors(a)


def test_finite_tree_is_noetherian():
    succ = {0: [1, 2], 1: [3], 2: [], 3: []}
    v = is_noetherian_within(lambda x: succ[x], 0, 4)
    assert v and str(v) == "Noetherian within budget 4"
    t = tree_from_lazy(LazyTree(0, lambda x: succ[x], lambda x: 1 << x), 4)
    assert [n.parent for n in t.nodes] == [None, 0, 0, 1]
    assert not is_noetherian_within(lambda x: succ[x], 0, 3)
    with pytest.raises(BudgetExceeded):
        tree_from_lazy(LazyTree(0, lambda x: succ[x]), 3)
    with pytest.raises(ValueError):
        is_noetherian_within(lambda x: [], 0, 0)


basis_st = st.lists(st.sampled_from(all_reduced_covers(3)), min_size=1, max_size=3)


@settings(max_examples=60, deadline=None)
@given(basis_st, st.sampled_from(["filter", "prefilter"]), st.data())
def test_mutated_label_bits_are_rejected(basis, mode, data):
    mu = PreUniformity(X3, tuple(basis), mode)
    lam, trace = lambda_coreflection(mu)
    members = [c for c in all_reduced_covers(3) if membership(lam, c)]
    cert = certify_membership(mu, data.draw(st.sampled_from(members)), trace=trace)
    if len(cert.tree.nodes) == 1:
        return
    k = data.draw(st.integers(0, len(cert.tree.nodes) - 1))
    b = data.draw(st.integers(0, 2))
    nodes = list(cert.tree.nodes)
    nodes[k] = dataclasses.replace(nodes[k], label=nodes[k].label ^ (1 << b))
    bad = LambdaCertificate(CoverTree(tuple(nodes)), cert.target, mu, cert.over)
    assert not verify_certificate(bad)


def test_meet_depth_budget_is_respected():
    mu = make_preuniformity(X3, [A, B], "prefilter")
    with budget_override(meet_depth=1):
        cert = certify_membership(mu, bits.meet(A, B))
    assert verify_certificate(cert)

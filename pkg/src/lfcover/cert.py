"""Labelled trees of subsets and λ-membership certificates.

A certificate is a finite tree whose root is labelled by the covered set.
Each internal node names a list of basis indices; its children must be
labelled by exactly the maximal non-empty traces of that meet on the
node's label. The leaf labels then form a cover that refines the target.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

from . import bits
from .bits import Family
from .cover import Cover
from .errors import BudgetExceeded, NotInLambda, PreconditionFailed
from .preunif import (
    DerivationTrace,
    PreUniformity,
    lambda_coreflection,
    membership,
    preunif_from_json,
    preunif_to_json,
)


@dataclass(frozen=True)
class Node:
    id: int
    parent: int | None
    label: int
    witness: tuple[int, ...] | None = None


@dataclass(frozen=True)
class CoverTree:
    nodes: tuple[Node, ...]

    @cached_property
    def by_id(self) -> dict[int, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def children(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            if n.parent is not None and n.parent in out:
                out[n.parent].append(n.id)
        return out

    @property
    def root(self) -> Node:
        return next(n for n in self.nodes if n.parent is None)

    def leaves(self) -> list[Node]:
        kids = self.children
        return [n for n in self.nodes if not kids[n.id]]

    def depth(self) -> int:
        best = 0
        level = {self.root.id: 0}
        for n in self._topological():
            for c in self.children[n]:
                level[c] = level[n] + 1
                best = max(best, level[c])
        return best

    def _topological(self) -> list[int]:
        order = [self.root.id]
        for nid in order:
            order.extend(self.children[nid])
        return order


def ends(tree: CoverTree) -> Family:
    """Labels of the maximal nodes, as a canonical family over the root label."""
    return bits.canonical(n.label for n in tree.leaves())


@dataclass(frozen=True)
class LambdaCertificate:
    tree: CoverTree
    target: Family
    preuniformity: PreUniformity
    over: int | None = None

    @property
    def covered(self) -> int:
        return self.preuniformity.space.carrier if self.over is None else self.over

    def ends(self) -> Cover:
        return Cover(self.preuniformity.space, ends(self.tree), self.covered)


@dataclass(frozen=True)
class Verification:
    ok: bool
    node: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _traces(basis: Sequence[Family], label: int, witness: Iterable[int]) -> Family:
    """Maximal non-empty traces on ``label`` of the meet of the named covers."""
    fam: Family = (label,)
    for i in witness:
        fam = bits.reduce_family(bits.meet(fam, bits.restrict(basis[i], label)))
    return fam


def least_witness(
    basis: Sequence[Family], label: int, expected: Family, single: bool, max_len: int | None = None
) -> tuple[int, ...] | None:
    """Least index list in (length, lexicographic) order whose traces are ``expected``.

    Only covers refined by ``expected`` that split ``label`` can occur in a
    least list: a member that does not split can be dropped.
    """
    traces = [bits.reduce_family(bits.restrict(b, label)) for b in basis]
    if expected == (label,):
        return next(((i,) for i, t in enumerate(traces) if t == expected), None)
    useful = [i for i, t in enumerate(traces) if t != (label,) and bits.refines(expected, t)]
    sizes = range(1, 2) if single else range(1, len(useful) + 1 if max_len is None else min(max_len, len(useful)) + 1)
    for size in sizes:
        for combo in itertools.combinations(useful, size):
            fam: Family = (label,)
            for i in combo:
                fam = bits.reduce_family(bits.meet(fam, traces[i]))
            if fam == expected:
                return combo
    return None


def verify_certificate(cert: LambdaCertificate) -> Verification:
    """Check the tree shape, every node's split, and the final refinement."""
    mu = cert.preuniformity
    basis = mu.basis
    carrier = mu.space.carrier
    nodes = cert.tree.nodes
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        return Verification(False, None, "duplicate node id")
    roots = [n for n in nodes if n.parent is None]
    if len(roots) != 1:
        return Verification(False, None, f"expected one root, found {len(roots)}")
    root = roots[0]
    by_id = {n.id: n for n in nodes}
    for n in nodes:
        if n.parent is not None and n.parent not in by_id:
            return Verification(False, n.id, "parent does not exist")
    kids: dict[int, list[Node]] = {n.id: [] for n in nodes}
    for n in nodes:
        if n.parent is not None:
            kids[n.parent].append(n)
    reached = {root.id}
    queue = [root.id]
    for nid in queue:
        for c in kids[nid]:
            if c.id in reached:
                return Verification(False, c.id, "node reached twice")
            reached.add(c.id)
            queue.append(c.id)
    if len(reached) != len(nodes):
        stray = min(set(by_id) - reached)
        return Verification(False, stray, "node not reachable from the root (cycle)")
    if root.label != cert.covered:
        return Verification(False, root.id, "root label is not the covered set")
    single = mu.mode == "prefilter"
    for nid in queue:
        n = by_id[nid]
        if not n.label or n.label & ~carrier:
            return Verification(False, nid, "label is empty or leaves the carrier")
        children = kids[nid]
        if not children:
            if n.witness is not None:
                return Verification(False, nid, "leaf carries a witness")
            continue
        w = n.witness
        if not w:
            return Verification(False, nid, "internal node without witness")
        if any(not isinstance(i, int) or i < 0 or i >= len(basis) for i in w):
            return Verification(False, nid, "witness index out of range")
        if any(a >= b for a, b in zip(w, w[1:])):
            return Verification(False, nid, "witness indices not strictly increasing")
        if single and len(w) != 1:
            return Verification(False, nid, "prefilter witness must name one basis cover")
        expected = _traces(basis, n.label, w)
        labels = [c.label for c in children]
        if len(set(labels)) != len(labels):
            return Verification(False, nid, "duplicate sibling labels")
        if set(labels) != set(expected):
            return Verification(False, nid, "children are not the witness traces of the label")
        if least_witness(basis, n.label, expected, single, len(w)) != tuple(w):
            return Verification(False, nid, "witness is not the least index list for its split")
    leaves = [by_id[nid] for nid in queue if not kids[nid]]
    for leaf in leaves:
        if not any(leaf.label & ~t == 0 for t in cert.target):
            return Verification(False, leaf.id, "ends do not refine target")
    return Verification(True)


class _Builder:
    """Grows a certificate tree by splitting nodes with basis meets."""

    def __init__(self, mu: PreUniformity, root_label: int):
        self.mu = mu
        self.labels = [root_label]
        self.parents: list[int | None] = [None]
        self.witness: list[tuple[int, ...] | None] = [None]

    def canonical(self, label: int, idxs: tuple[int, ...]) -> tuple[int, tuple[int, ...]] | None:
        basis = self.mu.basis
        target = _traces(basis, label, idxs)
        if target == (label,):
            return None
        found = least_witness(basis, label, target, self.mu.mode == "prefilter", len(idxs))
        assert found is not None, "witness search missed the given index list"
        return target, found

    def split(self, node: int, idxs: Sequence[int]) -> list[int]:
        """Split a leaf by the meet of ``idxs``; a split that changes nothing is skipped."""
        if self.witness[node] is not None:
            raise AssertionError("node already split")
        found = self.canonical(self.labels[node], tuple(sorted(set(idxs))))
        if found is None:
            return [node]
        pieces, wit = found
        self.witness[node] = wit
        out = []
        for p in pieces:
            self.labels.append(p)
            self.parents.append(node)
            self.witness.append(None)
            out.append(len(self.labels) - 1)
        return out

    def replay(
        self,
        node: int,
        tree: CoverTree,
        source: int,
        index_map: Sequence[int] | None = None,
        lift: Callable[[int], int] | None = None,
    ) -> list[int]:
        """Copy the splits below ``source`` onto ``node``.

        ``lift`` carries source labels into this builder's carrier (identity
        by default) and must contain the label of ``node``; ``index_map``
        translates source witness indices.
        """
        src = tree.by_id[source]
        if src.witness is None or not tree.children[source]:
            return [node]
        lift = lift or (lambda m: m)
        wit = src.witness if index_map is None else [index_map[i] for i in src.witness]
        out = []
        kid_labels = [(lift(tree.by_id[c].label), c) for c in tree.children[source]]
        for child in self.split(node, wit):
            lab = self.labels[child]
            match = next(c for l, c in kid_labels if lab & ~l == 0)
            if child == node:
                return self.replay(node, tree, match, index_map, lift)
            out.extend(self.replay(child, tree, match, index_map, lift))
        return out

    def rebase(self, mu: PreUniformity) -> None:
        """Switch to a presentation extending the current basis; witnesses are recomputed."""
        if mu.basis[: len(self.mu.basis)] != self.mu.basis:
            raise ValueError("new presentation must extend the current basis")
        self.mu = mu
        for node, wit in enumerate(self.witness):
            if wit is not None:
                found = self.canonical(self.labels[node], wit)
                assert found is not None
                self.witness[node] = found[1]

    def freeze(self) -> CoverTree:
        return CoverTree(
            tuple(
                Node(i, p, l, w)
                for i, (p, l, w) in enumerate(zip(self.parents, self.labels, self.witness))
            )
        )


class _TraceReplay:
    def __init__(self, builder: _Builder, trace: DerivationTrace):
        self.b = builder
        self.trace = trace

    def grow_meet(self, node: int, stage: int, idxs: Sequence[int]) -> list[int]:
        if stage == 0:
            return self.b.split(node, idxs)
        frontier = [node]
        for i in idxs:
            frontier = [e for f in frontier for e in self.grow(f, stage, i)]
        return frontier

    def grow(self, node: int, stage: int, idx: int) -> list[int]:
        if stage == 0:
            return self.b.split(node, (idx,))
        origin = self.trace.origins[stage][idx]
        out = []
        nu_stage = stage - 1 if self.trace.fast else 0
        for e in self.grow_meet(node, stage - 1, origin.parent):
            label = self.b.labels[e]
            nu = next(ix for u, ix in origin.pieces if label & ~u == 0)
            out.extend(self.grow_meet(e, nu_stage, nu))
        return out


def certify_membership(
    mu: PreUniformity, v: Cover | Iterable[int], trace: DerivationTrace | None = None
) -> LambdaCertificate:
    """Build a certificate for ``v`` by replaying the λ derivation."""
    fam = v.elements if isinstance(v, Cover) else tuple(v)
    if trace is None or trace.stages[0] != mu:
        _, trace = lambda_coreflection(mu)
    # the earliest stage holding the cover gives the shallowest replay
    for stage, pre in enumerate(trace.stages):
        m = membership(pre, fam)
        if m:
            break
    else:
        raise NotInLambda(f"{bits.fmt_family(fam)} is not a λ-cover")
    builder = _Builder(mu, mu.space.carrier)
    _TraceReplay(builder, trace).grow_meet(0, stage, m.witness)
    return LambdaCertificate(builder.freeze(), bits.canonical(fam), mu)


def _finest_lambda_covers(mu: PreUniformity) -> tuple[DerivationTrace, list[Family]]:
    lam, trace = lambda_coreflection(mu)
    if lam.mode == "filter":
        return trace, [lam.full_meet]
    return trace, list(lam.basis)


@dataclass(frozen=True)
class NeighbourhoodInduction:
    """Result of combining neighbourhoods over a relative λ-cover.

    ``certificate`` certifies a λ-cover ``W`` with ``St(A, W) ⊆ union``.
    ``uniform`` certifies the common target over ``St(A, W)`` when that
    holds; otherwise it is None and ``reason`` names the obstruction.
    """

    union: int
    certificate: LambdaCertificate
    star: int
    uniform: LambdaCertificate | None
    reason: str = ""


def neighbourhood_induction(
    mu: PreUniformity,
    a: int,
    relative_cover: Iterable[int],
    neighbourhoods: Mapping[int, tuple[int, LambdaCertificate]],
) -> NeighbourhoodInduction:
    """Combine λ-neighbourhoods of the pieces of a relative λ-cover of ``a``.

    ``neighbourhoods[v] = (n_v, cert_v)`` where ``n_v`` is a λ-neighbourhood
    of ``v`` and ``cert_v`` (rooted at ``n_v``) shows that a target cover
    shared by all entries is λ-uniform over ``n_v``.
    """
    space = mu.space
    rel = bits.canonical(relative_cover)
    if bits.union(rel) & ~a or a & ~bits.union(rel):
        raise PreconditionFailed("relative cover must cover exactly the set", "relative_cover")
    trace, finest = _finest_lambda_covers(mu)
    base = next((c for c in finest if bits.refines(bits.restrict(c, a), rel)), None)
    if base is None:
        raise PreconditionFailed("relative cover is not λ-uniform on the set", "relative_cover")
    targets = set()
    witnesses: dict[int, Family] = {}
    for v in rel:
        if v not in neighbourhoods:
            raise PreconditionFailed(f"no neighbourhood supplied for {bits.fmt(v)}", "neighbourhoods")
        n_v, cert_v = neighbourhoods[v]
        if v & ~n_v:
            raise PreconditionFailed(f"{bits.fmt(n_v)} does not contain {bits.fmt(v)}", "neighbourhoods")
        w_v = next((c for c in finest if bits.star(v, c) & ~n_v == 0), None)
        if w_v is None:
            raise PreconditionFailed(f"{bits.fmt(n_v)} is not a λ-neighbourhood of {bits.fmt(v)}", "neighbourhoods")
        witnesses[v] = w_v
        if cert_v.covered != n_v or cert_v.preuniformity != mu:
            raise PreconditionFailed("certificate is not rooted at its neighbourhood", "certificates")
        verdict = verify_certificate(cert_v)
        if not verdict:
            raise PreconditionFailed(f"certificate rejected: {verdict.reason}", "certificates")
        targets.add(cert_v.target)
    if len(targets) > 1:
        raise PreconditionFailed("certificates do not share a target", "certificates")

    # first clause: below each end meeting a, refine by the neighbourhood witness
    builder = _Builder(mu, space.carrier)
    replay = _TraceReplay(builder, trace)
    lam = trace.result
    base_idx = membership(lam, base).witness
    end_piece: dict[int, int] = {}
    for e in replay.grow_meet(0, trace.fixed_stage, base_idx):
        label = builder.labels[e]
        if not label & a:
            continue
        v = next(v for v in rel if label & a & ~v == 0)
        sub = certify_membership(mu, witnesses[v], trace)
        for f in builder.replay(e, sub.tree, sub.tree.root.id):
            end_piece[f] = v
    tree = builder.freeze()
    w = ends(tree)
    union = bits.union(neighbourhoods[v][0] for v in rel)
    star = bits.star(a, w)
    assert star & ~union == 0
    cert = LambdaCertificate(tree, w, mu)

    # second clause: the shared target over St(a, W)
    target = next(iter(targets)) if targets else (space.carrier,)
    ub = _Builder(mu, star)
    reason = ""
    for leaf in ub.replay(0, tree, tree.root.id):
        label = ub.labels[leaf]
        if label & a:
            src = next(f for f in end_piece if label & ~tree.by_id[f].label == 0)
            cert_v = neighbourhoods[end_piece[src]][1]
            ub.replay(leaf, cert_v.tree, cert_v.tree.root.id)
        elif not any(label & ~t == 0 for t in target):
            reason = f"end {bits.fmt(label)} misses the set and lies in no target element"
            break
    if reason:
        return NeighbourhoodInduction(union, cert, star, None, reason)
    return NeighbourhoodInduction(union, cert, star, LambdaCertificate(ub.freeze(), target, mu, star))


@dataclass(frozen=True)
class LazyTree:
    """A tree given by its root and a successor function.

    Nodes must be hashable. The same value may occur at several positions;
    positions are the paths from the root.
    """

    root: Hashable
    successors: Callable[[Hashable], Sequence[Hashable]]
    label: Callable[[Hashable], int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class NoetherianVerdict:
    noetherian: bool
    chain: tuple = ()
    budget: int = 0

    def __bool__(self) -> bool:
        return self.noetherian

    def __str__(self) -> str:
        if self.noetherian:
            return f"Noetherian within budget {self.budget}"
        return f"chain of length >= budget {self.budget}"


def is_noetherian_within(successors: Callable, root: Hashable, depth_budget: int) -> NoetherianVerdict:
    """Look for a chain of ``depth_budget`` nodes starting at the root."""
    if depth_budget < 1:
        raise ValueError("depth budget must be at least 1")
    dead: dict[Hashable, int] = {}

    def search(node, need: int) -> list | None:
        if need <= 1:
            return [node]
        if dead.get(node, 0) >= need:
            return None
        for nxt in successors(node):
            rest = search(nxt, need - 1)
            if rest is not None:
                return [node] + rest
        dead[node] = max(dead.get(node, 0), need)
        return None

    chain = search(root, depth_budget)
    if chain is None:
        return NoetherianVerdict(True, (), depth_budget)
    return NoetherianVerdict(False, tuple(chain), depth_budget)


def tree_from_lazy(tree: LazyTree, depth_budget: int) -> CoverTree:
    """Materialize a lazy tree whose chains are all shorter than the budget."""
    verdict = is_noetherian_within(tree.successors, tree.root, depth_budget)
    if not verdict:
        raise BudgetExceeded(f"tree has a chain of {depth_budget} nodes")
    nodes: list[Node] = []
    stack = [(tree.root, None)]
    while stack:
        value, parent = stack.pop(0)
        nid = len(nodes)
        label = tree.label(value) if tree.label else 0
        nodes.append(Node(nid, parent, label))
        stack.extend((s, nid) for s in tree.successors(value))
    return CoverTree(tuple(nodes))


def certificate_to_json(cert: LambdaCertificate) -> dict:
    out: dict = {"preuniformity": preunif_to_json(cert.preuniformity)}
    if cert.over is not None:
        out["over"] = bits.members(cert.over)
    out["target"] = [bits.members(t) for t in cert.target]
    out["nodes"] = [
        {
            "id": n.id,
            "parent": n.parent,
            "label": bits.members(n.label),
            "witness": None if n.witness is None else list(n.witness),
        }
        for n in cert.tree.nodes
    ]
    return out


def certificate_from_json(obj: dict) -> LambdaCertificate:
    try:
        mu = preunif_from_json(obj["preuniformity"])
        target = bits.canonical(bits.mask_of(t) for t in obj["target"])
        nodes = tuple(
            Node(
                int(n["id"]),
                None if n["parent"] is None else int(n["parent"]),
                bits.mask_of(n["label"]),
                None if n.get("witness") is None else tuple(int(i) for i in n["witness"]),
            )
            for n in obj["nodes"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed certificate: {exc}") from None
    over = bits.mask_of(obj["over"]) if "over" in obj else None
    return LambdaCertificate(CoverTree(nodes), target, mu, over)

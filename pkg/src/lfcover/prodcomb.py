"""Basic sets in finite products, support-based checks, blockers and the normal-cover pipeline."""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

from . import bits
from .bits import Family
from .cert import LambdaCertificate, _Builder, certify_membership, verify_certificate
from .config import check_family_size
from .cover import Cover, components, directed, is_normal_cover
from .errors import (
    EmptyInput,
    HypothesisViolated,
    InvalidCover,
    NotNormal,
    NotProperSubset,
    NotSupercomplete,
    SupportsNotDisjoint,
)
from .gamederive.game import game_successors, make_strategy
from .gamederive.perverse import Perversity
from .preunif import (
    PreUniformity,
    is_supercomplete,
    membership,
    product_preuniformity,
    pullback_index,
)
from .space import FiniteSpace, ProductSpace, regular_open_extension


@dataclass(frozen=True)
class BasicSet:
    """``∩ π_i⁻¹[B_i]`` over the constrained factors; full sides are not stored."""

    product: ProductSpace
    constraints: tuple[tuple[int, int], ...]

    def side(self, i: int) -> int:
        return dict(self.constraints).get(i, self.product.factors[i].carrier)

    def sides(self) -> list[int]:
        return [self.side(i) for i in range(len(self.product.factors))]

    @cached_property
    def points(self) -> int:
        return self.product.box(self.sides())

    def __str__(self) -> str:
        inner = ", ".join(f"{i}: {bits.fmt(m)}" for i, m in self.constraints)
        return "{" + inner + "}"


def basic_set(product: ProductSpace, constraints: Mapping[int, Iterable[int] | int]) -> BasicSet:
    kept = []
    for i, side in sorted(constraints.items()):
        if not 0 <= i < len(product.factors):
            raise ValueError(f"factor index {i} out of range")
        f = product.factors[i]
        m = side if isinstance(side, int) else bits.mask_of(side)
        f.check_subset(m)
        if m != f.carrier:
            kept.append((i, m))
    return BasicSet(product, tuple(kept))


def box_set(product: ProductSpace, sides: Sequence[int]) -> BasicSet:
    return basic_set(product, dict(enumerate(sides)))


def support(b: BasicSet) -> tuple[int, ...]:
    return tuple(i for i, _ in b.constraints)


def realize(b: BasicSet) -> int:
    return b.points


def is_basic_open(b: BasicSet) -> bool:
    return all(b.product.factors[i].is_open(m) for i, m in b.constraints)


def as_box(product: ProductSpace, s: int) -> BasicSet | None:
    """The basic set equal to ``s``, if ``s`` is a non-empty box."""
    if not s:
        return None
    sides = [product.project(i, s) for i in range(len(product.factors))]
    return box_set(product, sides) if product.box(sides) == s else None


def neighbourhood_box(product: ProductSpace, x: int) -> BasicSet:
    return as_box(product, product.neighbourhoods[x])


@dataclass(frozen=True)
class IntersectionVerdict:
    nonempty: bool
    shared: tuple[int, ...]
    brute_force: bool


def disjoint_support_intersection(b1: BasicSet, b2: BasicSet) -> IntersectionVerdict:
    """Decide ``b1 ∩ b2 ≠ ∅`` from the sides on the shared support."""
    r1, r2 = realize(b1), realize(b2)
    if not r1 or not r2:
        raise EmptyInput("both basic sets must be non-empty")
    shared = tuple(sorted(set(support(b1)) & set(support(b2))))
    nonempty = all(b1.side(i) & b2.side(i) for i in shared)
    return IntersectionVerdict(nonempty, shared, bool(r1 & r2))


def _family_support(fam: Sequence[BasicSet]) -> set[int]:
    return {i for b in fam for i in support(b)}


def _as_families(sets) -> list[list[BasicSet]]:
    return [[s] if isinstance(s, BasicSet) else list(s) for s in sets]


def escape_holds(product: ProductSpace, supports: Sequence[set[int]], points: int | None = None) -> bool:
    """Every point's minimal box avoids at least one of the given supports."""
    points = product.carrier if points is None else points
    for x in bits.iter_bits(points):
        own = set(support(neighbourhood_box(product, x)))
        if not any(not (own & s) for s in supports):
            return False
    return True


@dataclass(frozen=True)
class DenseVerdict:
    dense: bool
    closure: int
    # the escape condition: each point's minimal box avoids some support
    applicable: bool

    @property
    def falsified(self) -> bool:
        return self.applicable and not self.dense


def dense_union_check(sets: Sequence[BasicSet | Sequence[BasicSet]]) -> DenseVerdict:
    """Is the union of the (families of) basic sets dense?

    The density conclusion is only predicted when each point's minimal
    neighbourhood box has support disjoint from some family's support;
    ``applicable`` records that condition.
    """
    fams = _as_families(sets)
    if not fams or not fams[0]:
        raise EmptyInput("need at least one basic set")
    product = fams[0][0].product
    for fam in fams:
        for b in fam:
            if not realize(b):
                raise EmptyInput(f"basic set {b} is empty")
    supports = [_family_support(f) for f in fams]
    for a, b in itertools.combinations(range(len(supports)), 2):
        if supports[a] & supports[b]:
            raise SupportsNotDisjoint(f"families {a} and {b} share indices {sorted(supports[a] & supports[b])}")
    union = bits.union(realize(b) for f in fams for b in f)
    closure = product.closure(union)
    return DenseVerdict(closure == product.carrier, closure, escape_holds(product, supports))


def _project_points(product: ProductSpace, e: Sequence[int], s: int) -> set[tuple[int, ...]]:
    return {tuple(product.coords(p)[i] for i in e) for p in bits.iter_bits(s)}


@dataclass(frozen=True)
class InclusionVerdict:
    included: bool
    applicable: bool

    @property
    def falsified(self) -> bool:
        return self.applicable and not self.included


def inclusion_lemma_check(
    product: ProductSpace,
    g: int,
    r: int,
    e: Iterable[int],
    witnesses: Sequence[BasicSet | Sequence[BasicSet]],
) -> InclusionVerdict:
    """Validate the hypotheses, then decide ``g ⊆ r`` directly.

    Witnesses are basic sets or finite families of them. ``applicable``
    records the escape condition relative to ``e``: each point of ``g`` has
    a minimal box whose support misses some witness support outside ``e``.
    """
    e = sorted(set(e))
    if not is_regular_open_in(product, r):
        raise HypothesisViolated(f"{bits.fmt(r)} is not regular open", "R regular open")
    if not product.is_open(g):
        raise HypothesisViolated(f"{bits.fmt(g)} is not open", "G open")
    fams = _as_families(witnesses)
    if not fams:
        raise HypothesisViolated("no witnesses given", "witnesses")
    target = _project_points(product, e, g)
    outside = []
    for n, fam in enumerate(fams):
        union = 0
        for b in fam:
            rb = realize(b)
            if not rb:
                raise HypothesisViolated(f"witness {n} has an empty member", "non-empty")
            if rb & ~r:
                raise HypothesisViolated(f"witness {n} is not inside R", "inside R")
            union |= rb
        if not target <= _project_points(product, e, union):
            raise HypothesisViolated(f"witness {n} does not project onto G over E", "projection")
        outside.append(_family_support(fam) - set(e))
    for a, b in itertools.combinations(range(len(outside)), 2):
        if outside[a] & outside[b]:
            raise HypothesisViolated(f"witnesses {a} and {b} share indices outside E", "disjoint supports")
    return InclusionVerdict(g & ~r == 0, escape_holds(product, outside, g))


def is_regular_open_in(space: FiniteSpace, s: int) -> bool:
    return regular_open_extension(space, s) == s


def all_boxes(product: ProductSpace, open_only: bool = False) -> list[tuple[int, ...]]:
    """Side tuples of every non-empty box."""
    choices = []
    for f in product.factors:
        if open_only:
            choices.append([o for o in f.opens if o])
        else:
            choices.append(list(bits.nonempty_subsets(f.carrier)))
    total = 1
    for c in choices:
        total *= len(c)
    check_family_size(total, "box enumeration")
    return list(itertools.product(*choices))


def maximal_boxes(product: ProductSpace, r: int, open_only: bool = False) -> list[tuple[int, ...]]:
    """Non-empty boxes inside ``r`` that no one-point enlargement keeps inside ``r``."""
    factors = product.factors
    inside = [sides for sides in all_boxes(product, open_only) if product.box(sides) & ~r == 0]
    inside_set = set(inside)
    out = []
    for sides in inside:
        maximal = True
        for i, f in enumerate(factors):
            if open_only:
                bigger = [o for o in f.opens if o != sides[i] and sides[i] & ~o == 0]
            else:
                bigger = [sides[i] | (1 << y) for y in bits.iter_bits(f.carrier & ~sides[i])]
            if any(sides[:i] + (o,) + sides[i + 1 :] in inside_set for o in bigger):
                maximal = False
                break
        if maximal:
            out.append(sides)
    return out


def _sides_support(product: ProductSpace, sides: Sequence[int]) -> frozenset[int]:
    return frozenset(i for i, (s, f) in enumerate(zip(sides, product.factors)) if s != f.carrier)


def min_hitting_set(sets: Iterable[Iterable[int]]) -> tuple[int, ...]:
    """Smallest set meeting every given set (exact branch and bound)."""
    family = {frozenset(s) for s in sets}
    if frozenset() in family:
        raise ValueError("an empty set cannot be hit")
    family = [s for s in family if not any(t < s for t in family)]
    best: list[frozenset[int] | None] = [None]

    def rec(chosen: frozenset[int], remaining: list[frozenset[int]]) -> None:
        if best[0] is not None and len(chosen) >= len(best[0]):
            return
        if not remaining:
            best[0] = chosen
            return
        if best[0] is not None and len(chosen) + 1 >= len(best[0]):
            return
        pivot = min(remaining, key=lambda s: (len(s), sorted(s)))
        for x in sorted(pivot):
            rec(chosen | {x}, [s for s in remaining if x not in s])

    rec(frozenset(), family)
    return tuple(sorted(best[0] or ()))


@dataclass(frozen=True)
class Blocker:
    indices: tuple[int, ...]
    # the sets that had to be hit, each with the index hitting it
    hits: tuple[tuple[frozenset[int], int], ...] = ()
    boxes: tuple[tuple[int, ...], ...] = field(default=(), compare=False)


def finite_blocker(product: ProductSpace, r: int) -> Blocker:
    """A minimum index set meeting the support of every non-empty box inside ``r``."""
    if r == product.carrier:
        raise NotProperSubset("the blocker of the whole product does not exist")
    if not is_regular_open_in(product, r):
        raise HypothesisViolated(f"{bits.fmt(r)} is not regular open", "R regular open")
    boxes = maximal_boxes(product, r)
    supports = [_sides_support(product, s) for s in boxes]
    idx = min_hitting_set(supports)
    hits = tuple((s, min(s & set(idx))) for s in dict.fromkeys(supports))
    return Blocker(idx, hits, tuple(boxes))


def finite_blocker_relative(product: ProductSpace, g: int, r: int, e: Iterable[int]) -> Blocker:
    """Indices outside ``e`` meeting every family of open boxes in ``r`` that covers ``g`` over ``e``."""
    e = set(e)
    if not product.is_open(g) or not product.is_open(r):
        raise HypothesisViolated("G and R must be open", "open")
    if g & ~regular_open_extension(product, r) == 0:
        raise HypothesisViolated("G lies inside the regular open extension of R", "G not inside R*")
    boxes = maximal_boxes(product, r, open_only=True)
    check_family_size(1 << len(boxes), "box families")
    target = _project_points(product, sorted(e), g)
    proj = [_project_points(product, sorted(e), product.box(b)) for b in boxes]
    families: list[tuple[int, ...]] = []
    for size in range(1, len(boxes) + 1):
        for combo in itertools.combinations(range(len(boxes)), size):
            if any(set(f) <= set(combo) for f in families):
                continue
            if target <= set().union(*(proj[i] for i in combo)):
                families.append(combo)
    to_hit = []
    for combo in families:
        s = set().union(*(_sides_support(product, boxes[i]) for i in combo)) - e
        to_hit.append(frozenset(s))
    idx = min_hitting_set(to_hit)
    hits = tuple((s, min(s & set(idx))) for s in dict.fromkeys(to_hit))
    return Blocker(idx, hits, tuple(boxes))


def regular_open_cover_extension(space: FiniteSpace, r: Cover | Family) -> Family:
    fam = r.elements if isinstance(r, Cover) else tuple(r)
    return bits.canonical(regular_open_extension(space, e) for e in fam)


@dataclass(frozen=True)
class ExtensionCheck:
    star_refines: bool
    directed_refines: bool

    def __bool__(self) -> bool:
        return self.star_refines and self.directed_refines


def _unions(fam: Family) -> Family:
    found: set[int] = set()
    for e in fam:
        found |= {s | e for s in found}
        found.add(e)
        check_family_size(len(found), "finite unions")
    return tuple(sorted(found))


def extension_refinement_check(space: FiniteSpace, r: Family, v1: Family, v: Family) -> ExtensionCheck:
    """Given ``R ≺ V₁ ≺** V``, test ``R* ≺ V`` and ``(R^{<ω})* ≺ V^{<ω}``."""
    full = space.carrier
    for name, fam in (("R", r), ("V1", v1), ("V", v)):
        if bits.union(fam) != full or not all(space.is_open(x) for x in fam):
            raise HypothesisViolated(f"{name} is not an open cover", f"{name} open cover")
    if not bits.refines(r, v1):
        raise HypothesisViolated("R does not refine V1", "R refines V1")
    stars = bits.star_cover(v1)
    if not (bits.refines(bits.star_cover(stars), v)):
        raise HypothesisViolated("V1 does not double-star refine V", "V1 double star refines V")
    r_star = regular_open_cover_extension(space, r)
    dir_v = _unions(bits.canonical(v))
    dir_r_star = bits.canonical(regular_open_extension(space, u) for u in _unions(bits.canonical(r)))
    return ExtensionCheck(bits.refines(r_star, v), bits.refines(dir_r_star, dir_v))


@dataclass(frozen=True)
class PipelineResult:
    certificate: LambdaCertificate
    directed_certificate: LambdaCertificate
    regular_cover: Family
    basic_cover: Family
    blocker: tuple[int, ...]
    end_star_sizes: tuple[int, ...]
    stage_bound: int
    added_covers: int
    coverage_deficits: int
    preuniformity: PreUniformity


class _Extension:
    """Pullback covers appended to the product basis while building."""

    def __init__(self, factors: Sequence[tuple[FiniteSpace, PreUniformity]], mu: PreUniformity):
        self.factors = factors
        self.product: ProductSpace = mu.space
        self.mu = mu
        self.index = {b: i for i, b in enumerate(mu.basis)}

    def pullback(self, i: int, cover: Family) -> int | None:
        """Basis index of ``π_i⁻¹[cover]``, appending it if it is a factor member."""
        fam = bits.reduce_family(self.product.preimage(i, c) for c in cover)
        if fam in self.index:
            return self.index[fam]
        if not membership(self.factors[i][1], cover):
            return None
        self.mu = PreUniformity(self.mu.space, self.mu.basis + (fam,), self.mu.mode)
        self.index[fam] = len(self.mu.basis) - 1
        return self.index[fam]


def _perversity_steps(width: int, level_limit: int) -> list[int]:
    """Coordinates raised along the standard perversities restricted to ``width``."""
    if width == 0:
        return []
    steps = []
    prev = (0,) * width
    p = Perversity()
    while True:
        p = p.successor()
        q = p.restrict(width)
        if max(q, default=0) > level_limit:
            return steps
        if q != prev:
            changed = [i for i in range(width) if q[i] != prev[i]]
            assert len(changed) == 1 and q[changed[0]] == prev[changed[0]] + 1
            steps.append(changed[0])
            prev = q


def normal_cover_certificate(
    factors: Sequence[tuple[FiniteSpace, PreUniformity]],
    v: Cover | Iterable[int],
    strategy_source: str = "minimal",
) -> PipelineResult:
    """Certify that a normal cover of the product is a λ-cover.

    Stages: the least regular-open cover ``ℛ``; the minimal-neighbourhood
    boxes ``𝒢``; the blocker ``F``; a certificate for
    ``π_F[𝒢] ∧ π_F[maximal open boxes of ℛ]`` on the ``F``-subproduct,
    lifted to the whole product; perverse extension of each end by game
    successors of its sides; then repair of ends lying in no member of
    ``ℛ`` with an enlarged index set.
    """
    for i, (s, m) in enumerate(factors):
        if m.mode != "filter":
            raise ValueError("factor pre-uniformities must be in filter mode")
        if not is_supercomplete(s, m)[0]:
            raise NotSupercomplete(f"factor {i} misses an open cover")
    mu = product_preuniformity(factors)
    prod: ProductSpace = mu.space
    fam = bits.canonical(v.elements if isinstance(v, Cover) else v)
    if bits.union(fam) != prod.carrier or not all(prod.is_open(x) for x in fam):
        raise InvalidCover("expected an open cover of the product")
    if not is_normal_cover(prod, fam):
        raise NotNormal("cover is not normal")
    full = prod.carrier
    regular = bits.reduce_family(regular_open_extension(prod, u) for u in prod.neighbourhoods)
    comps = components(prod)
    # each member sits in a component inside an element of v; this yields the
    # refinement of finite unions as well
    if not all(any(x & ~c == 0 and any(c & ~w == 0 for w in fam) for c in comps) for x in regular):
        raise NotNormal("regular-open refinement does not refine the cover")
    basic = bits.canonical(prod.neighbourhoods)
    directed_target = directed(Cover(prod, fam, full)).elements
    stage_bound = 1 << prod.n

    if full in regular:
        tree_builder = _Builder(mu, full)
        tree = tree_builder.freeze()
        cert = LambdaCertificate(tree, fam, mu)
        return PipelineResult(
            cert, LambdaCertificate(tree, directed_target, mu), regular, basic, (), (), stage_bound, 0, 0, mu
        )

    index_set: set[int] = set()
    for r in regular:
        index_set |= set(finite_blocker(prod, r).indices)
    for g in basic:
        index_set |= set(support(as_box(prod, g)))
    order = sorted(index_set)
    boxes = sorted({b for r in regular for b in maximal_boxes(prod, r, open_only=True)})

    ext = _Extension(factors, mu)
    builder = _Builder(mu, full)
    _grow_subproduct(builder, ext, 0, order, basic, boxes)

    strategies = {i: make_strategy(factors[i][0], strategy_source) for i in order}
    steps = _perversity_steps(len(order), len(order))
    deficits = 0
    for leaf in _leaves(builder, 0):
        frontier = [leaf]
        for t in steps:
            i = order[t]
            nxt = []
            for node in frontier:
                side = prod.project(i, builder.labels[node])
                succ = game_successors(strategies[i], side)
                outside = factors[i][0].carrier & ~side
                cover = bits.canonical(c | outside for c in succ)
                if bits.union(cover) != factors[i][0].carrier:
                    deficits += 1
                    nxt.append(node)
                    continue
                idx = ext.pullback(i, cover)
                if idx is None:
                    nxt.append(node)
                    continue
                builder.mu = ext.mu
                nxt.extend(builder.split(node, (idx,)))
            frontier = nxt

    end_star_sizes = []
    for _ in range(stage_bound):
        pending = [
            n for n in _leaves(builder, 0) if not any(builder.labels[n] & ~r == 0 for r in regular)
        ]
        end_star_sizes.append(len(pending))
        if not pending:
            break
        for node in pending:
            label = builder.labels[node]
            enlarged = set(order)
            for b in boxes:
                if prod.box(b) & label:
                    enlarged |= set(_sides_support(prod, b))
            if enlarged == set(order):
                enlarged = set(range(len(prod.factors)))
            _grow_subproduct(builder, ext, node, sorted(enlarged), basic, boxes)
    else:
        raise AssertionError("end repair did not terminate within the closed-set bound")

    builder.rebase(ext.mu)
    tree = builder.freeze()
    cert = LambdaCertificate(tree, fam, ext.mu)
    dcert = LambdaCertificate(tree, directed_target, ext.mu)
    for c in (cert, dcert):
        verdict = verify_certificate(c)
        assert verdict, verdict.reason
    return PipelineResult(
        cert,
        dcert,
        regular,
        basic,
        tuple(order),
        tuple(end_star_sizes),
        stage_bound,
        len(ext.mu.basis) - len(mu.basis),
        deficits,
        ext.mu,
    )


def _leaves(builder: _Builder, root: int) -> list[int]:
    kids: dict[int, list[int]] = {}
    for nid, p in enumerate(builder.parents):
        if p is not None:
            kids.setdefault(p, []).append(nid)
    out = []
    stack = [root]
    while stack:
        n = stack.pop()
        if n in kids:
            stack.extend(reversed(kids[n]))
        else:
            out.append(n)
    return out


def _grow_subproduct(
    builder: _Builder,
    ext: _Extension,
    node: int,
    order: Sequence[int],
    basic: Family,
    boxes: Sequence[tuple[int, ...]],
) -> None:
    """Certify ``π_F[𝒢] ∧ π_F[boxes]`` on the ``F``-subproduct and replay it below ``node``."""
    prod = ext.product
    factors = ext.factors
    if not order:
        return
    sub_mu = product_preuniformity([factors[i] for i in order])
    sub: ProductSpace = sub_mu.space

    def project(s: int) -> int:
        out = 0
        for p in bits.iter_bits(s):
            c = prod.coords(p)
            out |= 1 << sub.point([c[i] for i in order])
        return out

    lifted: dict[int, int] = {}

    def lift(m: int) -> int:
        if m not in lifted:
            out = 0
            for q in bits.iter_bits(m):
                cq = sub.coords(q)
                out |= prod.box([None if i not in order else 1 << cq[order.index(i)] for i in range(len(factors))])
            lifted[m] = out
        return lifted[m]

    w = bits.reduce_family(
        bits.meet(
            bits.canonical(project(g) for g in basic),
            bits.canonical(project(prod.box(b)) for b in boxes),
        )
    )
    cert = certify_membership(sub_mu, w)
    index_map = []
    for t, i in enumerate(order):
        for j in range(len(factors[i][1].basis)):
            index_map.append(pullback_index(factors, i, j))
    builder.replay(node, cert.tree, cert.tree.root.id, index_map, lift)

"""Covers and refinement algebra on finite spaces."""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from . import bits
from .bits import Family
from .config import check_family_size
from .errors import InvalidCover, MismatchedCarrier, NotAPartition
from .space import FiniteSpace, space_from_json, space_to_json

# Above this many reduced open covers the normality check switches to the
# connected-component criterion.
NORMALITY_ENUMERATION_CAP = 2500
# beyond this many opens the cover enumeration is not attempted
NORMALITY_OPEN_CAP = 400


@dataclass(frozen=True)
class Cover:
    """A cover of ``over`` (a subset of the carrier) by non-empty subsets."""

    space: FiniteSpace
    elements: Family
    over: int

    def __iter__(self):
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def reduced(self) -> Cover:
        return Cover(self.space, bits.reduce_family(self.elements), self.over)

    def is_open(self) -> bool:
        return all(self.space.is_open(e) for e in self.elements)

    def __str__(self) -> str:
        return bits.fmt_family(self.elements)


def make_cover(space: FiniteSpace, elements: Iterable[Iterable[int] | int], over: int | None = None) -> Cover:
    """Validate and canonicalize a cover; empty elements are dropped."""
    if over is None:
        over = space.carrier
    space.check_subset(over)
    masks = []
    for e in elements:
        m = e if isinstance(e, int) else bits.mask_of(e)
        space.check_subset(m)
        masks.append(m)
    fam = bits.canonical(masks)
    missing = over & ~bits.union(fam)
    if missing:
        raise InvalidCover(f"points {bits.fmt(missing)} are not covered")
    return Cover(space, fam, over)


def _same_carrier(u: Cover, v: Cover) -> None:
    if u.space != v.space or u.over != v.over:
        raise MismatchedCarrier("covers live on different spaces or sub-carriers")


def refines(u: Cover, v: Cover) -> bool:
    _same_carrier(u, v)
    return bits.refines(u.elements, v.elements)


def equivalent(u: Cover, v: Cover) -> bool:
    return refines(u, v) and refines(v, u)


def meet(u: Cover, v: Cover) -> Cover:
    _same_carrier(u, v)
    return Cover(u.space, bits.meet(u.elements, v.elements), u.over)


def restrict(u: Cover, a: int) -> Cover:
    if a & ~u.over:
        raise MismatchedCarrier("restriction set must lie inside the covered set")
    return Cover(u.space, bits.restrict(u.elements, a), a)


def directed(u: Cover) -> Cover:
    """All unions of non-empty subfamilies."""
    found: set[int] = set()
    for e in u.elements:
        found |= {s | e for s in found}
        found.add(e)
        check_family_size(len(found), "directed cover")
    return Cover(u.space, bits.canonical(found), u.over)


def star(a: int, v: Cover) -> int:
    return bits.star(a, v.elements)


def star_cover(u: Cover) -> Cover:
    """``{St(e, U) : e in U}``."""
    return Cover(u.space, bits.star_cover(u.elements), u.over)


def star_refines(u: Cover, v: Cover) -> bool:
    _same_carrier(u, v)
    return bits.refines(bits.star_cover(u.elements), v.elements)


def double_star_witness(u: Cover, v: Cover) -> Cover | None:
    """A cover ``W`` with ``u ≺* W ≺* v``, or None.

    The star cover of ``u`` is the coarsest-needed candidate: any valid ``W``
    is refined by it, and star refinement is inherited downwards.
    """
    _same_carrier(u, v)
    w = star_cover(u)
    return w if star_refines(w, v) else None


def double_star_refines(u: Cover, v: Cover) -> bool:
    return double_star_witness(u, v) is not None


SEARCH_STEPS_PER_RESULT = 2000


def antichain_covers(candidates: Sequence[int], target: int, limit: int | None = None) -> list[Family]:
    """All antichains drawn from ``candidates`` whose union contains ``target``.

    Each antichain is produced once, split into a core and extras. The core
    is built greedily: for the lowest point not yet covered, branch on the
    first candidate (in list order) of the final family that contains it, and
    forbid every earlier candidate containing that point. Extras are then any
    compatible non-forbidden candidates. With a ``limit`` the search also
    stops after ``SEARCH_STEPS_PER_RESULT * limit`` candidate checks, since
    dead branches can dominate on large spaces.
    """
    cands = [c for c in dict.fromkeys(candidates) if c]
    out: list[Family] = []
    steps = [0]
    max_steps = None if limit is None else SEARCH_STEPS_PER_RESULT * (limit + 1)

    def tick(n: int) -> None:
        steps[0] += n
        if max_steps is not None and steps[0] > max_steps:
            raise _TooMany

    def emit(chosen: list[int]) -> None:
        out.append(tuple(sorted(chosen)))
        if limit is not None and len(out) > limit:
            raise _TooMany

    def extend(chosen: list[int], allowed: list[int]) -> None:
        emit(chosen)
        for k, c in enumerate(allowed):
            tick(1)
            if any(c & ~d == 0 or d & ~c == 0 for d in chosen):
                continue
            chosen.append(c)
            extend(chosen, allowed[k + 1 :])
            chosen.pop()

    def rec(chosen: list[int], covered: int, forbidden: set[int]) -> None:
        tick(len(cands))
        rest = target & ~covered
        if not rest:
            taken = set(chosen)
            allowed = [c for i, c in enumerate(cands) if i not in forbidden and c not in taken]
            extend(chosen, allowed)
            return
        p = bits.lowest(rest)
        newly = []
        for idx, c in enumerate(cands):
            if not (c >> p) & 1:
                continue
            if idx in forbidden:
                newly.append(idx)
                continue
            if any(c & ~d == 0 or d & ~c == 0 for d in chosen):
                newly.append(idx)
                continue
            chosen.append(c)
            rec(chosen, covered | c, forbidden | set(newly))
            chosen.pop()
            newly.append(idx)

    rec([], 0, set())
    return out


class _TooMany(Exception):
    pass


def reduced_open_covers(space: FiniteSpace, limit: int | None = None) -> list[Family]:
    """Every reduced open cover of the carrier as a sorted family.

    Raises ``OverflowError`` when more than ``limit`` covers exist or the
    bounded search gives up first.
    """
    try:
        return antichain_covers([o for o in space.opens if o], space.carrier, limit)
    except _TooMany:
        raise OverflowError(f"more than {limit} reduced open covers") from None


def components(space: FiniteSpace) -> Family:
    """Connected components, each clopen."""
    parent = list(range(space.n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x, u in enumerate(space.neighbourhoods):
        for y in bits.iter_bits(u):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry
    groups: dict[int, int] = {}
    for x in range(space.n):
        groups[find(x)] = groups.get(find(x), 0) | (1 << x)
    return bits.canonical(groups.values())


@dataclass(frozen=True)
class NormalVerdict:
    """Outcome of the normality check.

    On success ``cycle[i] ≺* cycle[i+1]`` (cyclically), the last cycle member
    star-refines ``tail[0]``, each tail member star-refines the next, and the
    final cover of the chain refines the tested cover.
    """

    result: bool
    cycle: tuple[Family, ...] = ()
    tail: tuple[Family, ...] = ()
    method: str = ""

    def __bool__(self) -> bool:
        return self.result


def check_normal_witness(v: Family, verdict: NormalVerdict) -> bool:
    chain = list(verdict.cycle) + list(verdict.tail)
    if not verdict.cycle:
        return False
    k = len(verdict.cycle)
    for i in range(k):
        if not bits.refines(bits.star_cover(verdict.cycle[i]), verdict.cycle[(i + 1) % k]):
            return False
    for a, b in zip(chain[k - 1 :], chain[k:]):
        if not bits.refines(bits.star_cover(a), b):
            return False
    return bits.refines(chain[-1], v)


def _require_open_cover(space: FiniteSpace, v: Family) -> None:
    if bits.union(v) != space.carrier:
        raise InvalidCover("not a cover of the carrier")
    if not all(space.is_open(e) for e in v):
        raise InvalidCover("cover has a non-open element")


def is_normal_cover(space: FiniteSpace, v: Cover | Family, method: str = "auto") -> NormalVerdict:
    """Does ``v`` sit atop an infinite ≺*-chain of open covers?

    ``method`` is ``"fixpoint"`` (greatest fixed point over all reduced open
    covers), ``"components"`` (every connected component lies inside one
    element of ``v``) or ``"auto"``.
    """
    fam = v.elements if isinstance(v, Cover) else tuple(v)
    _require_open_cover(space, fam)
    if method == "auto":
        if more_opens_than(space, NORMALITY_OPEN_CAP):
            return _normal_by_components(space, fam)
        try:
            covers = reduced_open_covers(space, NORMALITY_ENUMERATION_CAP)
        except OverflowError:
            return _normal_by_components(space, fam)
        return _normal_by_fixpoint(covers, fam)
    if method == "fixpoint":
        return _normal_by_fixpoint(reduced_open_covers(space), fam)
    if method == "components":
        return _normal_by_components(space, fam)
    raise ValueError(f"unknown method {method!r}")


def more_opens_than(space: FiniteSpace, cap: int) -> bool:
    found = {0}
    for u in space.neighbourhoods:
        found |= {s | u for s in found}
        if len(found) > cap:
            return True
    return False


def _normal_by_components(space: FiniteSpace, v: Family) -> NormalVerdict:
    comps = components(space)
    if bits.refines(comps, v):
        return NormalVerdict(True, (comps,), (), "components")
    return NormalVerdict(False, method="components")


def _normal_by_fixpoint(covers: list[Family], v: Family) -> NormalVerdict:
    stars = [bits.star_cover(c) for c in covers]
    # refiners[i]: covers j with covers[j] ≺* covers[i]
    refiners = [[j for j in range(len(covers)) if bits.refines(stars[j], c)] for c in covers]
    alive = set(range(len(covers)))
    changed = True
    while changed:
        changed = False
        for i in sorted(alive):
            if not any(j in alive for j in refiners[i]):
                alive.discard(i)
                changed = True
    start = next((i for i in sorted(alive) if bits.refines(covers[i], v)), None)
    if start is None:
        return NormalVerdict(False, method="fixpoint")
    path = [start]
    seen = {start: 0}
    while True:
        nxt = next(j for j in refiners[path[-1]] if j in alive)
        if nxt in seen:
            break
        seen[nxt] = len(path)
        path.append(nxt)
    # path[k+1] ≺* path[k]; reverse so each member star-refines the next
    loop_from = seen[nxt]
    cycle = [covers[i] for i in reversed(path[loop_from:])]
    tail = [covers[i] for i in reversed(path[:loop_from])]
    return NormalVerdict(True, tuple(cycle), tuple(tail), "fixpoint")


def find_unexhausted(space: FiniteSpace, u: Cover | Family) -> int | None:
    """A non-empty ``S`` with no non-empty relatively open trace ``e ∩ S``."""
    fam = u.elements if isinstance(u, Cover) else tuple(u)
    check_family_size(1 << space.n, "subset enumeration")
    for s in bits.nonempty_subsets(space.carrier):
        if not any((e & s) and space.is_relatively_open(s, e & s) for e in fam):
            return s
    return None


def is_exhaustive(space: FiniteSpace, u: Cover | Family) -> bool:
    return find_unexhausted(space, u) is None


def minimal_neighbourhood_cover(space: FiniteSpace) -> Cover:
    return Cover(space, bits.canonical(space.neighbourhoods), space.carrier)


def _check_partition(space: FiniteSpace, blocks: Sequence[int]) -> None:
    acc = 0
    for b in blocks:
        if not b or b & acc:
            raise NotAPartition("blocks must be non-empty and pairwise disjoint")
        acc |= b
    if acc != space.carrier:
        raise NotAPartition(f"blocks miss points {bits.fmt(space.carrier & ~acc)}")


def is_left_open_partition(
    space: FiniteSpace, p: Cover | Sequence[int], search: str = "greedy"
) -> tuple[bool, tuple[int, ...]]:
    """Find an ordering of the blocks whose prefix unions are all open.

    Greedy placement is complete: if the placed blocks have open union and
    some valid ordering exists, the first unplaced block of that ordering
    can be placed next. ``search="backtrack"`` runs the exhaustive search.
    """
    blocks = list(p.elements if isinstance(p, Cover) else p)
    _check_partition(space, blocks)
    if search == "backtrack":
        for perm in itertools.permutations(sorted(blocks)):
            acc = 0
            for b in perm:
                acc |= b
                if not space.is_open(acc):
                    break
            else:
                return True, perm
        return False, ()
    remaining = sorted(blocks)
    order: list[int] = []
    acc = 0
    while remaining:
        for b in remaining:
            if space.is_open(acc | b):
                order.append(b)
                acc |= b
                remaining.remove(b)
                break
        else:
            return False, tuple(order)
    return True, tuple(order)


def is_complete_sequence(space: FiniteSpace, covers: Sequence[Cover | Family]) -> tuple[bool, tuple[int, ...] | None]:
    """Check every choice function with the finite intersection property.

    A finite list stands for the sequence repeating its last cover, so only
    the distinct covers matter. Returns a failing choice on a negative.
    """
    if not covers:
        raise ValueError("need at least one cover")
    fams = list(dict.fromkeys(c.elements if isinstance(c, Cover) else tuple(c) for c in covers))
    total = 1
    for f in fams:
        total *= max(len(f), 1)
    check_family_size(total, "choice functions")
    for choice in itertools.product(*fams):
        inter = space.carrier
        for e in choice:
            inter &= e
        if not inter:
            continue
        cl = space.carrier
        for e in choice:
            cl &= space.closure(e)
        if not cl:
            return False, choice
    return True, None


def cover_to_json(cover: Cover, include_space: bool = True) -> dict:
    out: dict = {}
    if include_space:
        out["space"] = space_to_json(cover.space)
    if cover.over != cover.space.carrier:
        out["over"] = bits.members(cover.over)
    out["elements"] = [bits.members(e) for e in cover.elements]
    return out


def cover_from_json(obj: dict, space: FiniteSpace | None = None) -> Cover:
    if not isinstance(obj, dict) or "elements" not in obj:
        raise ValueError("cover must be an object with an 'elements' list")
    if space is None:
        if "space" not in obj:
            raise ValueError("cover has no 'space' field")
        space = space_from_json(obj["space"])
    over = bits.mask_of(obj["over"]) if "over" in obj else None
    for e in obj["elements"]:
        if not all(isinstance(p, int) and 0 <= p < space.n for p in e):
            raise ValueError(f"cover element {e} names points outside the carrier")
    return make_cover(space, obj["elements"], over)

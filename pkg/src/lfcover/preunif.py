"""Pre-uniformities presented by a finite basis of covers.

Two membership modes exist. In ``filter`` mode a cover belongs when some
finite meet of basis covers refines it; in ``prefilter`` mode a single
basis cover must refine it.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

from . import bits
from .bits import Family
from .config import check_family_size, get_budget
from .cover import Cover, antichain_covers, more_opens_than, reduced_open_covers
from .errors import InvalidCover, MismatchedCarrier
from .space import FiniteSpace, product, space_from_json, space_to_json

MODES = ("filter", "prefilter")
# Above this many reduced open covers (or opens) supercompleteness uses
# the minimal-neighbourhood criterion instead of enumeration.
SUPERCOMPLETE_ENUMERATION_CAP = 2500
SUPERCOMPLETE_OPEN_CAP = 400


@dataclass(frozen=True)
class PreUniformity:
    space: FiniteSpace
    basis: tuple[Family, ...]
    mode: str = "filter"

    @cached_property
    def full_meet(self) -> Family:
        """Reduced meet of every basis cover (``{X}`` for an empty basis)."""
        return self.meet_of(range(len(self.basis)))

    @cached_property
    def _meets(self) -> dict[tuple[int, ...], Family]:
        return {}

    def meet_of(self, indices: Iterable[int]) -> Family:
        key = tuple(sorted(set(indices)))
        cache = self._meets
        if key not in cache:
            fam: Family = (self.space.carrier,)
            for i in key:
                fam = bits.reduce_family(bits.meet(fam, self.basis[i]))
            cache[key] = fam
        return cache[key]

    def covers(self) -> list[Cover]:
        return [Cover(self.space, b, self.space.carrier) for b in self.basis]

    def __str__(self) -> str:
        inner = ", ".join(bits.fmt_family(b) for b in self.basis)
        return f"{self.mode}[{inner}]"


def make_preuniformity(
    space: FiniteSpace, basis: Iterable[Cover | Iterable], mode: str = "filter"
) -> PreUniformity:
    """Validate basis covers and put each into reduced form."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    fams = []
    for c in basis:
        if isinstance(c, Cover):
            if c.space != space or c.over != space.carrier:
                raise MismatchedCarrier("basis cover is not a cover of this carrier")
            fam = c.elements
        else:
            fam = tuple(e if isinstance(e, int) else bits.mask_of(e) for e in c)
        for e in fam:
            space.check_subset(e)
        if bits.union(fam) != space.carrier:
            raise InvalidCover("basis member does not cover the carrier")
        fams.append(bits.reduce_family(fam))
    if not fams:
        raise InvalidCover("a pre-uniformity needs at least one basis cover")
    return PreUniformity(space, tuple(fams), mode)


def _as_family(mu: PreUniformity, v: Cover | Iterable) -> Family:
    if isinstance(v, Cover):
        if v.space != mu.space or v.over != mu.space.carrier:
            raise MismatchedCarrier("cover and pre-uniformity live on different carriers")
        return v.elements
    fam = tuple(v)
    if bits.union(fam) != mu.space.carrier:
        raise MismatchedCarrier("tested family does not cover the carrier")
    return fam


@dataclass(frozen=True)
class Membership:
    result: bool
    witness: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.result


def membership(mu: PreUniformity, v: Cover | Iterable) -> Membership:
    """Decide membership; the witness lists basis indices whose meet refines ``v``."""
    fam = _as_family(mu, v)
    if mu.mode == "prefilter":
        for i, b in enumerate(mu.basis):
            if bits.refines(b, fam):
                return Membership(True, (i,))
        return Membership(False)
    if not bits.refines(mu.full_meet, fam):
        return Membership(False)
    return Membership(True, _minimal_witness(mu, fam))


def _minimal_witness(mu: PreUniformity, fam: Family) -> tuple[int, ...]:
    b = len(mu.basis)
    if bits.refines((mu.space.carrier,), fam):
        return ()
    if b <= 12:
        for size in range(1, b + 1):
            for combo in itertools.combinations(range(b), size):
                if bits.refines(mu.meet_of(combo), fam):
                    return combo
    keep = list(range(b))
    for i in range(b):
        trial = [j for j in keep if j != i]
        if bits.refines(mu.meet_of(trial), fam):
            keep = trial
    return tuple(keep)


def contains(mu: PreUniformity, nu: PreUniformity) -> bool:
    """Every member of ``nu`` is a member of ``mu``."""
    if nu.mode == "filter":
        return membership(mu, nu.full_meet).result
    return all(membership(mu, b).result for b in nu.basis)


def equivalent(mu: PreUniformity, nu: PreUniformity) -> bool:
    return contains(mu, nu) and contains(nu, mu)


def _candidates(mu: PreUniformity, depth: int) -> list[tuple[tuple[int, ...], Family]]:
    """Covers standing for members: basis covers, or meets up to ``depth``."""
    if mu.mode == "prefilter":
        return [((i,), b) for i, b in enumerate(mu.basis)]
    seen: dict[Family, tuple[int, ...]] = {}
    for size in range(1, min(depth, len(mu.basis)) + 1):
        for combo in itertools.combinations(range(len(mu.basis)), size):
            seen.setdefault(mu.meet_of(combo), combo)
    return [(idx, fam) for fam, idx in seen.items()]


def _minimal_only(items: dict[Family, object]) -> dict[Family, object]:
    keys = list(items)
    return {
        k: items[k]
        for k in keys
        if not any(o != k and bits.refines(o, k) for o in keys)
    }


@dataclass(frozen=True)
class Origin:
    """How a derived cover arose.

    ``parent`` indexes the meet (in the first argument's basis) that was
    split; ``pieces`` pairs each element of that reduced meet with the basis
    indices of the second argument used inside it.
    """

    parent: tuple[int, ...]
    pieces: tuple[tuple[int, tuple[int, ...]], ...]


def _derive(mu: PreUniformity, nu: PreUniformity, minimal: bool, depth: int) -> list[tuple[Family, Origin]]:
    if mu.space != nu.space:
        raise MismatchedCarrier("derivative of pre-uniformities on different spaces")
    nu_cands = _candidates(nu, depth)
    found: dict[Family, Origin] = {}
    for parent, u in _candidates(mu, depth):
        options_per_element = []
        for e in u:
            opts: dict[Family, tuple[int, ...]] = {}
            for idx, w in nu_cands:
                opts.setdefault(bits.reduce_family(bits.restrict(w, e)), idx)
            if minimal:
                opts = _minimal_only(opts)
            options_per_element.append(list(opts.items()))
        total = 1
        for o in options_per_element:
            total *= len(o)
        check_family_size(total, "derivative choice functions")
        for choice in itertools.product(*options_per_element):
            fam = bits.reduce_family(p for pieces, _ in choice for p in pieces)
            if fam not in found:
                found[fam] = Origin(parent, tuple((e, idx) for e, (_, idx) in zip(u, choice)))
    if minimal:
        found = _minimal_only(found)
    return sorted(found.items(), key=lambda kv: (len(kv[0]), kv[0]))


def derivative(mu: PreUniformity, nu: PreUniformity, *, minimal: bool = False, depth: int | None = None) -> PreUniformity:
    """``μ/ν``: covers ``{U_i ∩ V_ij}`` with an independent ν-choice per element.

    ``minimal=True`` keeps only refinement-minimal choices and covers; the
    generated pre-uniformity is unchanged.
    """
    depth = get_budget().meet_depth if depth is None else depth
    derived = _derive(mu, nu, minimal, depth)
    return PreUniformity(mu.space, tuple(f for f, _ in derived), mu.mode)


@dataclass(frozen=True)
class DerivationTrace:
    """Stages ``μ^(0) .. μ^(k)`` where ``k`` is the fixed stage.

    ``origins[s][j]`` explains basis cover ``j`` of stage ``s`` (None at
    stage 0). ``fast`` marks the ``μ^(k)/μ^(k)`` variant, whose origins
    index the previous stage rather than the starting basis.
    """

    stages: tuple[PreUniformity, ...]
    origins: tuple[tuple[Origin, ...] | None, ...]
    fast: bool = False
    minimal: bool = True

    @property
    def fixed_stage(self) -> int:
        return len(self.stages) - 1

    @property
    def result(self) -> PreUniformity:
        return self.stages[-1]

    def certificates(self):
        """Certificates for every basis cover of the fixed stage outside the start."""
        from .cert import certify_membership

        mu = self.stages[0]
        out = []
        for fam in self.result.basis:
            if not membership(mu, fam):
                out.append(certify_membership(mu, fam, trace=self))
        return out

    def to_json(self) -> dict:
        return {
            "mode": self.stages[0].mode,
            "fast": self.fast,
            "fixed_stage": self.fixed_stage,
            "stages": [
                {"stage": k, "basis": [[bits.members(e) for e in b] for b in st.basis]}
                for k, st in enumerate(self.stages)
            ],
        }


def lambda_coreflection(
    mu: PreUniformity, *, fast: bool = False, minimal: bool = True, depth: int | None = None
) -> tuple[PreUniformity, DerivationTrace]:
    """Iterate ``μ^(k+1) = μ^(k)/μ`` until the generated filter stops growing."""
    depth = get_budget().meet_depth if depth is None else depth
    stages = [mu]
    origins: list[tuple[Origin, ...] | None] = [None]
    while True:
        cur = stages[-1]
        derived = _derive(cur, cur if fast else mu, minimal, depth)
        nxt = PreUniformity(mu.space, tuple(f for f, _ in derived), mu.mode)
        if equivalent(cur, nxt):
            break
        stages.append(nxt)
        origins.append(tuple(o for _, o in derived))
    trace = DerivationTrace(tuple(stages), tuple(origins), fast, minimal)
    return stages[-1], trace


def is_supercomplete(space: FiniteSpace, mu: PreUniformity, method: str = "auto") -> tuple[bool, Family | None]:
    """Does ``mu`` contain every open cover? Returns a missing cover on failure.

    ``method="enumerate"`` tests every reduced open cover. ``"neighbourhoods"``
    tests only the minimal-neighbourhood cover, which refines every open
    cover and is itself open. ``"auto"`` enumerates when that is feasible.
    """
    if mu.space != space:
        raise MismatchedCarrier("pre-uniformity lives on another space")
    if method == "auto":
        try:
            if more_opens_than(space, SUPERCOMPLETE_OPEN_CAP):
                raise OverflowError
            covers = reduced_open_covers(space, SUPERCOMPLETE_ENUMERATION_CAP)
        except OverflowError:
            method = "neighbourhoods"
        else:
            return _supercomplete_over(mu, covers)
    if method == "enumerate":
        return _supercomplete_over(mu, reduced_open_covers(space))
    if method == "neighbourhoods":
        fam = bits.reduce_family(space.neighbourhoods)
        return (True, None) if membership(mu, fam) else (False, fam)
    raise ValueError(f"unknown method {method!r}")


def _supercomplete_over(mu: PreUniformity, covers: list[Family]) -> tuple[bool, Family | None]:
    for c in covers:
        if not membership(mu, c):
            return False, c
    return True, None


def _member_candidates(mu: PreUniformity) -> list[tuple[tuple[int, ...], Family]]:
    """Finest representatives: the full meet (filter) or each basis cover."""
    if mu.mode == "filter":
        return [(tuple(range(len(mu.basis))), mu.full_meet)]
    return [((i,), b) for i, b in enumerate(mu.basis)]


@dataclass(frozen=True)
class MetricFineMembership:
    result: bool
    closed_cover: Family = ()
    choices: tuple[tuple[int, ...], ...] = ()

    def __bool__(self) -> bool:
        return self.result


def metric_fine_membership(mu: PreUniformity, v: Cover | Iterable, method: str = "auto") -> MetricFineMembership:
    """Is ``v`` uniform piecewise over some closed cover?

    ``method="enumerate"`` searches reduced closed covers. ``"closures"``
    uses the point closures, the finest closed cover. ``"auto"`` enumerates
    when the space has at most 6 points.
    """
    fam = _as_family(mu, v)
    space = mu.space
    cands = _member_candidates(mu)

    def good(f: int) -> tuple[int, ...] | None:
        vf = bits.restrict(fam, f)
        for idx, c in cands:
            if bits.refines(bits.restrict(c, f), vf):
                return idx
        return None

    if method == "auto":
        method = "enumerate" if space.n <= 6 else "closures"
    if method == "closures":
        pieces = bits.reduce_family(space.closure(1 << x) for x in range(space.n))
        picks = [good(f) for f in pieces]
        if all(p is not None for p in picks):
            return MetricFineMembership(True, pieces, tuple(picks))
        return MetricFineMembership(False)
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    closeds = [c for c in space.closeds if c]
    ok = {c: good(c) for c in closeds}
    usable = [c for c in closeds if ok[c] is not None]
    if bits.union(usable) != space.carrier:
        return MetricFineMembership(False)
    covers = antichain_covers(usable, space.carrier, get_budget().max_family)
    best = min(covers, key=lambda c: (len(c), c))
    return MetricFineMembership(True, best, tuple(ok[c] for c in best))


def metric_fine(mu: PreUniformity) -> PreUniformity:
    """``mμ`` presented by covers patched together over the point closures."""
    space = mu.space
    pieces = bits.reduce_family(space.closure(1 << x) for x in range(space.n))
    options = []
    for f in pieces:
        opts = {bits.reduce_family(bits.restrict(c, f)): None for _, c in _member_candidates(mu)}
        options.append(list(_minimal_only(opts)))
    total = 1
    for o in options:
        total *= len(o)
    check_family_size(total, "metric-fine patching")
    found = {bits.reduce_family(p for part in choice for p in part): None for choice in itertools.product(*options)}
    basis = sorted(_minimal_only(found), key=lambda f: (len(f), f))
    return PreUniformity(space, tuple(basis), mu.mode)


def product_preuniformity(factors: Sequence[tuple[FiniteSpace, PreUniformity]]) -> PreUniformity:
    """Pull factor bases back to the product.

    All-filter factors give the pullbacks themselves, factor by factor in
    order. If any factor is a prefilter, the basis holds one meet per
    combination of factor basis covers and the result is a prefilter.
    """
    spaces = [s for s, _ in factors]
    for s, m in factors:
        if m.space != s:
            raise MismatchedCarrier("factor pre-uniformity does not match its space")
    prod = product(spaces)
    pulled = [
        [bits.canonical(prod.preimage(i, e) for e in b) for b in m.basis]
        for i, (_, m) in enumerate(factors)
    ]
    if all(m.mode == "filter" for _, m in factors):
        basis = tuple(bits.reduce_family(b) for layer in pulled for b in layer)
        return PreUniformity(prod, basis, "filter")
    total = 1
    for layer in pulled:
        total *= max(len(layer), 1)
    check_family_size(total, "product basis")
    basis = []
    for combo in itertools.product(*(layer or [(prod.carrier,)] for layer in pulled)):
        fam: Family = (prod.carrier,)
        for b in combo:
            fam = bits.reduce_family(bits.meet(fam, b))
        basis.append(fam)
    return PreUniformity(prod, tuple(dict.fromkeys(basis)), "prefilter")


def pullback_index(factors: Sequence[tuple[FiniteSpace, PreUniformity]], i: int, j: int) -> int:
    """Index in a filter-mode product basis of factor ``i``'s basis cover ``j``."""
    return sum(len(m.basis) for _, m in factors[:i]) + j


def is_lambda_neighbourhood(mu: PreUniformity, a: int, n: int) -> tuple[bool, Family | None]:
    """Is there a λ-cover whose star around ``a`` stays inside ``n``?"""
    if a & ~n or n & ~mu.space.carrier:
        raise ValueError("need a ⊆ n ⊆ carrier")
    lam, _ = lambda_coreflection(mu)
    for _, c in _member_candidates(lam):
        if bits.star(a, c) & ~n == 0:
            return True, c
    return False, None


def finite_cover_part(mu: PreUniformity) -> PreUniformity:
    """The finite members of ``mu``; every cover of a finite set is finite."""
    assert all(len(b) <= 1 << mu.space.n for b in mu.basis)
    return mu


def preunif_to_json(mu: PreUniformity, include_space: bool = True) -> dict:
    out: dict = {}
    if include_space:
        out["space"] = space_to_json(mu.space)
    out["mode"] = mu.mode
    out["basis"] = [{"elements": [bits.members(e) for e in b]} for b in mu.basis]
    return out


def preunif_from_json(obj: dict, space: FiniteSpace | None = None) -> PreUniformity:
    if not isinstance(obj, dict) or "basis" not in obj:
        raise ValueError("pre-uniformity must be an object with a 'basis' list")
    if space is None:
        if "space" not in obj:
            raise ValueError("pre-uniformity has no 'space' field")
        space = space_from_json(obj["space"])
    basis = []
    for c in obj["basis"]:
        elements = c["elements"] if isinstance(c, dict) else c
        for e in elements:
            if not all(isinstance(p, int) and 0 <= p < space.n for p in e):
                raise ValueError(f"basis element {e} names points outside the carrier")
        basis.append([bits.mask_of(e) for e in elements])
    return make_preuniformity(space, basis, obj.get("mode", "filter"))


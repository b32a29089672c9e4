"""Finite topological spaces.

A finite space is stored through the minimal open neighbourhood ``U_x`` of
each point: a set is open exactly when it contains ``U_x`` for each of its
points. The open family itself is derived on demand because products can
have far too many opens to list.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

from . import bits
from .config import check_family_size, get_budget
from .errors import BudgetExceeded, NotATopology


@dataclass(frozen=True)
class FiniteSpace:
    n: int
    neighbourhoods: tuple[int, ...]

    @property
    def carrier(self) -> int:
        return bits.full(self.n)

    @property
    def points(self) -> range:
        return range(self.n)

    @cached_property
    def opens(self) -> tuple[int, ...]:
        """All open sets, sorted by size then value."""
        found = {0}
        for u in self.neighbourhoods:
            found |= {s | u for s in found}
            check_family_size(len(found), "open-set enumeration")
        return tuple(sorted(found, key=lambda s: (s.bit_count(), s)))

    @cached_property
    def closeds(self) -> tuple[int, ...]:
        full = self.carrier
        return tuple(sorted((full & ~o for o in self.opens), key=lambda s: (s.bit_count(), s)))

    def is_open(self, s: int) -> bool:
        nb = self.neighbourhoods
        return all(nb[x] & ~s == 0 for x in bits.iter_bits(s))

    def is_closed(self, s: int) -> bool:
        return self.is_open(self.carrier & ~s)

    def interior(self, s: int) -> int:
        nb = self.neighbourhoods
        out = 0
        for x in bits.iter_bits(s):
            if nb[x] & ~s == 0:
                out |= 1 << x
        return out

    def closure(self, s: int) -> int:
        nb = self.neighbourhoods
        out = 0
        for x in range(self.n):
            if nb[x] & s:
                out |= 1 << x
        return out

    def up(self, s: int) -> int:
        """Smallest open set containing ``s``."""
        nb = self.neighbourhoods
        out = 0
        for x in bits.iter_bits(s):
            out |= nb[x]
        return out

    def relative_interior(self, within: int, s: int) -> int:
        """Interior of ``s`` in the subspace ``within`` (``s`` is clipped to it)."""
        s &= within
        nb = self.neighbourhoods
        out = 0
        for x in bits.iter_bits(s):
            if nb[x] & within & ~s == 0:
                out |= 1 << x
        return out

    def relative_closure(self, within: int, s: int) -> int:
        return self.closure(s & within) & within

    def is_relatively_open(self, within: int, s: int) -> bool:
        return s & ~within == 0 and self.relative_interior(within, s) == s

    def check_subset(self, s: int) -> int:
        if s < 0 or s & ~self.carrier:
            raise ValueError(f"subset {s:#x} is not contained in a {self.n}-point carrier")
        return s

    def __repr__(self) -> str:
        return f"FiniteSpace(n={self.n}, neighbourhoods={[bits.fmt(u) for u in self.neighbourhoods]})"


@dataclass(frozen=True, repr=False)
class ProductSpace(FiniteSpace):
    """Finite product; point ``p`` has coordinates ``coords(p)`` in row-major order."""

    factors: tuple[FiniteSpace, ...] = field(default=())

    @cached_property
    def _coord_table(self) -> tuple[tuple[int, ...], ...]:
        return tuple(itertools.product(*(range(f.n) for f in self.factors)))

    @cached_property
    def _strides(self) -> tuple[int, ...]:
        strides = []
        acc = 1
        for f in reversed(self.factors):
            strides.append(acc)
            acc *= f.n
        return tuple(reversed(strides))

    @cached_property
    def _fibres(self) -> tuple[tuple[int, ...], ...]:
        """``_fibres[i][a]``: points whose coordinate ``i`` equals ``a``."""
        table = [[0] * f.n for f in self.factors]
        for p, cs in enumerate(self._coord_table):
            for i, a in enumerate(cs):
                table[i][a] |= 1 << p
        return tuple(tuple(row) for row in table)

    def coords(self, p: int) -> tuple[int, ...]:
        return self._coord_table[p]

    def point(self, coords: Sequence[int]) -> int:
        return sum(c * s for c, s in zip(coords, self._strides))

    def project(self, i: int, s: int) -> int:
        """Image of ``s`` under the ``i``-th projection."""
        out = 0
        for p in bits.iter_bits(s):
            out |= 1 << self._coord_table[p][i]
        return out

    def preimage(self, i: int, a: int) -> int:
        fib = self._fibres[i]
        out = 0
        for x in bits.iter_bits(a):
            out |= fib[x]
        return out

    def box(self, sides: Sequence[int | None]) -> int:
        """Product of factor subsets; ``None`` stands for the whole factor."""
        out = self.carrier
        for i, a in enumerate(sides):
            if a is not None:
                out &= self.preimage(i, a)
        return out

    def __repr__(self) -> str:
        return f"ProductSpace(factors={list(self.factors)!r})"


def _check_points(n: int, limit: int) -> None:
    if n < 0:
        raise ValueError("point count must be non-negative")
    if n > limit:
        raise BudgetExceeded(f"{n} points exceeds the budget of {limit}")


def from_neighbourhoods(neighbourhoods: Sequence[int]) -> FiniteSpace:
    """Build a space from minimal neighbourhoods, validating the preorder axioms."""
    n = len(neighbourhoods)
    _check_points(n, get_budget().max_points)
    nb = tuple(neighbourhoods)
    full = bits.full(n)
    for x, u in enumerate(nb):
        if not (u >> x) & 1 or u & ~full:
            raise NotATopology(f"neighbourhood of {x} must contain {x} and lie in the carrier")
        for y in bits.iter_bits(u):
            if nb[y] & ~u:
                raise NotATopology(f"neighbourhood of {y} is not inside that of {x}", (x, y))
    return FiniteSpace(n, nb)


def _find_violating_pair(family: set[int]) -> tuple[int, int] | None:
    for a, b in itertools.combinations(sorted(family), 2):
        if a | b not in family or a & b not in family:
            return a, b
    return None


def make_space(n: int, opens: Iterable[Iterable[int] | int]) -> FiniteSpace:
    """Validate an open-set family and return the space it defines.

    Members of ``opens`` may be point collections or bitmasks.
    """
    _check_points(n, get_budget().max_points)
    full = bits.full(n)
    family = set()
    for o in opens:
        m = o if isinstance(o, int) else bits.mask_of(o)
        if m & ~full or m < 0:
            raise NotATopology(f"open set {bits.fmt(m)} leaves the carrier")
        family.add(m)
    if 0 not in family:
        raise NotATopology("the empty set is not open")
    if full not in family:
        raise NotATopology("the carrier is not open")
    nb = []
    for x in range(n):
        u = full
        for o in family:
            if (o >> x) & 1:
                u &= o
        nb.append(u)
    space = FiniteSpace(n, tuple(nb))
    if any(u not in family for u in nb) or set(space.opens) != family:
        pair = _find_violating_pair(family)
        if pair is None:
            raise NotATopology("open family is not closed under unions and intersections")
        a, b = pair
        raise NotATopology(
            f"{bits.fmt(a)} and {bits.fmt(b)} have a union or intersection outside the family",
            pair,
        )
    return space


def discrete(n: int) -> FiniteSpace:
    return FiniteSpace(n, tuple(1 << x for x in range(n)))


def indiscrete(n: int) -> FiniteSpace:
    return FiniteSpace(n, (bits.full(n),) * n)


def sierpinski() -> FiniteSpace:
    """Two points, ``{1}`` open and ``0`` in its closure."""
    return make_space(2, [(), (1,), (0, 1)])


def closure(space: FiniteSpace, s: int) -> int:
    return space.closure(space.check_subset(s))


def interior(space: FiniteSpace, s: int) -> int:
    return space.interior(space.check_subset(s))


def regular_open_extension(space: FiniteSpace, s: int) -> int:
    """``int(cl(s))``."""
    return space.interior(space.closure(space.check_subset(s)))


def is_regular_open(space: FiniteSpace, s: int) -> bool:
    return regular_open_extension(space, s) == s


def is_regular(space: FiniteSpace) -> bool:
    """Points and closed sets missing them have disjoint open neighbourhoods.

    ``U_x`` and ``up(C)`` are the smallest candidates, so separation holds
    exactly when they are disjoint.
    """
    nb = space.neighbourhoods
    for c in space.closeds:
        hull = space.up(c)
        for x in bits.iter_bits(space.carrier & ~c):
            if nb[x] & hull:
                return False
    return True


def subspace(space: FiniteSpace, a: int) -> tuple[FiniteSpace, tuple[int, ...]]:
    """Relative topology on ``a``; the second item lists original point ids."""
    pts = bits.members(space.check_subset(a))
    index = {p: i for i, p in enumerate(pts)}
    nb = []
    for p in pts:
        nb.append(bits.mask_of(index[q] for q in bits.iter_bits(space.neighbourhoods[p] & a)))
    return FiniteSpace(len(pts), tuple(nb)), tuple(pts)


def product(spaces: Sequence[FiniteSpace]) -> ProductSpace:
    if not spaces:
        raise ValueError("product needs at least one factor")
    total = 1
    for s in spaces:
        total *= s.n
    _check_points(total, get_budget().max_product_points)
    factors = tuple(spaces)
    nb = []
    for cs in itertools.product(*(range(f.n) for f in factors)):
        pts = [()]
        for f, c in zip(factors, cs):
            pts = [t + (y,) for t in pts for y in bits.iter_bits(f.neighbourhoods[c])]
        nb.append(pts)
    prod = ProductSpace(total, (), factors)
    masks = tuple(bits.mask_of(prod.point(t) for t in pts) for pts in nb)
    return ProductSpace(total, masks, factors)


def enumerate_spaces(n: int) -> list[FiniteSpace]:
    """Every topology on ``{0..n-1}`` (labelled), smallest ``n`` practical: n ≤ 4."""
    full = bits.full(n)
    options = [[u for u in bits.subsets(full) if (u >> x) & 1] for x in range(n)]
    out = []
    for nb in itertools.product(*options):
        if all(nb[y] & ~nb[x] == 0 for x in range(n) for y in bits.iter_bits(nb[x])):
            out.append(FiniteSpace(n, tuple(nb)))
    return out


def space_to_json(space: FiniteSpace) -> dict:
    if isinstance(space, ProductSpace):
        return {"product": [space_to_json(f) for f in space.factors]}
    return {"points": space.n, "opens": [bits.members(o) for o in space.opens]}


def space_from_json(obj: dict) -> FiniteSpace:
    if not isinstance(obj, dict):
        raise ValueError("space must be a JSON object")
    if "product" in obj:
        return product([space_from_json(f) for f in obj["product"]])
    try:
        n = obj["points"]
        opens = obj["opens"]
    except KeyError as exc:
        raise ValueError(f"space is missing the {exc.args[0]!r} field") from None
    if not isinstance(n, int) or not isinstance(opens, list):
        raise ValueError("space fields have the wrong types")
    for o in opens:
        if not all(isinstance(p, int) and 0 <= p < n for p in o):
            raise ValueError(f"open set {o} names points outside 0..{n - 1}")
    return make_space(n, opens)

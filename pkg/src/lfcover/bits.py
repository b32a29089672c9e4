"""Bitmask helpers.

Subsets of a carrier ``{0..n-1}`` are Python ints; bit ``i`` set means
point ``i`` is a member. Families of subsets are tuples of ints.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator

Family = tuple[int, ...]


def full(n: int) -> int:
    return (1 << n) - 1


def mask_of(points: Iterable[int]) -> int:
    m = 0
    for p in points:
        m |= 1 << p
    return m


def members(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def subsets(mask: int) -> Iterator[int]:
    """All subsets of ``mask`` including 0, in increasing numeric order."""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


def nonempty_subsets(mask: int) -> Iterator[int]:
    it = subsets(mask)
    next(it)
    yield from it


def is_subset(a: int, b: int) -> bool:
    return a & ~b == 0


def union(family: Iterable[int]) -> int:
    m = 0
    for s in family:
        m |= s
    return m


def canonical(family: Iterable[int]) -> Family:
    """Distinct non-empty members, sorted."""
    return tuple(sorted({s for s in family if s}))


def reduce_family(family: Iterable[int]) -> Family:
    """Drop empties and members contained in another member; sort."""
    items = sorted({s for s in family if s}, key=lambda s: -s.bit_count())
    kept: list[int] = []
    for s in items:
        if not any(s & ~k == 0 for k in kept):
            kept.append(s)
    return tuple(sorted(kept))


def refines(u: Iterable[int], v: Family) -> bool:
    return all(any(a & ~b == 0 for b in v) for a in u)


def meet(u: Iterable[int], v: Iterable[int]) -> Family:
    v = tuple(v)
    return canonical(a & b for a in u for b in v)


def restrict(u: Iterable[int], a: int) -> Family:
    return canonical(s & a for s in u)


def star(a: int, family: Iterable[int]) -> int:
    m = 0
    for s in family:
        if s & a:
            m |= s
    return m


def star_cover(family: Family) -> Family:
    return canonical(star(s, family) for s in family)


def fmt(mask: int) -> str:
    return "{" + ",".join(str(p) for p in members(mask)) + "}"


def fmt_family(family: Iterable[int]) -> str:
    return "{" + ", ".join(fmt(s) for s in family) + "}"

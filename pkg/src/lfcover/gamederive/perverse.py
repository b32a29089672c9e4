"""Perversities and perverse products of trees."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from ..cert import LazyTree
from ..errors import BudgetExceeded
from ..space import ProductSpace


@dataclass(frozen=True, order=True)
class Perversity:
    """A non-increasing, eventually zero sequence ``p(1), p(2), ...``.

    Trailing zeros are not stored.
    """

    entries: tuple[int, ...] = ()

    def __post_init__(self):
        e = tuple(self.entries)
        while e and e[-1] == 0:
            e = e[:-1]
        if any(x < 0 for x in e):
            raise ValueError(f"perversity entries must be non-negative: {e}")
        if any(a < b for a, b in zip(e, e[1:])):
            raise ValueError(f"perversity must be non-increasing: {e}")
        object.__setattr__(self, "entries", e)

    def __call__(self, i: int) -> int:
        """Value at coordinate ``i`` (1-based)."""
        return self.entries[i - 1] if 1 <= i <= len(self.entries) else 0

    def restrict(self, m: int) -> tuple[int, ...]:
        return tuple(self(i) for i in range(1, m + 1))

    def successor(self) -> Perversity:
        """Increment the first entry equal to its right neighbour."""
        e = list(self.entries) + [0, 0]
        k = next(j for j in range(len(e) - 1) if e[j] == e[j + 1])
        e[k] += 1
        return Perversity(tuple(e))

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.entries)) + ")"


def standard_perversities(n: int) -> list[Perversity]:
    if n < 1:
        raise ValueError("n must be at least 1")
    out = [Perversity()]
    while len(out) < n:
        out.append(out[-1].successor())
    return out


def _vec_order(p: Sequence[int], q: Sequence[int]) -> str | None:
    le = all(a <= b for a, b in zip(p, q))
    ge = all(a >= b for a, b in zip(p, q))
    if le and ge:
        return "="
    if le:
        return "<"
    if ge:
        return ">"
    return None


def perversity_order(p: Perversity, q: Perversity) -> str | None:
    """Coordinatewise comparison: ``"<"``, ``">"``, ``"="`` or None."""
    m = max(len(p.entries), len(q.entries))
    return _vec_order(p.restrict(m), q.restrict(m))


def _is_tree(vectors: Iterable[tuple[int, ...]]) -> bool:
    vs = list(dict.fromkeys(vectors))
    if not vs:
        return False
    minima = [v for v in vs if all(_vec_order(v, w) in ("<", "=") for w in vs)]
    if len(minima) != 1:
        return False
    for v in vs:
        # a set is a chain iff its sum-sorted neighbours are comparable
        below = sorted((w for w in vs if _vec_order(w, v) == "<"), key=sum)
        if any(_vec_order(a, b) != "<" for a, b in zip(below, below[1:])):
            return False
    return True


def perversity_set_is_tree(ps: Iterable[Perversity]) -> bool:
    """Unique minimum and linearly ordered predecessor sets."""
    ps = list(ps)
    m = max((len(p.entries) for p in ps), default=0)
    return _is_tree(p.restrict(m) for p in ps)


@dataclass(frozen=True)
class PerverseNode:
    factors: tuple
    level_vector: tuple[int, ...]


def chain_tree(length: int) -> LazyTree:
    """The chain ``0 < 1 < ... < length-1``."""
    return LazyTree(0, lambda k: (k + 1,) if k + 1 < length else ())


def _descendants(tree: LazyTree, node, depth: int) -> list:
    layer = [node]
    for _ in range(depth):
        layer = [c for x in layer for c in tree.successors(x)]
    return layer


def perverse_product(trees: Sequence[LazyTree], ps: Iterable[Perversity], depth_budget: int) -> LazyTree:
    """Tuples of factor nodes whose level vector lies in the restricted set.

    A node's immediate successors raise the level vector to a cover of it
    in the restricted perversity set. Expanding a node whose level vector
    has ``depth_budget`` predecessors raises ``BudgetExceeded``.
    """
    m = len(trees)
    if m == 0:
        raise ValueError("need at least one factor tree")
    levels = sorted(set(p.restrict(m) for p in ps))
    zero = (0,) * m
    if zero not in levels:
        raise ValueError("the restricted perversity set must contain the zero vector")

    def strictly_below(v):
        return [w for w in levels if _vec_order(w, v) == "<"]

    covers: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for v in levels:
        above = [w for w in levels if _vec_order(v, w) == "<"]
        covers[v] = [w for w in above if not any(_vec_order(v, z) == "<" and _vec_order(z, w) == "<" for z in above)]
    depth_of = {v: len(strictly_below(v)) for v in levels}

    def successors(node: PerverseNode) -> list[PerverseNode]:
        p = node.level_vector
        if depth_of[p] >= depth_budget:
            raise BudgetExceeded(f"perverse product expanded past depth {depth_budget}")
        out = []
        for q in covers[p]:
            choices = [_descendants(t, x, b - a) for t, x, a, b in zip(trees, node.factors, p, q)]
            combos: list[tuple] = [()]
            for ch in choices:
                combos = [c + (y,) for c in combos for y in ch]
            out.extend(PerverseNode(c, q) for c in combos)
        return out

    root = PerverseNode(tuple(t.root for t in trees), zero)
    return LazyTree(root, successors)


def set_theoretic_perverse_product(
    trees: Sequence[LazyTree], ps: Iterable[Perversity], depth_budget: int, space: ProductSpace
) -> LazyTree:
    """As :func:`perverse_product`, labelled by products of factor labels."""
    base = perverse_product(trees, ps, depth_budget)
    if any(t.label is None for t in trees):
        raise ValueError("every factor tree needs a label function")

    def label(node: PerverseNode) -> int:
        return space.box([t.label(x) for t, x in zip(trees, node.factors)])

    return LazyTree(base.root, base.successors, label)


def explore(tree: LazyTree, depth: int) -> list[tuple[tuple, object]]:
    """All positions down to ``depth`` as (path of child indices, node) pairs."""
    out = [((), tree.root)]
    frontier = out[:]
    for _ in range(depth):
        nxt = []
        for path, node in frontier:
            for i, c in enumerate(tree.successors(node)):
                nxt.append((path + (i,), c))
        out.extend(nxt)
        frontier = nxt
    return out


def successors_vary_one_coordinate(tree: LazyTree, depth: int) -> bool:
    """Do immediate successors differ from their parent in exactly one factor?"""
    for _, node in explore(tree, depth - 1):
        for c in tree.successors(node):
            if sum(a != b for a, b in zip(node.level_vector, c.level_vector)) != 1:
                return False
    return True

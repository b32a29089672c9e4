"""K-derivatives, K-rank and decomposition trees."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

from .. import bits
from ..cert import CoverTree, Node
from ..errors import BudgetExceeded, NotKScattered
from ..space import FiniteSpace

CONVENTIONS = ("relative", "ambient")


@dataclass(frozen=True)
class KClass:
    """A class of subspaces, given by a predicate on (space, subset)."""

    name: str
    predicate: Callable[[FiniteSpace, int], bool]
    # membership passes to subsets, so the smallest neighbourhood decides
    hereditary: bool = True

    def __call__(self, space: FiniteSpace, subset: int) -> bool:
        return self.predicate(space, subset)


def _relatively_discrete(space: FiniteSpace, s: int) -> bool:
    nb = space.neighbourhoods
    return all(nb[x] & s == 1 << x for x in bits.iter_bits(s))


SINGLETONS = KClass("singletons", lambda space, s: s.bit_count() == 1)
DISCRETE = KClass("discrete", _relatively_discrete)
ALL = KClass("all", lambda space, s: True)
BUILTIN = {k.name: k for k in (SINGLETONS, DISCRETE, ALL)}


def has_k_neighbourhood(space: FiniteSpace, k: KClass, s: int, x: int) -> bool:
    """Some ``N`` with ``U_x ∩ s ⊆ N ⊆ s`` belongs to ``k``."""
    core = space.neighbourhoods[x] & s
    if k.hereditary:
        return k(space, core)
    return any(k(space, core | extra) for extra in bits.subsets(s & ~core))


def k_derivative(space: FiniteSpace, k: KClass, s: int | None = None) -> int:
    """Points of the closed set ``s`` with no K-neighbourhood inside ``s``."""
    s = space.carrier if s is None else space.check_subset(s)
    if not space.is_closed(s):
        raise ValueError(f"{bits.fmt(s)} is not closed")
    return _derivative(space, k, s)


def _derivative(space: FiniteSpace, k: KClass, s: int) -> int:
    out = 0
    for x in bits.iter_bits(s):
        if not has_k_neighbourhood(space, k, s, x):
            out |= 1 << x
    return out


def k_derivative_chain(space: FiniteSpace, k: KClass, s: int | None = None) -> list[int]:
    """``s, D(s), D²(s), ...`` ending at ∅ or at the first repeated set.

    ``s`` only needs to be closed within itself, so any subset is accepted.
    """
    cur = space.carrier if s is None else s
    chain = [cur]
    while cur:
        nxt = _derivative(space, k, cur)
        if nxt == cur:
            break
        chain.append(nxt)
        cur = nxt
    return chain


def k_rank(space: FiniteSpace, k: KClass, s: int | None = None) -> int:
    """Least ``α`` with ``D^α(s) = ∅``, computed inside the subspace ``s``."""
    chain = k_derivative_chain(space, k, s)
    if chain[-1]:
        raise NotKScattered(f"derivative stalls on {bits.fmt(chain[-1])}")
    return len(chain) - 1


def is_k_scattered(space: FiniteSpace, k: KClass, s: int | None = None) -> bool:
    return not k_derivative_chain(space, k, s)[-1]


def top_set(space: FiniteSpace, k: KClass, s: int | None = None) -> int:
    """The last non-empty derivative of ``s``."""
    chain = k_derivative_chain(space, k, s)
    if chain[-1]:
        raise NotKScattered(f"derivative stalls on {bits.fmt(chain[-1])}")
    return chain[-2] if len(chain) >= 2 else 0


def decomposition_pieces(space: FiniteSpace, k: KClass, s: int, convention: str = "relative") -> list[int]:
    """Lower-rank closed pieces hung below ``s`` next to its top set.

    ``relative``: closed in ``s ∖ top`` with non-empty interior there.
    ``ambient``: closed in ``s``, inside ``s ∖ top``, with non-empty interior in ``s``.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    rank = k_rank(space, k, s)
    top = top_set(space, k, s)
    rest = s & ~top
    within = rest if convention == "relative" else s
    out = []
    for c in bits.nonempty_subsets(rest):
        if space.relative_closure(within, c) != c:
            continue
        if not space.relative_interior(within, c):
            continue
        if k_rank(space, k, c) < rank:
            out.append(c)
    return out


def decomposition_tree(
    space: FiniteSpace, k: KClass, depth_budget: int, convention: str = "relative"
) -> CoverTree:
    """Root ``X``; below each node its top set and the trees of its pieces."""
    if not is_k_scattered(space, k):
        raise NotKScattered("space is not K-scattered")
    nodes: list[Node] = []

    def build(s: int, parent: int | None, depth: int) -> None:
        if depth > depth_budget:
            raise BudgetExceeded(f"decomposition tree deeper than {depth_budget}")
        nid = len(nodes)
        nodes.append(Node(nid, parent, s))
        if k_rank(space, k, s) <= 1:
            return
        build(top_set(space, k, s), nid, depth + 1)
        for c in decomposition_pieces(space, k, s, convention):
            build(c, nid, depth + 1)

    build(space.carrier, None, 0)
    return CoverTree(tuple(nodes))

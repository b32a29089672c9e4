"""Stationary strategies, the game tree, and partition-completeness."""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

from .. import bits
from ..bits import Family
from ..cert import CoverTree, LazyTree, Node
from ..config import get_budget
from ..cover import (
    Cover,
    is_complete_sequence,
    is_exhaustive,
    is_left_open_partition,
    minimal_neighbourhood_cover,
)
from ..errors import BudgetExceeded, IllegalMove, InvalidCover, InvalidStrategy
from ..space import FiniteSpace

SOURCES = ("minimal", "minimal-open", "exhaustive", "table")


@dataclass(frozen=True)
class Strategy:
    """``table[S]`` is the relatively open choice made inside ``S``."""

    space: FiniteSpace
    table: tuple[int, ...]
    source: str = "table"

    def __call__(self, s: int) -> int:
        return self.table[s]


def _validate(space: FiniteSpace, table: Sequence[int]) -> None:
    for s in bits.nonempty_subsets(space.carrier):
        t = table[s]
        if not t:
            raise InvalidStrategy(f"choice for {bits.fmt(s)} is empty", s)
        if t & ~s:
            raise InvalidStrategy(f"choice {bits.fmt(t)} is not inside {bits.fmt(s)}", s)
        if not space.is_relatively_open(s, t):
            raise InvalidStrategy(f"choice {bits.fmt(t)} is not relatively open in {bits.fmt(s)}", s)


def make_strategy(
    space: FiniteSpace,
    source: str = "minimal",
    cover: Cover | Family | None = None,
    table: Mapping[int, int] | Sequence[int] | None = None,
) -> Strategy:
    """Build and validate a stationary strategy.

    ``minimal`` takes ``U_x ∩ S`` for the least ``x`` in ``S``;
    ``minimal-open`` uses the ``x`` with the smallest such trace;
    ``exhaustive`` takes the first trace of ``cover`` that is non-empty and
    relatively open; ``table`` uses the supplied mapping.
    """
    if space.n > get_budget().max_strategy_points:
        raise BudgetExceeded(f"strategy tables are limited to {get_budget().max_strategy_points} points")
    nb = space.neighbourhoods
    size = 1 << space.n
    out = [0] * size
    if source == "minimal":
        for s in range(1, size):
            out[s] = nb[bits.lowest(s)] & s
    elif source == "minimal-open":
        for s in range(1, size):
            out[s] = min((nb[x] & s for x in bits.iter_bits(s)), key=lambda t: (t.bit_count(), bits.lowest(t)))
    elif source == "exhaustive":
        if cover is None:
            raise ValueError("exhaustive source needs a cover")
        fam = cover.elements if isinstance(cover, Cover) else tuple(cover)
        for s in range(1, size):
            for e in fam:
                t = e & s
                if t and space.is_relatively_open(s, t):
                    out[s] = t
                    break
            else:
                raise InvalidStrategy(f"cover has no relatively open trace on {bits.fmt(s)}", s)
    elif source == "table":
        if table is None:
            raise ValueError("table source needs a table")
        for s in range(1, size):
            try:
                out[s] = table[s]
            except (KeyError, IndexError):
                raise InvalidStrategy(f"table has no entry for {bits.fmt(s)}", s) from None
    else:
        raise ValueError(f"source must be one of {SOURCES}")
    _validate(space, out)
    return Strategy(space, tuple(out), source)


def phi_derivative(strategy: Strategy, s: int) -> int:
    if not s:
        raise ValueError("derivative of the empty set")
    return s & ~strategy(s)


def phi_derivative_chain(strategy: Strategy, s: int | None = None) -> list[int]:
    cur = strategy.space.carrier if s is None else s
    chain = [cur]
    while cur:
        cur = phi_derivative(strategy, cur)
        chain.append(cur)
    return chain


def game_successors(strategy: Strategy, s: int) -> list[int]:
    """``S ∖ φ(S)`` if non-empty, then each ``cl_S(V)`` missing it.

    ``V`` ranges over non-empty relatively open subsets of ``φ(S)``.
    """
    space = strategy.space
    chosen = strategy(s)
    rest = s & ~chosen
    out = [rest] if rest else []
    seen = set(out)
    for v in bits.nonempty_subsets(chosen):
        if not space.is_relatively_open(s, v):
            continue
        c = space.relative_closure(s, v)
        if c & rest or c in seen:
            continue
        seen.add(c)
        out.append(c)
    return out


def game_tree(space: FiniteSpace, strategy: Strategy) -> LazyTree:
    """The (generally non-Noetherian) tree of closed sets rooted at the carrier."""
    if strategy.space != space:
        raise ValueError("strategy belongs to another space")
    return LazyTree(space.carrier, lambda s: game_successors(strategy, s), lambda s: s)


@dataclass(frozen=True)
class SubtreeResult:
    tree: CoverTree
    mode: str
    # (node id, points of its label missed by the kept successors)
    deficits: tuple[tuple[int, int], ...] = ()
    refines_cover: bool = False
    refines_directed: bool = True


def cover_refining_subtree(
    space: FiniteSpace, strategy: Strategy, g: Cover | Family, mode: str = "directed"
) -> SubtreeResult:
    """Expand the game tree until every end fits the cover.

    ``directed`` stops at nodes inside a finite union of cover elements.
    ``cover`` stops at nodes inside a single element and follows only
    successors strictly smaller than their parent; points that the kept
    successors fail to cover are reported as deficits.
    """
    fam = g.elements if isinstance(g, Cover) else tuple(g)
    if bits.union(fam) != space.carrier or not all(space.is_open(e) for e in fam):
        raise InvalidCover("expected an open cover")
    if mode not in ("directed", "cover"):
        raise ValueError("mode must be 'directed' or 'cover'")
    union = bits.union(fam)
    nodes: list[Node] = []
    deficits = []
    queue = [(space.carrier, None)]
    while queue:
        s, parent = queue.pop(0)
        nid = len(nodes)
        nodes.append(Node(nid, parent, s))
        if mode == "directed":
            if s & ~union == 0:
                continue
        elif any(s & ~e == 0 for e in fam):
            continue
        kids = [c for c in game_successors(strategy, s) if c != s and c & ~s == 0]
        missed = s & ~bits.union(kids)
        if missed:
            deficits.append((nid, missed))
        queue.extend((c, nid) for c in kids)
    tree = CoverTree(tuple(nodes))
    leaves = [n.label for n in tree.leaves()]
    refines_cover = all(any(l & ~e == 0 for e in fam) for l in leaves)
    return SubtreeResult(tree, mode, tuple(deficits), refines_cover, all(l & ~union == 0 for l in leaves))


@dataclass(frozen=True)
class Move:
    round: int
    chosen_by_one: int
    answer: int


@dataclass(frozen=True)
class GameResult:
    transcript: tuple[Move, ...]
    winner: str
    cluster: int


def play_game(
    space: FiniteSpace,
    strategy: Strategy,
    player_one: Callable[[int, int], int],
    round_budget: int,
) -> GameResult:
    """Referee ``round_budget`` rounds; Player II answers with the strategy.

    ``player_one(round, previous_answer)`` returns the next set, where the
    first previous answer is the carrier. Player II wins when the closures
    of its answers have a common point.
    """
    if round_budget < 1:
        raise ValueError("round budget must be at least 1")
    prev = space.carrier
    moves = []
    for r in range(1, round_budget + 1):
        s = player_one(r, prev)
        if not s:
            raise IllegalMove(f"round {r}: empty set", "I", "non-empty")
        if s & ~prev:
            raise IllegalMove(f"round {r}: {bits.fmt(s)} is not inside {bits.fmt(prev)}", "I", "nested")
        t = strategy(s)
        if not t or t & ~s:
            raise IllegalMove(f"round {r}: answer {bits.fmt(t)} is not a non-empty subset", "II", "nested")
        if not space.is_relatively_open(s, t):
            raise IllegalMove(f"round {r}: answer {bits.fmt(t)} is not relatively open", "II", "relatively open")
        moves.append(Move(r, s, t))
        prev = t
    cluster = space.carrier
    for m in moves:
        cluster &= space.closure(m.answer)
    return GameResult(tuple(moves), "II" if cluster else "I", cluster)


@dataclass(frozen=True)
class PartitionWitness:
    exhaustive_cover: Family
    left_open_partition: tuple[int, ...]
    validated: bool


def is_partition_complete(space: FiniteSpace) -> PartitionWitness:
    """Validate the constant minimal-neighbourhood witness sequences.

    The left-open partition groups points with equal minimal neighbourhoods,
    ordered by neighbourhood size.
    """
    mn = minimal_neighbourhood_cover(space)
    classes: dict[int, int] = {}
    for x, u in enumerate(space.neighbourhoods):
        classes[u] = classes.get(u, 0) | (1 << x)
    blocks = [classes[u] for u in sorted(classes, key=lambda u: (u.bit_count(), u))]
    ok_part, order = is_left_open_partition(space, blocks)
    ok = (
        is_exhaustive(space, mn)
        and is_complete_sequence(space, [mn])[0]
        and ok_part
        and is_complete_sequence(space, [tuple(sorted(blocks))])[0]
    )
    return PartitionWitness(mn.elements, order, ok)

"""Global enumeration budget.

Every enumerating routine consults :func:`get_budget`; exceeding a cap
raises :class:`~lfcover.errors.BudgetExceeded` instead of truncating.
"""

from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass

from .errors import BudgetExceeded


@dataclass(frozen=True)
class Budget:
    max_points: int = 20
    max_product_points: int = 64
    # cap on any materialized family (opens, covers, choice expansions)
    max_family: int = 500_000
    meet_depth: int = 3
    max_strategy_points: int = 16


_current = Budget()


def get_budget() -> Budget:
    return _current


def set_budget(budget: Budget) -> None:
    global _current
    _current = budget


@contextlib.contextmanager
def budget_override(**changes):
    """Temporarily replace fields of the active budget."""
    global _current
    saved = _current
    _current = dataclasses.replace(saved, **changes)
    try:
        yield _current
    finally:
        _current = saved


def check_family_size(count: int, what: str) -> None:
    limit = _current.max_family
    if count > limit:
        raise BudgetExceeded(f"{what}: {count} items exceeds budget {limit}")

"""Perverse tree products, K-derivatives and the exhaustive-cover game."""

from .game import (
    GameResult,
    Strategy,
    cover_refining_subtree,
    game_successors,
    game_tree,
    is_partition_complete,
    make_strategy,
    phi_derivative,
    phi_derivative_chain,
    play_game,
)
from .perverse import (
    Perversity,
    PerverseNode,
    chain_tree,
    perverse_product,
    perversity_order,
    perversity_set_is_tree,
    set_theoretic_perverse_product,
    standard_perversities,
)
from .scattered import (
    ALL,
    DISCRETE,
    SINGLETONS,
    KClass,
    decomposition_tree,
    is_k_scattered,
    k_derivative,
    k_derivative_chain,
    k_rank,
    top_set,
)

__all__ = [
    "ALL",
    "DISCRETE",
    "SINGLETONS",
    "GameResult",
    "KClass",
    "PerverseNode",
    "Perversity",
    "Strategy",
    "chain_tree",
    "cover_refining_subtree",
    "decomposition_tree",
    "game_successors",
    "game_tree",
    "is_k_scattered",
    "is_partition_complete",
    "k_derivative",
    "k_derivative_chain",
    "k_rank",
    "make_strategy",
    "perverse_product",
    "perversity_order",
    "perversity_set_is_tree",
    "phi_derivative",
    "phi_derivative_chain",
    "play_game",
    "set_theoretic_perverse_product",
    "standard_perversities",
    "top_set",
]

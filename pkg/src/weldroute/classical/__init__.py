"""Classical side: flooding baseline, oracle games and random tree embeddings."""

from weldroute.classical.embedding import (
    Embedding,
    Game3Outcome,
    LazyWeldedTrees,
    RateEstimate,
    column_uniformity,
    estimate_extremity,
    estimate_game3,
    estimate_improper,
    estimate_middle_intersection,
    game3_play,
    random_embedding,
)
from weldroute.classical.flooding import FloodResult, run_flooding_baseline
from weldroute.classical.game2 import Extend, GameTrace, NewRoot, game1_wins, game2_play
from weldroute.classical.trees import RootedTree, balanced_tree, builtin_strategies, game3_trees, path_tree, stars_then_paths

__all__ = [
    "Embedding",
    "Extend",
    "FloodResult",
    "Game3Outcome",
    "GameTrace",
    "LazyWeldedTrees",
    "NewRoot",
    "RateEstimate",
    "RootedTree",
    "balanced_tree",
    "builtin_strategies",
    "column_uniformity",
    "estimate_extremity",
    "estimate_game3",
    "estimate_improper",
    "estimate_middle_intersection",
    "game1_wins",
    "game2_play",
    "game3_play",
    "game3_trees",
    "path_tree",
    "random_embedding",
    "run_flooding_baseline",
    "stars_then_paths",
]

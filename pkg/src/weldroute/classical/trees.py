"""Labelled r-rooted binary trees and the built-in tree-building strategies."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

from weldroute.errors import ValidationError


@dataclass(frozen=True)
class RootedTree:
    """Tree on labels ``0..t`` with ``parent[0] == -1`` and ``parent[j] < j``.

    The root may have up to ``root_arity_cap`` children, every other node at
    most two.
    """

    parent: tuple[int, ...]
    root_arity_cap: int = 3

    def __post_init__(self):
        object.__setattr__(self, "parent", tuple(int(p) for p in self.parent))
        self.validate()

    @property
    def t(self) -> int:
        """Number of edges."""
        return len(self.parent) - 1

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.parent]
        for j in range(1, len(self.parent)):
            kids[self.parent[j]].append(j)
        return tuple(tuple(k) for k in kids)

    def validate(self) -> None:
        if not self.parent or self.parent[0] != -1:
            raise ValidationError("label 0 must be the root (parent -1)")
        if self.root_arity_cap < 1:
            raise ValidationError("root arity cap must be >= 1")
        counts = [0] * len(self.parent)
        for j in range(1, len(self.parent)):
            p = self.parent[j]
            if not 0 <= p < j:
                raise ValidationError(f"parent of {j} is {p}; parents must carry smaller labels")
            counts[p] += 1
        if counts[0] > self.root_arity_cap:
            raise ValidationError(f"root has {counts[0]} children, cap is {self.root_arity_cap}")
        for j in range(1, len(counts)):
            if counts[j] > 2:
                raise ValidationError(f"node {j} has {counts[j]} children")


def path_tree(t: int, r: int = 3) -> RootedTree:
    return RootedTree((-1,) + tuple(range(t)), r)


def balanced_tree(t: int, r: int = 3) -> RootedTree:
    """Breadth-first filled tree: root saturated at ``r`` children, then binary."""
    parent = [-1]
    free = [r]
    head = 0
    while len(parent) <= t:
        if free[head] == 0:
            head += 1
            continue
        free[head] -= 1
        parent.append(head)
        free.append(2)
    return RootedTree(tuple(parent), r)


def stars_then_paths(t: int, r: int = 3) -> RootedTree:
    """Root with ``min(r, t)`` children, remaining edges extend those branches round-robin."""
    k = min(r, t)
    parent = [-1] + [0] * k
    for j in range(k + 1, t + 1):
        parent.append(j - k)
    return RootedTree(tuple(parent), r)


TreeBuilder = Callable[[int, int], RootedTree]

TREE_BUILDERS: dict[str, TreeBuilder] = {
    "paths": path_tree,
    "balanced": balanced_tree,
    "stars-then-paths": stars_then_paths,
}


def game3_trees(builder: TreeBuilder | str, t: int) -> list[RootedTree]:
    """The ``t + 2`` trees of a tree-embedding game: two 2-rooted, then 3-rooted."""
    if isinstance(builder, str):
        builder = TREE_BUILDERS[builder]
    return [builder(t, 2), builder(t, 2)] + [builder(t, 3) for _ in range(t)]


def builtin_strategies() -> dict[str, Callable[[int], list[RootedTree]]]:
    """Named strategies mapping ``t`` to a full list of game trees."""
    return {name: (lambda t, b=b: game3_trees(b, t)) for name, b in TREE_BUILDERS.items()}

"""Random tree embeddings and the tree-embedding game.

Everything here works on any graph object exposing ``neighbors(v)``,
``num_vertices``, ``source``, ``target`` and ``column_of(v)``:  a full
:class:`~weldroute.weldedgraph.WeldedTreesInstance`, or a
:class:`LazyWeldedTrees` whose weld cycle is only revealed where an embedding
actually looks.  The lazy graph makes a fresh random graph per Monte Carlo
trial affordable at large ``n``.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from weldroute.classical.trees import RootedTree, builtin_strategies, path_tree
from weldroute.errors import EmbeddingError, ValidationError
from weldroute.rng import as_pyrandom
from weldroute.weldedgraph import WeldedTreesInstance, build_instance


class LazyWeldedTrees:
    """Welded-trees graph with the weld cycle drawn on demand.

    Uses the heap layout of :func:`~weldroute.weldedgraph.build_instance`.  The
    weld is the cyclic interleaving ``l[0] r[0] l[1] r[1] ...`` of two uniformly
    random leaf orders; both orders are uniform random bijections revealed one
    entry at a time, which is exact: conditioned on what has been revealed, the
    rest is again a uniform bijection.
    """

    def __init__(self, n: int, rng):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.half = 2 ** (n + 1) - 1
        self.num_vertices = 2 * self.half
        self.source = 0
        self.target = self.half
        self.m = 2**n
        self.first_leaf = self.m - 1
        self._rnd = as_pyrandom(rng)
        # leaf number -> cycle position and back, for each side
        self._lpos: dict[int, int] = {}
        self._lat: dict[int, int] = {}
        self._rpos: dict[int, int] = {}
        self._rat: dict[int, int] = {}

    def _reveal(self, fwd: dict, inv: dict, key: int) -> int:
        x = fwd.get(key)
        if x is None:
            m = self.m
            if 2 * len(inv) < m:
                x = self._rnd.randrange(m)
                while x in inv:
                    x = self._rnd.randrange(m)
            else:
                x = self._rnd.choice([y for y in range(m) if y not in inv])
            fwd[key] = x
            inv[x] = key
        return x

    def neighbors(self, v: int) -> tuple[int, ...]:
        half = self.half
        if v < half:
            h, off = v, 0
        else:
            h, off = v - half, half
        if h == 0:
            return (off + 1, off + 2)
        fl = self.first_leaf
        if h < fl:
            return (off + (h - 1) // 2, off + 2 * h + 1, off + 2 * h + 2)
        leaf = h - fl
        m = self.m
        if off == 0:
            p = self._reveal(self._lpos, self._lat, leaf)
            return (
                (h - 1) // 2,
                half + fl + self._reveal(self._rat, self._rpos, p),
                half + fl + self._reveal(self._rat, self._rpos, (p - 1) % m),
            )
        p = self._reveal(self._rpos, self._rat, leaf)
        return (
            half + (h - 1) // 2,
            fl + self._reveal(self._lat, self._lpos, p),
            fl + self._reveal(self._lat, self._lpos, (p + 1) % m),
        )

    def column_of(self, v: int) -> int:
        if v < self.half:
            return (v + 1).bit_length() - 1
        return 2 * self.n + 1 - ((v - self.half + 1).bit_length() - 1)


def _column_fn(graph) -> Callable[[int], int]:
    if isinstance(graph, WeldedTreesInstance):
        col = graph.column.tolist()
        return col.__getitem__
    return graph.column_of


def random_nonroot(graph, rnd: random.Random) -> int:
    """Uniform vertex other than ``source`` and ``target``."""
    x = rnd.randrange(graph.num_vertices - 2)
    lo, hi = sorted((graph.source, graph.target))
    if x >= lo:
        x += 1
    if x >= hi:
        x += 1
    return x


@dataclass(frozen=True)
class Embedding:
    """Partial map from tree labels to vertices (``None`` where undefined)."""

    pi: tuple[int | None, ...]
    improper: bool
    # first label whose image hit source/target and stopped the process
    truncated_at: int | None = None

    def image(self) -> set[int]:
        return {v for v in self.pi if v is not None}


def _embed(nbrs, children, parent, root, rnd, source, target):
    """Embedding kernel on plain lists; ``-1`` marks undefined labels."""
    pi = [-1] * len(parent)
    pi[0] = root
    kids = children[0]
    if kids:
        nb = nbrs(root)
        if len(kids) > len(nb):
            raise EmbeddingError(f"root needs {len(kids)} children but has degree {len(nb)}")
        if len(kids) == 1:
            pi[kids[0]] = nb[rnd.randrange(len(nb))]
        else:
            for k, w in zip(kids, rnd.sample(nb, len(kids))):
                pi[k] = w
    for i in range(1, len(parent)):
        kids = children[i]
        if not kids:
            continue
        v = pi[i]
        if v < 0:
            continue
        if v == source or v == target:
            return pi, i
        u = pi[parent[i]]
        cands = [w for w in nbrs(v) if w != u]
        if len(kids) > len(cands):
            raise EmbeddingError(f"node {i} needs {len(kids)} children, vertex {v} offers {len(cands)}")
        if len(kids) == 1:
            pi[kids[0]] = cands[rnd.randrange(len(cands))]
        else:
            for k, w in zip(kids, rnd.sample(cands, len(kids))):
                pi[k] = w
    return pi, None


def random_embedding(graph, tree: RootedTree, root_vertex: int, rng) -> Embedding:
    """Embed ``tree`` at ``root_vertex``, children drawn without replacement.

    Children of a non-root node avoid the image of its parent.  If a non-leaf
    label lands on ``source`` or ``target`` the process stops there and the
    remaining labels stay undefined.
    """
    rnd = as_pyrandom(rng)
    pi, trunc = _embed(graph.neighbors, tree.children, tree.parent, root_vertex, rnd, graph.source, graph.target)
    defined = [v for v in pi if v >= 0]
    return Embedding(
        pi=tuple(v if v >= 0 else None for v in pi),
        improper=len(set(defined)) != len(defined),
        truncated_at=trunc,
    )


class Game3Outcome(NamedTuple):
    win: bool
    reason: str | None  # "intersect", "improper" or None


def validate_game3_trees(trees: Sequence[RootedTree]) -> int:
    """Check the tree list of the embedding game and return its ``t``."""
    if len(trees) < 2:
        raise ValidationError("need at least the source and target trees")
    t = trees[0].t
    if len(trees) != t + 2:
        raise ValidationError(f"{len(trees)} trees given, the game with t={t} needs {t + 2}")
    for i, tr in enumerate(trees):
        if tr.t != t:
            raise ValidationError(f"tree {i} has {tr.t} edges, expected {t}")
        cap = 2 if i < 2 else 3
        if len(tr.children[0]) > cap:
            raise ValidationError(f"tree {i} root has {len(tr.children[0])} children, cap {cap}")
    return t


def _prepare(trees: Sequence[RootedTree]):
    return [(tr.children, tr.parent) for tr in trees]


def _play_game3(graph, specs, rnd: random.Random) -> Game3Outcome:
    s, t = graph.source, graph.target
    nbrs = graph.neighbors
    owner: dict[int, int] = {}
    for idx, (children, parent) in enumerate(specs):
        if idx == 0:
            root = s
        elif idx == 1:
            root = t
        else:
            root = random_nonroot(graph, rnd)
        pi, _ = _embed(nbrs, children, parent, root, rnd, s, t)
        mine = set()
        for v in pi:
            if v < 0:
                continue
            if v in mine:
                return Game3Outcome(True, "improper")
            mine.add(v)
            if v in owner:
                return Game3Outcome(True, "intersect")
        for v in mine:
            owner[v] = idx
    return Game3Outcome(False, None)


def game3_play(graph, trees: Sequence[RootedTree], rng) -> Game3Outcome:
    """One round of the tree-embedding game.

    Trees 0 and 1 are rooted at ``source`` and ``target``; the others at
    vertices drawn uniformly (with replacement) from the rest.  The player
    wins when two images meet or one embedding is improper.  A truncated
    embedding has reached ``source``/``target`` and therefore already meets
    tree 0 or 1 (or itself).
    """
    validate_game3_trees(trees)
    return _play_game3(graph, _prepare(trees), as_pyrandom(rng))


class RateEstimate(NamedTuple):
    rate: float
    stderr: float
    wins: int
    trials: int


def wilson_halfwidth(wins: int, trials: int, z: float = 1.0) -> float:
    if trials == 0:
        return float("nan")
    p = wins / trials
    z2 = z * z
    return z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / (1 + z2 / trials)


def make_estimate(wins: int, trials: int) -> RateEstimate:
    """Raw rate with the z=1 Wilson half-width as its standard error."""
    rate = wins / trials if trials else float("nan")
    return RateEstimate(rate, wilson_halfwidth(wins, trials), wins, trials)


def resolve_strategy(strategy) -> Callable[[int], list[RootedTree]]:
    if isinstance(strategy, str):
        try:
            return builtin_strategies()[strategy]
        except KeyError:
            raise ValueError(f"unknown strategy {strategy!r}; choose from {sorted(builtin_strategies())}") from None
    return strategy


BLOCK = 2048


def _game3_block(args) -> int:
    n, specs, trials, seed, lazy = args
    rnd = random.Random(seed)
    wins = 0
    for _ in range(trials):
        if lazy:
            g = LazyWeldedTrees(n, rnd)
        else:
            g = build_instance(n, rnd.getrandbits(63))
        wins += _play_game3(g, specs, rnd).win
    return wins


def _blocks(trials: int, rng) -> list[tuple[int, int]]:
    gen = rng if isinstance(rng, np.random.Generator) else None
    nblocks = -(-trials // BLOCK)
    if gen is not None:
        seeds = gen.integers(0, 2**63, size=nblocks).tolist()
    else:
        rnd = as_pyrandom(rng)
        seeds = [rnd.getrandbits(63) for _ in range(nblocks)]
    sizes = [BLOCK] * (trials // BLOCK) + ([trials % BLOCK] if trials % BLOCK else [])
    return list(zip(sizes, seeds))


def _run_blocks(fn, jobs, workers: int) -> list[int]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def estimate_game3(n: int, t: int, strategy, trials: int, rng, lazy: bool = True, workers: int = 1) -> RateEstimate:
    """Monte Carlo win rate of the tree-embedding game; fresh graph per trial.

    Trials are split into fixed-size blocks seeded up front from ``rng``, so
    the estimate does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    trees = resolve_strategy(strategy)(t)
    validate_game3_trees(trees)
    specs = _prepare(trees)
    jobs = [(n, specs, size, seed, lazy) for size, seed in _blocks(trials, rng)]
    wins = sum(_run_blocks(_game3_block, jobs, workers))
    return make_estimate(wins, trials)


def _middle_block(args) -> int:
    n, t, trials, seed = args
    rnd = random.Random(seed)
    tree = path_tree(t, 3)
    lo, hi = n // 2 + 1, (3 * n) // 2
    hits = 0
    for _ in range(trials):
        g = LazyWeldedTrees(n, rnd)
        a = random_embedding(g, tree, random_nonroot(g, rnd), rnd).image()
        b = random_embedding(g, tree, random_nonroot(g, rnd), rnd).image()
        hits += any(lo <= g.column_of(v) <= hi for v in a & b)
    return hits


def estimate_middle_intersection(n: int, t: int, trials: int, rng, workers: int = 1) -> RateEstimate:
    """P(two randomly rooted path trees meet inside the middle columns)."""
    jobs = [(n, t, size, seed) for size, seed in _blocks(trials, rng)]
    return make_estimate(sum(_run_blocks(_middle_block, jobs, workers)), trials)


def _improper_block(args) -> int:
    n, t, trials, seed = args
    rnd = random.Random(seed)
    tree = path_tree(t, 3)
    hits = 0
    for _ in range(trials):
        g = LazyWeldedTrees(n, rnd)
        hits += random_embedding(g, tree, random_nonroot(g, rnd), rnd).improper
    return hits


def estimate_improper(n: int, t: int, trials: int, rng, workers: int = 1) -> RateEstimate:
    """Per-tree improperness rate of a randomly rooted path tree."""
    jobs = [(n, t, size, seed) for size, seed in _blocks(trials, rng)]
    return make_estimate(sum(_run_blocks(_improper_block, jobs, workers)), trials)


def _extremity_block(args) -> int:
    n, t, trials, seed = args
    rnd = random.Random(seed)
    tree = path_tree(t, 3)
    lim = n // 2
    hits = 0
    for _ in range(trials):
        g = LazyWeldedTrees(n, rnd)
        while True:
            root = random_nonroot(g, rnd)
            if g.column_of(root) >= math.ceil(3 * n / 4):
                break
        img = random_embedding(g, tree, root, rnd).image()
        hits += any(g.column_of(v) <= lim for v in img)
    return hits


def estimate_extremity(n: int, t: int, trials: int, rng, workers: int = 1) -> RateEstimate:
    """P(a path tree rooted at column >= 3n/4 reaches columns 0..n/2)."""
    jobs = [(n, t, size, seed) for size, seed in _blocks(trials, rng)]
    return make_estimate(sum(_run_blocks(_extremity_block, jobs, workers)), trials)


class UniformityRow(NamedTuple):
    n: int
    tree: str
    node: int
    k: int
    chi2: float
    dof: int
    pvalue: float
    samples: int


def column_uniformity(
    graph,
    tree: RootedTree,
    node: int,
    trials: int,
    rng,
    columns: Sequence[int] | None = None,
    tree_name: str = "tree",
    min_expected: float = 5.0,
) -> list[UniformityRow]:
    """Chi-square test that ``pi(node)`` is uniform within each column.

    ``graph`` is either a fixed :class:`WeldedTreesInstance` or a height
    ``n``, in which case every trial draws a fresh lazily welded graph.  The
    tree is rooted uniformly outside ``source``/``target``.  Columns with a
    single vertex, or with fewer than ``min_expected`` samples per vertex, are
    skipped.
    """
    if not 0 <= node <= tree.t:
        raise ValueError(f"node {node} not in tree with {tree.t} edges")
    rnd = as_pyrandom(rng)
    fresh = isinstance(graph, (int, np.integer))
    if fresh:
        n = int(graph)
        g = LazyWeldedTrees(n, rnd)
        col = np.array([g.column_of(v) for v in range(g.num_vertices)])
    else:
        g = graph
        n = g.n
        col = np.asarray(g.column)
    counts = np.zeros(g.num_vertices, dtype=np.int64)
    s, t = g.source, g.target
    for _ in range(trials):
        if fresh:
            g = LazyWeldedTrees(n, rnd)
        pi, _ = _embed(g.neighbors, tree.children, tree.parent, random_nonroot(g, rnd), rnd, s, t)
        v = pi[node]
        if v >= 0:
            counts[v] += 1
    if columns is None:
        columns = range(2 * n + 2)
    rows = []
    for k in columns:
        members = np.flatnonzero(col == k)
        obs = counts[members]
        total = int(obs.sum())
        if members.size < 2 or total < min_expected * members.size:
            continue
        chi2, p = stats.chisquare(obs)
        rows.append(UniformityRow(n, tree_name, node, int(k), float(chi2), int(members.size - 1), float(p), total))
    return rows

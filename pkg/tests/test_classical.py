import math
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from oracles import N1_ADJ, birthday_win, game2_exact, game3_exact
from weldroute import build_instance, oracle_query
from weldroute.classical.embedding import (
    LazyWeldedTrees,
    _play_game3,
    column_uniformity,
    estimate_extremity,
    estimate_game3,
    estimate_improper,
    estimate_middle_intersection,
    game3_play,
    random_embedding,
    random_nonroot,
    wilson_halfwidth,
)
from weldroute.classical.flooding import run_flooding_baseline
from weldroute.classical.game2 import (
    TREE_SELF_HIT,
    TREES_INTERSECT,
    Extend,
    NewRoot,
    game1_wins,
    game2_play,
    legal_ports,
    path_strategy,
)
from weldroute.classical.trees import (
    RootedTree,
    balanced_tree,
    builtin_strategies,
    game3_trees,
    path_tree,
    stars_then_paths,
)
from weldroute.errors import EmbeddingError, InvalidMoveError, ValidationError
from weldroute.rng import stream
from weldroute.weldedgraph import PortGraph, WeldedTreesInstance

# --- trees -------------------------------------------------------------------


@pytest.mark.parametrize("t", range(0, 33))
def test_builders_valid(t):
    for name, fn in builtin_strategies().items():
        trees = fn(t)
        assert len(trees) == t + 2
        assert all(tr.t == t for tr in trees)
        assert [tr.root_arity_cap for tr in trees] == [2, 2] + [3] * t
    assert all(len(c) <= 1 for c in path_tree(t).children[1:])


def test_balanced_saturates_root():
    assert len(balanced_tree(6, 3).children[0]) == 3
    assert len(balanced_tree(6, 2).children[0]) == 2
    assert balanced_tree(6, 3).parent == (-1, 0, 0, 0, 1, 1, 2)
    assert stars_then_paths(5, 3).parent == (-1, 0, 0, 0, 1, 2)


def test_tree_invariants():
    with pytest.raises(ValidationError):
        RootedTree((0,))
    with pytest.raises(ValidationError):
        RootedTree((-1, 0, 2))
    with pytest.raises(ValidationError):
        RootedTree((-1, 0, 0, 0), root_arity_cap=2)
    with pytest.raises(ValidationError):
        RootedTree((-1, 0, 1, 1, 1))


# --- embeddings --------------------------------------------------------------


def test_single_edge_from_source_is_uniform():
    g = build_instance(1, 0)
    rnd = random.Random(2)
    tree = path_tree(1, 2)
    c = Counter(random_embedding(g, tree, g.source, rnd).pi[1] for _ in range(10_000))
    assert set(c) == set(g.neighbors(g.source))
    for v in c.values():
        assert abs(v / 10_000 - 0.5) < 3 * math.sqrt(0.25 / 10_000)


def test_no_backtracking_and_adjacency():
    g = build_instance(4, 1)
    rnd = random.Random(0)
    tree = balanced_tree(12, 3)
    for _ in range(2000):
        emb = random_embedding(g, tree, random_nonroot(g, rnd), rnd)
        for j in range(1, len(tree.parent)):
            v, u = emb.pi[j], emb.pi[tree.parent[j]]
            if v is None:
                continue
            assert v in g.neighbors(u)
            if tree.parent[j] > 0:
                assert v != emb.pi[tree.parent[tree.parent[j]]]
        kids = tree.children[0]
        assert len({emb.pi[k] for k in kids}) == len(kids)
        defined = [v for v in emb.pi if v is not None]
        assert emb.improper == (len(set(defined)) != len(defined))


def test_path_of_two_never_returns_to_source():
    g = build_instance(3, 2)
    rnd = random.Random(1)
    for _ in range(2000):
        assert random_embedding(g, path_tree(2, 2), g.source, rnd).pi[2] != g.source


def test_truncation_at_target():
    g = build_instance(1, 0)
    rnd = random.Random(3)
    seen = False
    for _ in range(500):
        emb = random_embedding(g, path_tree(4), random_nonroot(g, rnd), rnd)
        k = emb.truncated_at
        if k is not None:
            seen = True
            assert emb.pi[k] in (g.source, g.target)
            assert all(v is None for v in emb.pi[k + 1:])
    assert seen


def test_embedding_arity_error():
    g = build_instance(2, 0)
    with pytest.raises(EmbeddingError):
        random_embedding(g, RootedTree((-1, 0, 0, 0)), g.source, 0)


def test_lazy_graph_matches_structure():
    rnd = random.Random(5)
    for n in (1, 2, 3, 5):
        g = LazyWeldedTrees(n, rnd)
        adj = {v: g.neighbors(v) for v in range(g.num_vertices)}
        for v, nb in adj.items():
            assert len(nb) == (2 if v in (g.source, g.target) else 3)
            for w in nb:
                assert v in adj[w]
                assert abs(g.column_of(v) - g.column_of(w)) == 1
        # same invariants as a built instance, checked by the package validator
        off = np.cumsum([0] + [len(adj[v]) for v in range(g.num_vertices)])
        pg = PortGraph.from_adjacency([adj[v] for v in range(g.num_vertices)])
        WeldedTreesInstance(n, pg.offsets, pg.heads, pg.rev, np.arange(1, g.num_vertices + 1), g.source, g.target)
        assert off[-1] == pg.num_arcs


def test_lazy_weld_is_uniform_n2():
    rnd = random.Random(8)
    counts = Counter()
    for _ in range(7200):
        g = LazyWeldedTrees(2, rnd)
        counts[frozenset((u, w) for u in range(3, 7) for w in g.neighbors(u) if w >= 7)] += 1
    assert len(counts) == 72
    assert chisquare(list(counts.values())).pvalue > 0.001


def test_fixed_instance_uniformity_rows():
    rows = column_uniformity(build_instance(3, 1), path_tree(4), 4, 20_000, stream(3), tree_name="paths")
    assert len(rows) >= 3
    assert {r.tree for r in rows} == {"paths"}
    assert all(r.dof == 2 ** min(r.k, 7 - r.k) - 1 for r in rows)
    with pytest.raises(ValueError):
        column_uniformity(3, path_tree(4), 5, 10, stream(3))


# --- game 3 ------------------------------------------------------------------


def test_game3_t0_never_wins():
    g = build_instance(3, 0)
    for seed in range(50):
        assert game3_play(g, game3_trees("paths", 0), seed) == (False, None)


@pytest.mark.parametrize("k", [2, 4, 8])
def test_root_draws_birthday(k):
    # k zero-edge random trees: only root collisions can win
    g = build_instance(2, 3)
    specs = [(((),), (-1,))] * (k + 2)
    rnd = random.Random(k)
    trials = 20_000
    wins = sum(_play_game3(g, specs, rnd).win for _ in range(trials))
    exact = birthday_win(g.num_vertices, k)
    assert abs(wins / trials - exact) <= 3 * math.sqrt(exact * (1 - exact) / trials)


def test_game3_validation():
    g = build_instance(2, 0)
    with pytest.raises(ValidationError):
        game3_play(g, game3_trees("paths", 2)[:-1], 0)
    bad = game3_trees("paths", 2)
    bad[0] = RootedTree((-1, 0, 0), 3)  # fine: two root children
    game3_play(g, bad, 0)
    bad = game3_trees("paths", 3)
    bad[0] = RootedTree((-1, 0, 0, 0), 3)  # three root children at source
    with pytest.raises(ValidationError):
        game3_play(g, bad, 0)


def test_game3_n1_t1_exact():
    exact = game3_exact([tr.parent for tr in game3_trees("paths", 1)])
    assert exact == pytest.approx(5 / 6)
    est = estimate_game3(1, 1, "paths", 20_000, stream(4), lazy=True)
    assert abs(est.rate - 5 / 6) <= 3 * math.sqrt(5 / 36 / 20_000)


def test_estimate_game3_properties():
    a = estimate_game3(6, 4, "paths", 4000, stream(1))
    b = estimate_game3(6, 4, "paths", 4000, stream(1))
    assert a == b
    assert 0 <= a.rate <= 1 and a.trials == 4000
    small = estimate_game3(6, 4, "paths", 1000, stream(2))
    assert small.stderr > a.stderr
    assert estimate_game3(6, 4, "paths", 5000, stream(5), workers=1) == estimate_game3(
        6, 4, "paths", 5000, stream(5), workers=2
    )
    with pytest.raises(ValueError):
        estimate_game3(6, 4, "paths", 0, stream(1))
    with pytest.raises(ValueError):
        estimate_game3(6, 4, "nope", 10, stream(1))


def test_doubling_t_increases_rate():
    lo = estimate_game3(10, 4, "paths", 20_000, stream(6))
    hi = estimate_game3(10, 8, "paths", 20_000, stream(7))
    assert hi.rate > lo.rate + 3 * math.hypot(lo.stderr, hi.stderr)


def test_wilson():
    assert math.isnan(wilson_halfwidth(0, 0))
    assert wilson_halfwidth(0, 100) > 0
    assert wilson_halfwidth(50, 400) < wilson_halfwidth(25, 100)


def test_lemma_estimators_decrease():
    ns = [4, 6, 8, 10, 12]
    for est in (estimate_middle_intersection, estimate_improper, estimate_extremity):
        rates = [est(n, 8, 20_000, stream(12, est.__name__, n)) for n in ns]
        for a, b in zip(rates, rates[1:]):
            assert b.rate <= a.rate + 3 * math.hypot(a.stderr, b.stderr), (est.__name__, rates)
        assert rates[-1].rate < rates[0].rate


# --- game 2 ------------------------------------------------------------------


def test_game2_t0():
    tr = game2_play(build_instance(2, 0), path_strategy(), 0, 0)
    assert tr.queries == [] and not tr.won
    assert tr.roots == [tr.source_id, tr.target_id]


def strat_random(rnd):
    """Random legal-ish player: mixes fresh roots and extensions."""

    def play(trace):
        if rnd.random() < 0.3:
            return NewRoot()
        r = rnd.choice(trace.roots)
        opts = [i for i in sorted(trace.I[r]) if legal_ports(trace, i)]
        if not opts:
            return NewRoot()
        return Extend(r, rnd.choice(opts))

    return play


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(2, 5), t=st.integers(0, 25))
def test_game2_trace_legality(seed, n, t):
    inst = build_instance(n, seed)
    tr = game2_play(inst, strat_random(random.Random(seed)), t, seed)
    sid, tid = tr.source_id, tr.target_id
    used = set()
    answers = set()
    born = {sid, tid}
    for q in tr.queries:
        if q.ident in (sid, tid):
            assert q.port != 3
        assert (q.ident, q.port) not in used
        assert (q.ident, q.port) not in answers
        assert oracle_query(inst, q.ident, q.port) == q.answer
        used.add((q.ident, q.port))
        answers.add((q.answer.id, q.answer.port))
        born |= {q.ident, q.answer.id}
    assert set().union(*tr.I.values()) <= born | set(tr.roots)
    assert len(tr.roots) == len(set(tr.roots))
    if not tr.won:
        assert len(tr.queries) == t


def test_game2_win_conditions_hand_built():
    inst = build_instance(1, 0)
    # walking source -> leaf -> right leaf -> target must hit target's set
    tr = game2_play(inst, path_strategy(), 10, 1)
    assert tr.won
    assert tr.win_condition in (TREES_INTERSECT, TREE_SELF_HIT)


def test_game2_invalid_moves():
    inst = build_instance(2, 0)
    with pytest.raises(InvalidMoveError):
        game2_play(inst, lambda tr: Extend(tr.source_id, tr.target_id), 1, 0)
    with pytest.raises(InvalidMoveError):
        game2_play(inst, lambda tr: Extend(12345, 12345), 1, 0)
    # source has only two legal ports
    with pytest.raises(InvalidMoveError):
        game2_play(inst, lambda tr: Extend(tr.source_id, tr.source_id), 3, 0)


def test_game2_n1_exact_path():
    assert game2_exact(path_strategy, 4) == pytest.approx(0.75)


def test_game1_post_processor():
    inst = build_instance(2, 5)
    trace = game2_play(inst, path_strategy(), 40, 2)
    path = game1_wins(trace.source_id, trace.target_id, trace.queries)
    reach_target = any(q.answer.id == trace.target_id or q.ident == trace.target_id for q in trace.queries)
    assert path == reach_target
    assert not game1_wins(trace.source_id, trace.target_id, [])


# --- flooding ----------------------------------------------------------------


def test_flood_hand_trace_n1():
    res = run_flooding_baseline(build_instance(1, 3), 4)
    assert res.messages == 8 and res.bits_sent == 32
    assert res.rounds == 3 and res.success
    assert res.ledger.per_round == [8, 16, 8]


def test_flood_hand_built_graph():
    g = PortGraph.from_adjacency([N1_ADJ[u] for u in range(6)])
    g.source, g.target = 0, 5
    assert run_flooding_baseline(g, 2).bits_sent == 16


@pytest.mark.parametrize("n", range(1, 11))
def test_flood_reaches_everyone(n):
    for seed in range(5):
        res = run_flooding_baseline(build_instance(n, seed), 8)
        assert res.success
        assert res.bits_sent >= 8 * (2 ** (n + 2) - 3)
        assert res.messages <= 2 * (3 * 2 ** (n + 1) - 4)
    with pytest.raises(ValueError):
        run_flooding_baseline(build_instance(n, 0), 0)

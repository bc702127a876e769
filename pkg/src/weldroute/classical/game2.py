"""Oracle exploration games.

The player of the oracle game knows every identifier but no edges and learns
the graph by querying ``(id, port)`` pairs.  :func:`game2_play` runs the
randomized-exploration version, in which the engine owns all randomness (new
root draws and port choices) and a strategy only picks which exploration to
extend.  :func:`game1_wins` post-processes any query trace for the plain
path-finding goal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Union

from weldroute.errors import InvalidMoveError
from weldroute.rng import as_pyrandom
from weldroute.weldedgraph import OracleAnswer, WeldedTreesInstance, oracle_query

TREES_INTERSECT = "trees-intersect"
TREE_SELF_HIT = "tree-self-hit"


@dataclass(frozen=True)
class NewRoot:
    """Step 1a: start an exploration at a fresh uniformly random identifier."""


@dataclass(frozen=True)
class Extend:
    """Step 1b: query from ``ident``, a member of the exploration rooted at ``root``."""

    root: int
    ident: int


Move = Union[NewRoot, Extend]


@dataclass(frozen=True)
class Query:
    ident: int
    port: int
    answer: OracleAnswer
    root: int


@dataclass
class GameTrace:
    source_id: int
    target_id: int
    roots: list[int] = field(default_factory=list)
    I: dict[int, set[int]] = field(default_factory=dict)
    queries: list[Query] = field(default_factory=list)
    win_condition: str | None = None

    def __post_init__(self):
        if not self.roots:
            self.roots = [self.source_id, self.target_id]
            self.I = {self.source_id: {self.source_id}, self.target_id: {self.target_id}}

    @property
    def won(self) -> bool:
        return self.win_condition is not None

    def explored(self) -> set[int]:
        out: set[int] = set()
        for members in self.I.values():
            out |= members
        return out


Strategy = Callable[[GameTrace], Move]


def legal_ports(trace: GameTrace, ident: int) -> list[int]:
    """Ports allowed for a query from ``ident`` given the trace so far."""
    used = {(q.ident, q.port) for q in trace.queries}
    reverse = {(q.answer.id, q.answer.port) for q in trace.queries}
    out = []
    for p in (1, 2, 3):
        if p == 3 and ident in (trace.source_id, trace.target_id):
            continue
        if (ident, p) in used or (ident, p) in reverse:
            continue
        out.append(p)
    return out


def evaluate_win(trace: GameTrace) -> str | None:
    """Check both winning conditions on the whole trace."""
    roots = trace.roots
    for i, r in enumerate(roots):
        for r2 in roots[i + 1:]:
            if trace.I[r] & trace.I[r2]:
                return TREES_INTERSECT
    for r in roots:
        members = trace.I[r]
        for i, q in enumerate(trace.queries):
            if q.ident not in members:
                continue
            if q.answer.id == r:
                return TREE_SELF_HIT
            for j, q2 in enumerate(trace.queries):
                if j != i and q2.ident in members and q2.ident != q.ident and q2.answer.id == q.answer.id:
                    return TREE_SELF_HIT
    return None


def game2_play(inst: WeldedTreesInstance, strategy: Strategy, t: int, rng) -> GameTrace:
    """Play ``t`` turns of randomized exploration; stops at the first win.

    Raises :class:`InvalidMoveError` for an illegal extension or when the
    chosen identifier has no legal port left.
    """
    rnd = as_pyrandom(rng)
    ids = inst.ids.tolist()
    trace = GameTrace(int(ids[inst.source]), int(ids[inst.target]))
    for _ in range(t):
        move = strategy(trace)
        if isinstance(move, NewRoot):
            seen = trace.explored()
            if len(seen) >= len(ids):
                raise InvalidMoveError("no unexplored identifier left to draw")
            while True:
                root = ids[rnd.randrange(len(ids))]
                if root not in seen:
                    break
            trace.roots.append(root)
            trace.I[root] = {root}
            ident = root
        elif isinstance(move, Extend):
            root, ident = move.root, move.ident
            if root not in trace.I:
                raise InvalidMoveError(f"{root} is not a root")
            if ident not in trace.I[root]:
                raise InvalidMoveError(f"{ident} has not been reached from root {root}")
        else:
            raise InvalidMoveError(f"unknown move {move!r}")
        ports = legal_ports(trace, ident)
        if not ports:
            raise InvalidMoveError(f"identifier {ident} has no legal port left")
        port = ports[rnd.randrange(len(ports))]
        answer = oracle_query(inst, ident, port)
        trace.queries.append(Query(ident, port, answer, root))
        trace.I[root].add(answer.id)
        trace.win_condition = evaluate_win(trace)
        if trace.won:
            break
    return trace


def path_strategy(root: str = "source") -> Strategy:
    """Always extend the most recently discovered identifier of one root."""

    def play(trace: GameTrace) -> Move:
        r = trace.source_id if root == "source" else trace.target_id
        last = r
        for q in trace.queries:
            if q.root == r:
                last = q.answer.id
        return Extend(r, last)

    return play


def fresh_roots_strategy(k: int) -> Strategy:
    """Open ``k`` new roots first, then grow each as a path in turn."""

    def play(trace: GameTrace) -> Move:
        extra = trace.roots[2:]
        if len(extra) < k:
            return NewRoot()
        turn = len(trace.queries) - k
        r = trace.roots[turn % len(trace.roots)]
        last = r
        for q in trace.queries:
            if q.root == r:
                last = q.answer.id
        return Extend(r, last)

    return play


def game1_wins(source_id: int, target_id: int, queries: Iterable[Query]) -> bool:
    """True iff the queried edges contain a source-target path."""
    adj: dict[int, set[int]] = {}
    for q in queries:
        if q.answer.is_bottom:
            continue
        adj.setdefault(q.ident, set()).add(q.answer.id)
        adj.setdefault(q.answer.id, set()).add(q.ident)
    seen = {source_id}
    todo = deque([source_id])
    while todo:
        u = todo.popleft()
        if u == target_id:
            return True
        for w in adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return False


def estimate_game2(inst_factory, strategy_factory, t: int, trials: int, rng):
    """Monte Carlo win rate; ``inst_factory(seed)`` supplies a fresh instance per trial."""
    from weldroute.classical.embedding import make_estimate

    rnd = as_pyrandom(rng)
    wins = 0
    for _ in range(trials):
        inst = inst_factory(rnd.getrandbits(63))
        wins += game2_play(inst, strategy_factory(), t, rnd).won
    return make_estimate(wins, trials)
